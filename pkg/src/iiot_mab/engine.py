"""Slot-synchronous world loop.

Each SU: packets due this SU are collected, every agent holding one picks a
channel through its policy, the gNB resolves collisions and outages, rewards
flow back, and failed packets are rescheduled for the next SU. The gNB
broadcast from SU t is available to decisions from SU t+1 on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import metrics, phy, traffic
from .agents import NaPool, RaPool, TsPool, UcbPool, make_agents
from .config import ScenarioConfig

CH_IDLE, CH_SUCCESS, CH_COLLISION = 0, 1, 2


class EngineError(RuntimeError):
    """A world-loop contract was violated; the run is not salvageable."""


@dataclass(frozen=True)
class TransmissionIntent:
    agent_id: int
    channel: int
    is_retransmission: bool


@dataclass(frozen=True)
class FeedbackMessage:
    """Per-channel outcome broadcast by the gNB at the end of an SU.

    A channel is a success iff exactly one non-outage transmission occupied
    it; two or more transmissions collide regardless of link quality. Each
    agent derives its own reward by looking up the channel it used.
    """

    outcome: np.ndarray  # uint8 per channel: idle / success / collision

    @property
    def success_flags(self) -> np.ndarray:
        return (self.outcome == CH_SUCCESS).astype(np.float64)


def resolve_su(intents: list[TransmissionIntent], outage: np.ndarray,
               num_channels: int) -> tuple[FeedbackMessage, np.ndarray]:
    """Resolve one SU's transmissions; returns the broadcast and per-intent rewards.

    ``outage`` is the per-agent boolean outage oracle. Raises EngineError on a
    duplicate agent id (one intent per agent per SU is a hard precondition).
    """
    agent_ids = [i.agent_id for i in intents]
    if len(set(agent_ids)) != len(agent_ids):
        raise EngineError("duplicate agent id in one SU")
    outcome = np.zeros(num_channels, dtype=np.uint8)
    if not intents:
        return FeedbackMessage(outcome), np.zeros(0, dtype=np.int64)
    channels = np.array([i.channel for i in intents], dtype=np.int64)
    counts = np.bincount(channels, minlength=num_channels)
    lone = counts[channels] == 1
    rewards = (lone & ~outage[np.array(agent_ids)]).astype(np.int64)
    outcome[counts >= 2] = CH_COLLISION
    outcome[channels[rewards == 1]] = CH_SUCCESS
    # A lone transmission below the SINR threshold leaves its channel idle.
    return FeedbackMessage(outcome), rewards


class _PerAgentDriver:
    """Select/update adapter looping over independent per-agent policies."""

    def __init__(self, agents, needs_ctx: bool, num_channels: int):
        self.agents = agents
        self.needs_ctx = needs_ctx
        self.needs_flags = needs_ctx
        self.num_channels = num_channels

    def select_many(self, agent_ids, retx_flags, visible_flags) -> tuple[np.ndarray, list]:
        arms = np.empty(len(agent_ids), dtype=np.int64)
        ctxs = [None] * len(agent_ids)
        for i, agent_id in enumerate(agent_ids):
            ctx = None
            if self.needs_ctx:
                ctx = np.empty(self.num_channels + 1)
                ctx[:-1] = visible_flags
                ctx[-1] = retx_flags[i]
                ctxs[i] = ctx
            arms[i] = self.agents[agent_id].select(ctx)
        return arms, ctxs

    def update_many(self, agent_ids, arms, rewards, ctxs) -> None:
        for i, agent_id in enumerate(agent_ids):
            self.agents[agent_id].update(int(arms[i]), int(rewards[i]), ctxs[i])


class _PoolDriver:
    """Adapter for the batched per-kind agent pools."""

    def __init__(self, pool):
        self.pool = pool
        self.needs_flags = pool.needs_flags

    def select_many(self, agent_ids, retx_flags, visible_flags) -> tuple[np.ndarray, list]:
        return self.pool.select_many(agent_ids, retx_flags, visible_flags), None

    def update_many(self, agent_ids, arms, rewards, ctxs) -> None:
        self.pool.update_many(agent_ids, arms, rewards)


class Simulation:
    """One seeded run of a scenario. Strictly sequential over SUs."""

    def __init__(self, cfg: ScenarioConfig, seed: int, trace: bool = False):
        cfg.validate()
        self.cfg = cfg
        self.seed = seed
        self.num_channels = cfg.num_channels
        self.t = 0

        root = np.random.SeedSequence(seed)
        layout_seq, traffic_seq, agents_seq = root.spawn(3)
        self.layout = phy.build_layout(cfg.n_agents, cfg.geometry, cfg.radio, layout_seq)
        self.outage = self.layout.outage

        traffic_streams = traffic_seq.spawn(cfg.n_agents)
        self.sources = [
            traffic.TrafficSource(n, cfg.traffic, cfg.radio.t_ofdm_us,
                                  np.random.default_rng(traffic_streams[n]))
            for n in range(cfg.n_agents)
        ]
        self.agents = None
        kind = cfg.agent.kind
        if kind == "ts":
            self.pool = TsPool(cfg.n_agents, self.num_channels,
                               np.random.default_rng(agents_seq))
        elif kind == "na":
            self.pool = NaPool(cfg.n_agents, self.num_channels, agents_seq,
                               hidden=cfg.agent.na_hidden, lr=cfg.agent.na_lr)
        elif kind == "ucb":
            self.pool = UcbPool(cfg.n_agents, self.num_channels, agents_seq,
                                c=cfg.agent.ucb_c,
                                shuffle_cold_start=cfg.agent.ucb_shuffle_cold_start)
        elif kind == "ra":
            self.pool = RaPool(cfg.n_agents, self.num_channels, agents_seq)
        else:
            self.pool = None
            self.agents = make_agents(cfg.agent, cfg.n_agents, self.num_channels, agents_seq)
        if self.pool is not None:
            self._driver = _PoolDriver(self.pool)
        else:
            self._driver = _PerAgentDriver(self.agents, False, self.num_channels)

        self.pending: list[traffic.Packet | None] = [None] * cfg.n_agents
        self.queued: list[traffic.Packet | None] = [None] * cfg.n_agents
        self._arrival_bucket: dict[int, list[int]] = {}
        self._retx_bucket: dict[int, list[int]] = {}
        for n, src in enumerate(self.sources):
            self._arrival_bucket.setdefault(src.next_due_su, []).append(n)

        n_su = cfg.n_su
        self.attempts = np.zeros(n_su, dtype=np.int32)
        self.successes = np.zeros(n_su, dtype=np.int32)
        self.agent_rewards = np.zeros(cfg.n_agents, dtype=np.int64)
        self.agent_attempts = np.zeros(cfg.n_agents, dtype=np.int64)
        self.collision_losses = 0
        self.outage_losses = 0
        self.drops = 0

        # Broadcast success flags visible to decisions this SU; under the
        # optional one-SU feedback delay the broadcast sits in a FIFO first.
        self._zero_flags = np.zeros(self.num_channels)
        self._visible_flags = self._zero_flags
        self._feedback_fifo: list[np.ndarray] = [
            np.zeros(self.num_channels) for _ in range(cfg.feedback_delay_su)
        ]
        self._deferred: tuple | None = None

        self.trace = trace
        self.trace_feedback: list[np.ndarray] = []
        self.trace_intents: list[list[TransmissionIntent]] = []

    # -- one SU ----------------------------------------------------------

    def step(self) -> tuple[int, int]:
        """Advance one SU; returns (attempts, successes) for the metrics row."""
        t = self.t
        if t >= len(self.attempts):
            raise EngineError("stepping past the configured horizon")
        if self._deferred is not None:
            self._driver.update_many(*self._deferred)
            self._deferred = None

        admitted = self._admit_arrivals(t)
        transmitters = self._collect_transmitters(t, admitted)

        if not transmitters:
            self._push_flags(self._zero_flags)
            if self.trace:
                self.trace_feedback.append(np.zeros(self.num_channels, dtype=np.uint8))
                self.trace_intents.append([])
            self.t += 1
            return 0, 0

        ids = np.array(transmitters, dtype=np.int64)
        retx_flags = np.array(
            [self.pending[a].attempts > 0 for a in transmitters], dtype=np.float64
        )
        arms, ctxs = self._driver.select_many(ids, retx_flags, self._visible_flags)

        counts = np.bincount(arms, minlength=self.num_channels)
        occupancy = counts[arms]
        rewards = ((occupancy == 1) & ~self.outage[ids]).astype(np.int64)
        failed = rewards == 0
        self.collision_losses += int(np.count_nonzero(failed & (occupancy >= 2)))
        self.outage_losses += int(np.count_nonzero(failed & (occupancy == 1)))

        if self.cfg.feedback_delay_su:
            self._deferred = (ids, arms, rewards, ctxs)
        else:
            self._driver.update_many(ids, arms, rewards, ctxs)

        n_succ = 0
        retx_list = None
        for i, agent_id in enumerate(transmitters):
            packet = self.pending[agent_id]
            packet.attempts += 1
            if rewards[i]:
                n_succ += 1
                self.pending[agent_id] = None
                if self.queued[agent_id] is not None:
                    nxt = self.queued[agent_id]
                    self.queued[agent_id] = None
                    nxt.scheduled_su = t + 1
                    self.pending[agent_id] = nxt
                    if retx_list is None:
                        retx_list = self._retx_bucket.setdefault(t + 1, [])
                    retx_list.append(agent_id)
            else:
                packet.scheduled_su = t + 1
                if retx_list is None:
                    retx_list = self._retx_bucket.setdefault(t + 1, [])
                retx_list.append(agent_id)

        self.agent_attempts[ids] += 1
        self.agent_rewards[ids] += rewards
        self.attempts[t] = len(transmitters)
        self.successes[t] = n_succ

        success_flags = self._zero_flags
        if n_succ and (self._driver.needs_flags or self.trace):
            success_flags = np.zeros(self.num_channels)
            success_flags[arms[rewards == 1]] = 1.0
        self._push_flags(success_flags)

        if self.trace:
            intents = [
                TransmissionIntent(int(ids[i]), int(arms[i]), bool(retx_flags[i]))
                for i in range(len(ids))
            ]
            feedback, ref_rewards = resolve_su(intents, self.outage, self.num_channels)
            if not np.array_equal(ref_rewards, rewards):
                raise EngineError("fast path diverged from resolve_su")
            self.trace_feedback.append(feedback.outcome.copy())
            self.trace_intents.append(intents)

        self.t += 1
        return len(transmitters), n_succ

    def _push_flags(self, flags: np.ndarray) -> None:
        if self.cfg.feedback_delay_su:
            self._feedback_fifo.append(flags)
            self._visible_flags = self._feedback_fifo.pop(0)
        else:
            self._visible_flags = flags

    def _admit_arrivals(self, t: int) -> list[int]:
        arrivals = self._arrival_bucket.pop(t, None)
        if not arrivals:
            return []
        admitted = []
        for agent_id in arrivals:
            src = self.sources[agent_id]
            for packet in src.packets_due(t):
                if self.pending[agent_id] is None:
                    self.pending[agent_id] = packet
                    admitted.append(agent_id)
                elif self.cfg.traffic.queue_policy == "drop_old":
                    # URLLC freshness: the stale packet is abandoned.
                    self.drops += 1
                    self.pending[agent_id] = packet
                    admitted.append(agent_id)
                else:  # fifo1
                    if self.queued[agent_id] is not None:
                        self.drops += 1
                    self.queued[agent_id] = packet
            self._arrival_bucket.setdefault(src.next_due_su, []).append(agent_id)
        return admitted

    def _collect_transmitters(self, t: int, admitted: list[int]) -> list[int]:
        ready = set(admitted)
        for a in self._retx_bucket.pop(t, ()):
            pkt = self.pending[a]
            if pkt is not None and pkt.scheduled_su == t:
                ready.add(a)
        return sorted(ready)

    # -- whole run -------------------------------------------------------

    def run(self) -> metrics.MetricsRecord:
        n_su = self.cfg.n_su
        while self.t < n_su:
            self.step()
        return metrics.MetricsRecord(
            config_hash=self.cfg.config_hash(),
            seed=self.seed,
            t_su_s=self.cfg.radio.t_su_s,
            window_su=self.cfg.window_su,
            attempts=self.attempts,
            successes=self.successes,
            agent_rewards=self.agent_rewards,
            agent_attempts=self.agent_attempts,
            collision_losses=self.collision_losses,
            outage_losses=self.outage_losses,
            drops=self.drops,
        )


def run(cfg: ScenarioConfig, seed: int | None = None) -> metrics.MetricsRecord:
    """Execute one full scenario run; deterministic given (config, seed)."""
    if seed is None:
        seed = cfg.seeds[0]
    return Simulation(cfg, seed).run()
