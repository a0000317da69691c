"""Bandit policies mapping per-transmission binary feedback to channel choices.

Four learners share one interface: ``select(ctx)`` returns a 0-based channel
(arm) for the upcoming transmission, ``update(arm, reward, ctx)`` folds in the
binary outcome. Only the neural agent looks at ``ctx`` (the previous SU's
broadcast plus a retransmission flag); the others learn from their own
rewards alone. Every draw comes from the agent's private generator, so runs
replay bit-identically from (seed, history).
"""

from __future__ import annotations

import math

import numpy as np

from .config import AgentConfig


class RandomAccessAgent:
    """Uniform channel choice, no learning. Baseline for grant-free access."""

    def __init__(self, num_arms: int, rng: np.random.Generator):
        self.num_arms = num_arms
        self.rng = rng

    def select(self, ctx=None) -> int:
        return int(self.rng.integers(0, self.num_arms))

    def update(self, arm: int, reward: int, ctx=None) -> None:
        pass


class UcbAgent:
    """UCB1: optimism-weighted empirical means with exploration constant c.

    Arms never played take priority. By default the order in which they are
    first tried is a per-agent random permutation; with many identical agents
    sharing a slot, a fixed order keeps them in lockstep (same choice, same
    collision, same update) and they never coordinate. Ties in the warm phase
    break toward the lowest arm index.
    """

    def __init__(self, num_arms: int, rng: np.random.Generator, c: float = 2.0,
                 shuffle_cold_start: bool = True):
        self.num_arms = num_arms
        self.rng = rng
        self.c = c
        self.q = np.zeros(num_arms)
        self.n = np.zeros(num_arms, dtype=np.int64)
        self.t = 0
        if shuffle_cold_start:
            self._cold_order = rng.permutation(num_arms)
        else:
            self._cold_order = np.arange(num_arms)
        self._unplayed = num_arms

    def select(self, ctx=None) -> int:
        if self._unplayed:
            unplayed = self._cold_order[self.n[self._cold_order] == 0]
            return int(unplayed[0])
        index = self.q + self.c * np.sqrt(math.log(self.t) / self.n)
        return int(np.argmax(index))

    def update(self, arm: int, reward: int, ctx=None) -> None:
        if self.n[arm] == 0:
            self._unplayed -= 1
        self.n[arm] += 1
        self.t += 1
        self.q[arm] += (reward - self.q[arm]) / self.n[arm]


class TsAgent:
    """Thompson sampling over Bernoulli arms with Beta(successes+1, failures+1)."""

    def __init__(self, num_arms: int, rng: np.random.Generator):
        self.num_arms = num_arms
        self.rng = rng
        self.alpha = np.ones(num_arms)
        self.beta = np.ones(num_arms)

    def select(self, ctx=None) -> int:
        mu = self.rng.beta(self.alpha, self.beta)
        return int(np.argmax(mu))

    def update(self, arm: int, reward: int, ctx=None) -> None:
        if reward:
            self.alpha[arm] += 1.0
        else:
            self.beta[arm] += 1.0

    def posterior_mean(self) -> np.ndarray:
        return self.alpha / (self.alpha + self.beta)


class NeuralAgent:
    """Contextual bandit: a one-hidden-layer policy network trained by REINFORCE.

    Input is the last gNB broadcast (one success flag per channel) plus a
    retransmission flag; output is a softmax distribution over channels from
    which the arm is sampled. Updates take one score-function gradient step,
    loss = -(reward - baseline) * log p(arm | ctx), with a running-mean
    reward baseline. Non-finite gradients are rejected and counted.
    """

    def __init__(self, num_arms: int, rng: np.random.Generator, hidden: int = 64,
                 lr: float = 1e-2):
        self.num_arms = num_arms
        self.rng = rng
        self.hidden = hidden
        self.lr = lr
        n_in = num_arms + 1
        self.w1 = rng.normal(0.0, 1.0 / math.sqrt(n_in), size=(hidden, n_in))
        self.b1 = np.zeros(hidden)
        self.w2 = rng.normal(0.0, 0.3 / math.sqrt(hidden), size=(num_arms, hidden))
        self.b2 = np.zeros(num_arms)
        self.reward_sum = 0.0
        self.reward_count = 0
        self.rejected_steps = 0
        self._cache_ctx: np.ndarray | None = None
        self._cache_h: np.ndarray | None = None
        self._cache_p: np.ndarray | None = None

    def policy(self, ctx: np.ndarray) -> np.ndarray:
        """Forward pass; returns the K-way probability vector."""
        _, p = self._forward(ctx)
        return p

    def _forward(self, ctx: np.ndarray):
        h = np.tanh(self.w1 @ ctx + self.b1)
        logits = self.w2 @ h + self.b2
        logits = logits - logits.max()
        e = np.exp(logits)
        p = e / e.sum()
        self._cache_ctx, self._cache_h, self._cache_p = ctx, h, p
        return h, p

    def select(self, ctx: np.ndarray) -> int:
        if len(ctx) != self.num_arms + 1:
            raise ValueError(
                f"context must have length {self.num_arms + 1}, got {len(ctx)}"
            )
        _, p = self._forward(ctx)
        # Inverse-CDF sample; cheaper than rng.choice for one draw.
        u = self.rng.random()
        return int(min(np.searchsorted(np.cumsum(p), u), self.num_arms - 1))

    def baseline(self) -> float:
        if self.reward_count == 0:
            return 0.0
        return self.reward_sum / self.reward_count

    def update(self, arm: int, reward: int, ctx: np.ndarray) -> None:
        advantage = reward - self.baseline()
        self.reward_sum += reward
        self.reward_count += 1
        if advantage == 0.0:
            return
        grads = self._gradients(ctx, arm, advantage)
        if any(not np.all(np.isfinite(g)) for g in grads):
            self.rejected_steps += 1
            return
        gw1, gb1, gw2, gb2 = grads
        self.w1 -= self.lr * gw1
        self.b1 -= self.lr * gb1
        self.w2 -= self.lr * gw2
        self.b2 -= self.lr * gb2

    def _gradients(self, ctx: np.ndarray, arm: int, advantage: float):
        """Gradient of -(advantage) * log p(arm | ctx) w.r.t. all parameters."""
        if self._cache_ctx is ctx:
            h, p = self._cache_h, self._cache_p
        else:
            h, p = self._forward(ctx)
        dlogits = advantage * p
        dlogits[arm] -= advantage
        gw2 = np.outer(dlogits, h)
        gb2 = dlogits
        dh = self.w2.T @ dlogits
        dz1 = dh * (1.0 - h * h)
        gw1 = np.outer(dz1, ctx)
        gb1 = dz1
        return gw1, gb1, gw2, gb2

    def loss(self, ctx: np.ndarray, arm: int, advantage: float) -> float:
        """Score-function objective value; used by finite-difference checks."""
        h = np.tanh(self.w1 @ ctx + self.b1)
        logits = self.w2 @ h + self.b2
        logits = logits - logits.max()
        logp = logits[arm] - math.log(np.exp(logits).sum())
        return -advantage * logp


class RaPool:
    """All random-access agents of one run; one batched uniform draw per SU."""

    needs_flags = False

    def __init__(self, n_agents: int, num_arms: int, seed_seq: np.random.SeedSequence):
        self.n_agents = n_agents
        self.num_arms = num_arms
        self.rng = np.random.default_rng(seed_seq)

    def select_many(self, agent_ids, retx_flags=None, visible_flags=None) -> np.ndarray:
        return self.rng.integers(0, self.num_arms, size=len(agent_ids))

    def update_many(self, agent_ids, arms, rewards) -> None:
        pass


class UcbPool:
    """All UCB agents of one run, index computation batched over the due set.

    Exactly the ``UcbAgent`` rule per row: unplayed arms first (in the
    agent's cold-start order, drawn from its own substream), then the
    optimism index with ties to the lowest arm.
    """

    needs_flags = False

    def __init__(self, n_agents: int, num_arms: int, seed_seq: np.random.SeedSequence,
                 c: float = 2.0, shuffle_cold_start: bool = True):
        self.n_agents = n_agents
        self.num_arms = num_arms
        self.c = c
        self.q = np.zeros((n_agents, num_arms))
        self.n = np.zeros((n_agents, num_arms), dtype=np.int64)
        self.t = np.zeros(n_agents, dtype=np.int64)
        self._unplayed = np.full(n_agents, num_arms, dtype=np.int64)
        self._cold_order = np.empty((n_agents, num_arms), dtype=np.int64)
        for n, sub in enumerate(seed_seq.spawn(n_agents)):
            if shuffle_cold_start:
                self._cold_order[n] = np.random.default_rng(sub).permutation(num_arms)
            else:
                self._cold_order[n] = np.arange(num_arms)

    def select_many(self, agent_ids, retx_flags=None, visible_flags=None) -> np.ndarray:
        arms = np.empty(len(agent_ids), dtype=np.int64)
        cold = self._unplayed[agent_ids] > 0
        warm_ids = agent_ids[~cold]
        if len(warm_ids):
            index = self.q[warm_ids] + self.c * np.sqrt(
                np.log(self.t[warm_ids])[:, None] / self.n[warm_ids])
            arms[~cold] = np.argmax(index, axis=1)
        if np.any(cold):
            cold_pos = np.flatnonzero(cold)
            for i in cold_pos:
                order = self._cold_order[agent_ids[i]]
                fresh = order[self.n[agent_ids[i]][order] == 0]
                arms[i] = fresh[0]
        return arms

    def update_many(self, agent_ids, arms, rewards) -> None:
        first = self.n[agent_ids, arms] == 0
        if np.any(first):
            self._unplayed[agent_ids[first]] -= 1
        self.n[agent_ids, arms] += 1
        self.t[agent_ids] += 1
        self.q[agent_ids, arms] += (rewards - self.q[agent_ids, arms]) / self.n[agent_ids, arms]


class TsPool:
    """All Thompson-sampling agents of one run, with batched posterior draws.

    Semantically identical to one ``TsAgent`` per agent: each due agent draws
    an independent Beta(alpha_k, beta_k) per arm (via the gamma-ratio
    construction) and plays the argmax. Batching all due agents into a single
    gamma call per SU is an order of magnitude faster than per-agent calls,
    at the cost of drawing from one pool-level stream instead of per-agent
    substreams. Replay from a fixed run seed stays bit-identical.
    """

    needs_flags = False

    def __init__(self, n_agents: int, num_arms: int, rng: np.random.Generator):
        self.n_agents = n_agents
        self.num_arms = num_arms
        self.rng = rng
        self.alpha = np.ones((n_agents, num_arms))
        self.beta = np.ones((n_agents, num_arms))

    def select_many(self, agent_ids, retx_flags=None, visible_flags=None) -> np.ndarray:
        params = np.stack((self.alpha[agent_ids], self.beta[agent_ids]))
        g = self.rng.standard_gamma(params)
        mu = g[0] / (g[0] + g[1])
        return np.argmax(mu, axis=1)

    def update_many(self, agent_ids, arms, rewards) -> None:
        won = rewards.astype(bool)
        self.alpha[agent_ids[won], arms[won]] += 1.0
        self.beta[agent_ids[~won], arms[~won]] += 1.0

    def posterior_mean(self) -> np.ndarray:
        return self.alpha / (self.alpha + self.beta)


class NaPool:
    """All neural agents of one run, with batched forward/backward passes.

    Same math as ``NeuralAgent`` applied row-wise over the due agents: one
    stacked matmul per layer instead of per-agent ones. Weights are
    initialized from per-agent substreams (so the parameters of agent n do
    not depend on how many other agents exist); action sampling uses a
    pool-level stream.
    """

    needs_flags = True

    def __init__(self, n_agents: int, num_arms: int, seed_seq: np.random.SeedSequence,
                 hidden: int = 64, lr: float = 1e-2):
        self.n_agents = n_agents
        self.num_arms = num_arms
        self.hidden = hidden
        self.lr = lr
        n_in = num_arms + 1
        init_seqs = seed_seq.spawn(n_agents + 1)
        self.rng = np.random.default_rng(init_seqs[0])
        # float32 halves the memory traffic of the per-SU weight gathers,
        # which dominate the cost; the policy is stochastic anyway.
        self.w1 = np.empty((n_agents, hidden, n_in), dtype=np.float32)
        self.w2 = np.empty((n_agents, num_arms, hidden), dtype=np.float32)
        for n in range(n_agents):
            agent_rng = np.random.default_rng(init_seqs[n + 1])
            self.w1[n] = agent_rng.normal(0.0, 1.0 / math.sqrt(n_in), size=(hidden, n_in))
            self.w2[n] = agent_rng.normal(0.0, 0.3 / math.sqrt(hidden), size=(num_arms, hidden))
        self.b1 = np.zeros((n_agents, hidden), dtype=np.float32)
        self.b2 = np.zeros((n_agents, num_arms), dtype=np.float32)
        self.reward_sum = np.zeros(n_agents)
        self.reward_count = np.zeros(n_agents, dtype=np.int64)
        self.rejected_steps = 0
        self._cache: tuple | None = None

    def policy_many(self, agent_ids: np.ndarray, ctx: np.ndarray) -> np.ndarray:
        w1g = self.w1[agent_ids]
        w2g = self.w2[agent_ids]
        z1 = (w1g @ ctx[:, :, None])[:, :, 0] + self.b1[agent_ids]
        h = np.tanh(z1)
        logits = (w2g @ h[:, :, None])[:, :, 0] + self.b2[agent_ids]
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=1, keepdims=True)
        self._cache = (agent_ids, ctx, h, p, w2g)
        return p

    def select_many(self, agent_ids: np.ndarray, retx_flags: np.ndarray,
                    visible_flags: np.ndarray) -> np.ndarray:
        d = len(agent_ids)
        ctx = np.empty((d, self.num_arms + 1), dtype=np.float32)
        ctx[:, :-1] = visible_flags
        ctx[:, -1] = retx_flags
        p = self.policy_many(agent_ids, ctx)
        u = self.rng.random(d, dtype=np.float32)
        return (p.cumsum(axis=1) > u[:, None]).argmax(axis=1)

    def update_many(self, agent_ids: np.ndarray, arms: np.ndarray,
                    rewards: np.ndarray) -> None:
        cache_ids, ctx, h, p, w2g = self._cache
        if cache_ids is not agent_ids:
            raise RuntimeError("update_many must follow select_many for the same SU")
        baseline = np.where(self.reward_count[agent_ids] > 0,
                            self.reward_sum[agent_ids]
                            / np.maximum(self.reward_count[agent_ids], 1), 0.0)
        advantage = rewards - baseline
        self.reward_sum[agent_ids] += rewards
        self.reward_count[agent_ids] += 1
        live = advantage != 0.0
        if not np.any(live):
            return
        if np.all(live):
            ids, adv = agent_ids, advantage.astype(np.float32)
        else:
            ids = agent_ids[live]
            adv = advantage[live].astype(np.float32)
            ctx, h, p, arms, w2g = ctx[live], h[live], p[live], arms[live], w2g[live]
        dlogits = adv[:, None] * p
        dlogits[np.arange(len(ids)), arms] -= adv
        dh = np.einsum("dk,dkh->dh", dlogits, w2g)
        dz1 = dh * (1.0 - h * h)
        bad = ~(np.isfinite(dlogits).all(axis=1) & np.isfinite(dz1).all(axis=1))
        if np.any(bad):
            self.rejected_steps += int(bad.sum())
            keep = ~bad
            ids, dlogits, dz1, ctx, h = ids[keep], dlogits[keep], dz1[keep], ctx[keep], h[keep]
            if len(ids) == 0:
                return
        self.w2[ids] -= self.lr * np.einsum("dk,dh->dkh", dlogits, h)
        self.b2[ids] -= self.lr * dlogits
        self.w1[ids] -= self.lr * np.einsum("dh,dj->dhj", dz1, ctx)
        self.b1[ids] -= self.lr * dz1


class FixedChannelAgent:
    """Always plays one channel. Genie baseline for ceiling checks."""

    def __init__(self, num_arms: int, channel: int):
        self.num_arms = num_arms
        self.channel = channel % num_arms

    def select(self, ctx=None) -> int:
        return self.channel

    def update(self, arm: int, reward: int, ctx=None) -> None:
        pass


def make_agents(cfg: AgentConfig, n_agents: int, num_arms: int,
                seed_seq: np.random.SeedSequence) -> list:
    """One policy instance per agent, each on its own RNG substream."""
    streams = seed_seq.spawn(n_agents)
    agents = []
    for agent_id in range(n_agents):
        rng = np.random.default_rng(streams[agent_id])
        if cfg.kind == "ra":
            agents.append(RandomAccessAgent(num_arms, rng))
        elif cfg.kind == "ucb":
            agents.append(UcbAgent(num_arms, rng, c=cfg.ucb_c,
                                   shuffle_cold_start=cfg.ucb_shuffle_cold_start))
        elif cfg.kind == "ts":
            agents.append(TsAgent(num_arms, rng))
        elif cfg.kind == "na":
            agents.append(NeuralAgent(num_arms, rng, hidden=cfg.na_hidden, lr=cfg.na_lr))
        elif cfg.kind == "fixed":
            agents.append(FixedChannelAgent(num_arms, agent_id))
        else:
            raise ValueError(f"unknown agent kind {cfg.kind!r}")
    return agents
