"""Scenario configuration: every physical, traffic, and learning knob of one experiment.

Configs are plain frozen dataclasses that round-trip losslessly through JSON,
so a sweep cell can be archived next to its results and replayed bit-for-bit.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace

AGENT_KINDS = ("ra", "ucb", "ts", "na", "fixed")
TRAFFIC_MODES = ("periodic", "quasi_periodic")
PATHLOSS_VARIANTS = ("inf_sl", "inf_dl", "inf_sh", "inf_dh")
QUEUE_POLICIES = ("drop_old", "fifo1")

# OFDM symbol duration (incl. cyclic prefix) for 30 kHz subcarrier spacing,
# NR numerology 1. An SU is 7 of these, i.e. ~0.25 ms.
DEFAULT_T_OFDM_US = 35.675
SYMBOLS_PER_SU = 7
SUBCARRIERS_PER_CHANNEL = 12

THERMAL_NOISE_DBM_HZ = -174.0


class ConfigError(ValueError):
    """Raised when a scenario configuration fails validation."""


@dataclass(frozen=True)
class RadioConfig:
    """Carrier, power, and link-budget parameters shared by all UEs and the gNB."""

    f_c_ghz: float = 3.5
    bandwidth_mhz: float = 20.0
    scs_khz: float = 30.0
    p_tx_ul_dbm: float = 23.0
    p_tx_dl_dbm: float = 30.0
    antenna_gain: float = 1.0
    sinr_threshold_db: float = -5.0
    noise_figure_db: float = 5.0
    # When set, replaces the thermal noise floor entirely (dBm per channel).
    # The low-power outage regime depends on this budget; it is not pinned
    # by physics at factory scale, so it stays an explicit knob.
    noise_floor_dbm: float | None = None
    shadowing: bool = False
    pathloss_variant: str = "inf_sl"
    t_ofdm_us: float = DEFAULT_T_OFDM_US

    @property
    def num_channels(self) -> int:
        """Orthogonal channels fitting the bandwidth, 12 subcarriers each."""
        return int(self.bandwidth_mhz * 1e6 // (SUBCARRIERS_PER_CHANNEL * self.scs_khz * 1e3))

    @property
    def channel_bandwidth_hz(self) -> float:
        return self.bandwidth_mhz * 1e6 / self.num_channels

    @property
    def t_su_s(self) -> float:
        return SYMBOLS_PER_SU * self.t_ofdm_us * 1e-6

    @property
    def noise_dbm(self) -> float:
        """Per-channel noise power at the gNB receiver."""
        if self.noise_floor_dbm is not None:
            return self.noise_floor_dbm
        return (THERMAL_NOISE_DBM_HZ
                + 10.0 * math.log10(self.channel_bandwidth_hz)
                + self.noise_figure_db)

    def validate(self) -> None:
        if self.f_c_ghz <= 0 or self.bandwidth_mhz <= 0 or self.scs_khz <= 0:
            raise ConfigError("carrier, bandwidth, and subcarrier spacing must be positive")
        if self.num_channels < 1:
            raise ConfigError("bandwidth too small for a single channel")
        if self.t_ofdm_us <= 0:
            raise ConfigError("t_ofdm_us must be positive")
        if self.pathloss_variant not in PATHLOSS_VARIANTS:
            raise ConfigError(f"unknown pathloss variant {self.pathloss_variant!r}")
        if self.antenna_gain <= 0:
            raise ConfigError("antenna gain must be positive (linear scale)")


@dataclass(frozen=True)
class GeometryConfig:
    """Factory hall geometry and machine clutter.

    Machines are axis-aligned boxes sitting on the floor. By default one
    machine is co-located with every UE (the UE antenna is mounted on it)
    and a UE's own machine never blocks its own uplink.
    """

    length_m: float = 15.0
    width_m: float = 15.0
    height_m: float = 3.0
    ue_height_m: float = 1.5
    # None: one machine per UE at the UE's (x, y). An int places that many
    # machines uniformly at random instead, decoupled from UE positions.
    n_obstacles: int | None = None
    obstacle_half_extents: tuple[float, float, float] = (0.5, 0.5, 1.0)

    def validate(self) -> None:
        if min(self.length_m, self.width_m, self.height_m) <= 0:
            raise ConfigError("factory dimensions must be positive")
        if not 0.0 <= self.ue_height_m <= self.height_m:
            raise ConfigError("ue_height_m must lie inside the factory volume")
        if self.n_obstacles is not None and self.n_obstacles < 0:
            raise ConfigError("n_obstacles must be >= 0")
        hx, hy, hz = self.obstacle_half_extents
        if min(hx, hy, hz) < 0:
            raise ConfigError("obstacle half-extents must be non-negative")


@dataclass(frozen=True)
class TrafficConfig:
    """Packet arrival process of each UE."""

    mode: str = "periodic"
    period_ms: float = 1.5
    # Quasi-periodic jitter support, in OFDM symbols.
    offset_symbols: tuple[int, ...] = (-2, -1, 0, 1, 2)
    # False: each UE's first generation time drawn uniformly in [0, period).
    # True: all UEs start at symbol 0 (worst-case full contention).
    align_phases: bool = False
    queue_policy: str = "drop_old"

    def period_symbols(self, t_ofdm_us: float) -> int:
        return int(round(self.period_ms * 1e3 / t_ofdm_us))

    def validate(self) -> None:
        if self.mode not in TRAFFIC_MODES:
            raise ConfigError(f"unknown traffic mode {self.mode!r}")
        if self.period_ms <= 0:
            raise ConfigError("traffic period must be positive")
        if self.queue_policy not in QUEUE_POLICIES:
            raise ConfigError(f"unknown queue policy {self.queue_policy!r}")
        if not self.offset_symbols:
            raise ConfigError("offset support must be non-empty")


@dataclass(frozen=True)
class AgentConfig:
    """Which bandit policy the UEs run, and its hyperparameters."""

    kind: str = "ts"
    ucb_c: float = 2.0
    # Deal the cold-start exploration order of UCB from the per-agent RNG.
    # Identical agents starting in the same slot otherwise stay in lockstep
    # and collide forever.
    ucb_shuffle_cold_start: bool = True
    na_hidden: int = 64
    na_lr: float = 1e-2

    def validate(self) -> None:
        if self.kind not in AGENT_KINDS:
            raise ConfigError(f"unknown agent kind {self.kind!r}")
        if self.na_hidden < 1:
            raise ConfigError("na_hidden must be >= 1")
        if self.na_lr <= 0:
            raise ConfigError("na_lr must be positive")


@dataclass(frozen=True)
class ScenarioConfig:
    """One complete experiment: N learning UEs sharing K uplink channels."""

    n_agents: int = 50
    agent: AgentConfig = field(default_factory=AgentConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    radio: RadioConfig = field(default_factory=RadioConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    t_sim_s: float = 240.0
    window_su: int = 1000
    feedback_delay_su: int = 0
    seeds: tuple[int, ...] = tuple(range(10))
    eval_times_s: tuple[float, ...] = (60.0,)

    @property
    def num_channels(self) -> int:
        return self.radio.num_channels

    @property
    def n_su(self) -> int:
        return int(round(self.t_sim_s / self.radio.t_su_s))

    def validate(self) -> None:
        if self.n_agents < 1:
            raise ConfigError("n_agents must be >= 1")
        if self.t_sim_s <= 0:
            raise ConfigError("t_sim_s must be positive")
        if self.window_su < 1:
            raise ConfigError("window_su must be >= 1")
        if self.feedback_delay_su not in (0, 1):
            raise ConfigError("feedback_delay_su must be 0 or 1")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if any(t <= 0 for t in self.eval_times_s):
            raise ConfigError("evaluation times must be positive")
        self.agent.validate()
        self.traffic.validate()
        self.radio.validate()
        self.geometry.validate()
        if self.traffic.period_symbols(self.radio.t_ofdm_us) <= 0:
            raise ConfigError("traffic period rounds to zero OFDM symbols")

    # -- serialization --------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        try:
            cfg = cls(
                n_agents=int(data["n_agents"]),
                agent=AgentConfig(**data.get("agent", {})),
                traffic=_traffic_from_dict(data.get("traffic", {})),
                radio=RadioConfig(**data.get("radio", {})),
                geometry=_geometry_from_dict(data.get("geometry", {})),
                t_sim_s=float(data["t_sim_s"]),
                window_su=int(data.get("window_su", 1000)),
                feedback_delay_su=int(data.get("feedback_delay_su", 0)),
                seeds=tuple(int(s) for s in data.get("seeds", range(10))),
                eval_times_s=tuple(float(t) for t in data.get("eval_times_s", (60.0,))),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed scenario config: {exc}") from exc
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    def config_hash(self) -> str:
        """Hash of everything except the seed list; identifies a sweep cell."""
        data = self.to_dict()
        data.pop("seeds")
        blob = json.dumps(data, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seeds=(seed,))


def _traffic_from_dict(data: dict) -> TrafficConfig:
    data = dict(data)
    if "offset_symbols" in data:
        data["offset_symbols"] = tuple(int(v) for v in data["offset_symbols"])
    return TrafficConfig(**data)


def _geometry_from_dict(data: dict) -> GeometryConfig:
    data = dict(data)
    if "obstacle_half_extents" in data:
        data["obstacle_half_extents"] = tuple(float(v) for v in data["obstacle_half_extents"])
    return GeometryConfig(**data)
