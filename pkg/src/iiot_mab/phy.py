"""Factory geometry, indoor-factory pathloss, LOS blockage, and SINR outage.

Everything here is a pure function of immutable inputs. A run samples UE and
machine placement once, derives per-UE pathloss and outage flags, and the
engine never touches the channel model again (UEs are static, no fast fading).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import GeometryConfig, RadioConfig

# Indoor-factory pathloss coefficients: PL = a + b*log10(d_m) + c*log10(f_GHz).
# LOS is shared by all variants; NLOS is floored at the LOS value.
_LOS_COEFFS = (31.84, 21.50, 19.00)
_NLOS_COEFFS = {
    "inf_sl": (33.00, 25.5, 20.0),
    "inf_dl": (18.60, 35.7, 20.0),
    "inf_sh": (32.40, 23.0, 20.0),
    "inf_dh": (33.63, 21.9, 20.0),
}
_SIGMA_LOS_DB = 4.3
_SIGMA_NLOS_DB = {"inf_sl": 5.7, "inf_dl": 7.2, "inf_sh": 5.9, "inf_dh": 4.0}

_MIN_DISTANCE_M = 1.0


@dataclass(frozen=True)
class Position:
    x: float
    y: float
    z: float

    def distance_to(self, other: "Position") -> float:
        return math.dist((self.x, self.y, self.z), (other.x, other.y, other.z))


@dataclass(frozen=True)
class Obstacle:
    """Axis-aligned box blocker (a machine on the factory floor)."""

    center: Position
    half_extents: tuple[float, float, float]

    def bounds(self) -> tuple[tuple[float, float], ...]:
        c = (self.center.x, self.center.y, self.center.z)
        return tuple((c[i] - self.half_extents[i], c[i] + self.half_extents[i]) for i in range(3))


def is_los(ue: Position, gnb: Position, obstacles: list[Obstacle]) -> bool:
    """True iff the straight segment ue-gnb misses every obstacle box.

    A degenerate zero-length segment counts as LOS. Obstacles strictly beyond
    either endpoint on the extended line do not block (segment test, not ray).
    """
    p0 = (ue.x, ue.y, ue.z)
    p1 = (gnb.x, gnb.y, gnb.z)
    for obstacle in obstacles:
        if _segment_hits_box(p0, p1, obstacle.bounds()):
            return False
    return True


def _segment_hits_box(p0, p1, bounds) -> bool:
    # Slab test on the segment parameter u in [0, 1].
    u_min, u_max = 0.0, 1.0
    for axis in range(3):
        origin = p0[axis]
        delta = p1[axis] - p0[axis]
        lo, hi = bounds[axis]
        if abs(delta) < 1e-12:
            if origin < lo or origin > hi:
                return False
            continue
        u1 = (lo - origin) / delta
        u2 = (hi - origin) / delta
        if u1 > u2:
            u1, u2 = u2, u1
        u_min = max(u_min, u1)
        u_max = min(u_max, u2)
        if u_min > u_max:
            return False
    return True


def pathloss_db(
    ue: Position,
    gnb: Position,
    los: bool,
    f_c_ghz: float,
    variant: str = "inf_sl",
    shadowing_db: float = 0.0,
) -> float:
    """Indoor-factory pathloss in dB at 3D distance ue-gnb (clamped to >= 1 m).

    NLOS never undercuts the LOS value at the same distance. ``shadowing_db``
    is an additive lognormal term sampled once per UE per run by the caller.
    """
    d = max(ue.distance_to(gnb), _MIN_DISTANCE_M)
    a, b, c = _LOS_COEFFS
    pl_los = a + b * math.log10(d) + c * math.log10(f_c_ghz)
    if los:
        return pl_los + shadowing_db
    a, b, c = _NLOS_COEFFS[variant]
    pl_nlos = a + b * math.log10(d) + c * math.log10(f_c_ghz)
    return max(pl_nlos, pl_los) + shadowing_db


def shadowing_sigma_db(los: bool, variant: str = "inf_sl") -> float:
    return _SIGMA_LOS_DB if los else _SIGMA_NLOS_DB[variant]


def snr_db(pathloss: float, radio: RadioConfig) -> float:
    """Uplink SNR at the gNB for a lone (collision-free) transmission.

    Colliding packets are lost outright, so there is no same-channel
    interference term and SINR reduces to SNR. Antenna gains are linear.
    """
    gains_db = 10.0 * math.log10(radio.antenna_gain) * 2
    rx_dbm = radio.p_tx_ul_dbm - pathloss + gains_db
    return rx_dbm - radio.noise_dbm


def is_outage(snr: float, radio: RadioConfig) -> bool:
    return snr < radio.sinr_threshold_db


@dataclass(frozen=True)
class FactoryLayout:
    """Sampled placement and the derived per-UE link state for one run."""

    gnb: Position
    ue_positions: tuple[Position, ...]
    obstacles: tuple[Obstacle, ...]
    # Index of the machine each UE is mounted on (-1 if decoupled placement).
    own_machine: tuple[int, ...]
    los: np.ndarray
    pathloss: np.ndarray
    snr: np.ndarray
    outage: np.ndarray


def build_layout(
    n_agents: int,
    geometry: GeometryConfig,
    radio: RadioConfig,
    seed_seq: np.random.SeedSequence,
) -> FactoryLayout:
    """Place the gNB, UEs, and machines, and precompute every UE's link state.

    Placement, obstacle, and shadowing draws come from separate substreams,
    and UE draws are per-agent pairs, so growing N leaves the positions of
    existing agents untouched.
    """
    ue_seq, obstacle_seq, shadow_seq = seed_seq.spawn(3)
    ue_rng = np.random.default_rng(ue_seq)
    shadowing_rng = np.random.default_rng(shadow_seq)

    gnb = Position(geometry.length_m / 2.0, geometry.width_m / 2.0, geometry.height_m)

    xy = ue_rng.uniform(0.0, 1.0, size=(n_agents, 2))
    ue_positions = tuple(
        Position(float(x * geometry.length_m), float(y * geometry.width_m), geometry.ue_height_m)
        for x, y in xy
    )

    hx, hy, hz = geometry.obstacle_half_extents
    if geometry.n_obstacles is None:
        # One machine per UE, standing on the floor under the UE antenna.
        obstacles = tuple(
            Obstacle(Position(p.x, p.y, hz), (hx, hy, hz)) for p in ue_positions
        )
        own_machine = tuple(range(n_agents))
    else:
        obstacle_rng = np.random.default_rng(obstacle_seq)
        oxy = obstacle_rng.uniform(0.0, 1.0, size=(geometry.n_obstacles, 2))
        obstacles = tuple(
            Obstacle(
                Position(float(x * geometry.length_m), float(y * geometry.width_m), hz),
                (hx, hy, hz),
            )
            for x, y in oxy
        )
        own_machine = tuple([-1] * n_agents)

    los = np.zeros(n_agents, dtype=bool)
    pathloss = np.zeros(n_agents, dtype=np.float64)
    snr = np.zeros(n_agents, dtype=np.float64)
    for n, ue in enumerate(ue_positions):
        blockers = [obs for j, obs in enumerate(obstacles) if j != own_machine[n]]
        ue_los = is_los(ue, gnb, blockers)
        shadow = 0.0
        if radio.shadowing:
            shadow = float(
                shadowing_rng.normal(0.0, shadowing_sigma_db(ue_los, radio.pathloss_variant))
            )
        los[n] = ue_los
        pathloss[n] = pathloss_db(
            ue, gnb, ue_los, radio.f_c_ghz, radio.pathloss_variant, shadow
        )
        snr[n] = snr_db(pathloss[n], radio)
    outage = snr < radio.sinr_threshold_db
    return FactoryLayout(
        gnb=gnb,
        ue_positions=ue_positions,
        obstacles=obstacles,
        own_machine=own_machine,
        los=los,
        pathloss=pathloss,
        snr=snr,
        outage=outage,
    )
