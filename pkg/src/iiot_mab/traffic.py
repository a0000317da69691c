"""Per-agent packet generation under periodic or quasi-periodic arrivals.

Time is counted in OFDM symbols; an SU is 7 symbols. A packet generated
during SU t becomes transmittable at the start of SU t+1, i.e. its scheduled
SU is the first SU boundary strictly after the generation symbol.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SYMBOLS_PER_SU, ConfigError, TrafficConfig


@dataclass(slots=True)
class Packet:
    agent_id: int
    generated_symbol: int
    scheduled_su: int
    attempts: int = 0

    @property
    def is_retransmission(self) -> bool:
        return self.attempts > 0


def due_su(generation_symbol: int) -> int:
    """First SU starting strictly after a generation symbol."""
    return generation_symbol // SYMBOLS_PER_SU + 1


def next_generation_time(prev: int, cfg: TrafficConfig, period_symbols: int,
                         rng: np.random.Generator) -> int:
    """Generation symbol following ``prev`` under the configured arrival model.

    Quasi-periodic arrivals jitter the period by a uniform symbol offset; the
    step is clamped to at least one symbol so times stay strictly increasing.
    """
    if period_symbols <= 0:
        raise ConfigError("traffic period must be at least one OFDM symbol")
    if cfg.mode == "periodic":
        return prev + period_symbols
    offset = cfg.offset_symbols[int(rng.integers(0, len(cfg.offset_symbols)))]
    return prev + max(period_symbols + offset, 1)


class TrafficSource:
    """Arrival stream of one agent, advanced monotonically by the engine."""

    def __init__(self, agent_id: int, cfg: TrafficConfig, t_ofdm_us: float,
                 rng: np.random.Generator):
        self.agent_id = agent_id
        self.cfg = cfg
        self.rng = rng
        self.period_symbols = cfg.period_symbols(t_ofdm_us)
        if self.period_symbols <= 0:
            raise ConfigError("traffic period must be at least one OFDM symbol")
        if cfg.align_phases:
            self._next_symbol = 0
        else:
            self._next_symbol = int(rng.integers(0, self.period_symbols))

    @property
    def next_due_su(self) -> int:
        return due_su(self._next_symbol)

    def packets_due(self, su: int) -> list[Packet]:
        """Packets whose scheduled SU equals ``su``; advances the stream."""
        out: list[Packet] = []
        while due_su(self._next_symbol) == su:
            out.append(Packet(self.agent_id, self._next_symbol, su))
            self._next_symbol = next_generation_time(
                self._next_symbol, self.cfg, self.period_symbols, self.rng
            )
        return out
