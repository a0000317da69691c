import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iiot_mab.config import ConfigError, TrafficConfig
from iiot_mab.traffic import TrafficSource, due_su, next_generation_time

T_OFDM_US = 35.675


def test_period_rounding_to_symbols():
    cfg = TrafficConfig(mode="periodic", period_ms=1.5)
    assert cfg.period_symbols(T_OFDM_US) == 42


def test_periodic_next_generation():
    cfg = TrafficConfig(mode="periodic", period_ms=1.5)
    rng = np.random.default_rng(0)
    assert next_generation_time(0, cfg, 42, rng) == 42


def test_quasi_periodic_forced_offsets():
    rng = np.random.default_rng(0)
    plus2 = TrafficConfig(mode="quasi_periodic", offset_symbols=(2,))
    assert next_generation_time(0, plus2, 42, rng) == 44
    zero = TrafficConfig(mode="quasi_periodic", offset_symbols=(0,))
    periodic = TrafficConfig(mode="periodic")
    assert (next_generation_time(0, zero, 42, rng)
            == next_generation_time(0, periodic, 42, rng) == 42)


def test_quasi_periodic_clamps_to_strictly_increasing():
    cfg = TrafficConfig(mode="quasi_periodic", offset_symbols=(-2,))
    rng = np.random.default_rng(0)
    assert next_generation_time(10, cfg, 1, rng) == 11


def test_zero_period_rejected():
    cfg = TrafficConfig(mode="periodic", period_ms=1.5)
    with pytest.raises(ConfigError):
        next_generation_time(0, cfg, 0, np.random.default_rng(0))


class TestDueSu:
    def test_generation_inside_su_0(self):
        assert due_su(3) == 1

    def test_generation_at_boundary(self):
        assert due_su(7) == 2

    def test_strictly_after_rule(self):
        assert due_su(0) == 1
        assert due_su(6) == 1
        assert due_su(13) == 2


class TestTrafficSource:
    def make(self, seed=0, **kwargs) -> TrafficSource:
        cfg = TrafficConfig(**kwargs)
        return TrafficSource(0, cfg, T_OFDM_US, np.random.default_rng(seed))

    def test_aligned_phase_starts_at_zero(self):
        src = self.make(mode="periodic", period_ms=1.5, align_phases=True)
        assert src.next_due_su == 1
        pkts = src.packets_due(1)
        assert len(pkts) == 1 and pkts[0].generated_symbol == 0

    def test_no_generation_in_window_returns_empty(self):
        src = self.make(mode="periodic", period_ms=1.5, align_phases=True)
        assert src.packets_due(1)
        # Next generation at symbol 42 -> due SU 7; nothing in between.
        for su in range(2, 7):
            assert src.packets_due(su) == []
        assert len(src.packets_due(7)) == 1

    def test_unaligned_phase_within_first_period(self):
        for seed in range(20):
            src = self.make(seed=seed, mode="periodic", period_ms=1.5)
            pkts = src.packets_due(src.next_due_su)
            assert 0 <= pkts[0].generated_symbol < 42

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_generation_times_strictly_increasing(self, seed):
        cfg = TrafficConfig(mode="quasi_periodic", period_ms=1.5)
        rng = np.random.default_rng(seed)
        prev = 0
        for _ in range(500):
            nxt = next_generation_time(prev, cfg, 42, rng)
            assert nxt > prev
            prev = nxt

    def test_mean_inter_generation_time_matches_period(self):
        cfg = TrafficConfig(mode="quasi_periodic", period_ms=1.5)
        rng = np.random.default_rng(42)
        times = [0]
        for _ in range(200_000):
            times.append(next_generation_time(times[-1], cfg, 42, rng))
        gaps = np.diff(times)
        assert abs(gaps.mean() - 42.0) / 42.0 < 0.01

    def test_aligned_periodic_sources_share_due_sus(self):
        cfg = TrafficConfig(mode="periodic", period_ms=1.5, align_phases=True)
        sources = [TrafficSource(n, cfg, T_OFDM_US, np.random.default_rng(n))
                   for n in range(5)]
        for su in range(1, 50):
            due = [len(src.packets_due(su)) for src in sources]
            assert len(set(due)) == 1  # all agents due together or not at all
