from dataclasses import replace

import numpy as np
import pytest

from iiot_mab import experiments
from iiot_mab.config import (
    AgentConfig,
    ConfigError,
    RadioConfig,
    ScenarioConfig,
    TrafficConfig,
)
from iiot_mab.experiments import SweepSpec, presets, run_sweep


def tiny_base(**kwargs) -> ScenarioConfig:
    defaults = dict(
        n_agents=6,
        agent=AgentConfig(kind="ts"),
        traffic=TrafficConfig(mode="periodic", period_ms=1.5),
        radio=RadioConfig(bandwidth_mhz=4.0),  # 11 channels, light runs
        t_sim_s=1.5,
        seeds=(0, 1),
        eval_times_s=(1.0,),
    )
    defaults.update(kwargs)
    return ScenarioConfig(**defaults)


class TestConfigSerialization:
    def test_json_round_trip_lossless(self):
        cfg = tiny_base(seeds=(3, 4, 5))
        assert ScenarioConfig.from_json(cfg.to_json()) == cfg

    def test_validation_rejects_bad_fields(self):
        with pytest.raises(ConfigError):
            ScenarioConfig(n_agents=0).validate()
        with pytest.raises(ConfigError):
            ScenarioConfig(t_sim_s=-1).validate()
        with pytest.raises(ConfigError):
            ScenarioConfig(agent=AgentConfig(kind="dqn")).validate()
        with pytest.raises(ConfigError):
            ScenarioConfig(traffic=TrafficConfig(mode="poisson")).validate()

    def test_malformed_json_rejected(self):
        with pytest.raises(ConfigError):
            ScenarioConfig.from_json("{not json")
        with pytest.raises(ConfigError):
            ScenarioConfig.from_json('{"n_agents": 5}')  # missing t_sim_s

    def test_hash_ignores_seeds(self):
        a = tiny_base(seeds=(0,))
        b = tiny_base(seeds=(1, 2))
        assert a.config_hash() == b.config_hash()
        assert a.config_hash() != tiny_base(n_agents=7).config_hash()


class TestPresets:
    def test_all_presets_validate(self):
        for name, spec in presets().items():
            spec.validate()
            assert spec.name == name

    def test_fig2_matches_training_setup(self):
        spec = presets()["fig2"]
        assert spec.base.n_agents == 50
        assert spec.base.traffic.period_ms == 1.5
        assert spec.base.t_sim_s == 240.0
        assert set(spec.values) == {"ra", "ucb", "ts", "na"}
        assert spec.emit_curves

    def test_fig3_cell_count(self):
        spec = presets()["fig3"]
        assert len(spec.cells()) == 32  # 4 N values x 4 agents x 2 modes

    def test_fig5_cell_count_and_budget(self):
        spec = presets()["fig5"]
        assert len(spec.cells()) == 24  # 3 powers x 4 agents x 2 modes
        assert spec.base.radio.noise_floor_dbm is not None

    def test_fig6_restricted_to_ts(self):
        spec = presets()["fig6"]
        kinds = {key["agent_kind"] for _, key in spec.cells()}
        assert kinds == {"ts"}

    def test_fig7_sweeps_period_at_n100(self):
        spec = presets()["fig7"]
        assert spec.base.n_agents == 100
        assert set(spec.values) == {1.5, 2.5, 5.0}


class TestRunSweep:
    def test_empty_values_empty_table(self):
        spec = SweepSpec(name="empty", base=tiny_base(), axis="n_agents", values=())
        result = run_sweep(spec)
        assert result.rows == []

    def test_rows_deterministic_and_parallelism_invariant(self):
        spec = SweepSpec(name="t", base=tiny_base(), axis="n_agents", values=(4, 6))
        serial = run_sweep(spec, processes=1)
        parallel = run_sweep(spec, processes=2)
        again = run_sweep(spec, processes=1)
        assert serial.rows == parallel.rows == again.rows
        assert len(serial.rows) == 2

    def test_row_contents(self):
        spec = SweepSpec(name="t", base=tiny_base(), axis="agent_kind",
                         values=("ra", "ts"))
        rows = run_sweep(spec).rows
        assert [r["agent_kind"] for r in rows] == ["ra", "ts"]
        for row in rows:
            assert 0.0 <= row["s_tx_mean"] <= 1.0
            assert row["n_seeds"] == 2
            assert row["eval_time_s"] == 1.0

    def test_invalid_cell_aborts_before_running(self):
        spec = SweepSpec(name="bad", base=tiny_base(), axis="n_agents", values=(0,))
        with pytest.raises(ConfigError):
            run_sweep(spec)

    def test_curve_emission(self, tmp_path):
        spec = SweepSpec(name="curves", base=tiny_base(), axis="agent_kind",
                         values=("ts",), emit_curves=True)
        result = run_sweep(spec)
        assert len(result.curves) == 1
        out = result.write(tmp_path)
        assert out.exists()
        files = sorted(p.name for p in (tmp_path / "curves").iterdir())
        assert "summary.csv" in files
        assert any(name.startswith("curve_") for name in files)

    def test_summary_csv_header(self, tmp_path):
        spec = SweepSpec(name="hdr", base=tiny_base(), axis="n_agents", values=(4,))
        result = run_sweep(spec)
        path = result.write(tmp_path)
        header = path.read_text().splitlines()[0]
        assert header == ("axis,value,agent_kind,traffic_mode,eval_time_s,"
                          "s_tx_mean,s_tx_std,convergence_time_median_s,"
                          "n_seeds,config_hash")


class TestRunSeeds:
    def test_parallel_matches_serial(self):
        cfg = tiny_base(seeds=(0, 1, 2))
        serial = experiments.run_seeds(cfg, processes=1)
        parallel = experiments.run_seeds(cfg, processes=2)
        for a, b in zip(serial, parallel):
            assert a.seed == b.seed
            assert np.array_equal(a.attempts, b.attempts)
            assert np.array_equal(a.successes, b.successes)
