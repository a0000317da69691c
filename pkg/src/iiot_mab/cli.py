"""Command-line front end: single runs, sweeps, and preset listing."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import engine, experiments, metrics
from .config import ConfigError, ScenarioConfig


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iiot-mab",
        description="Simulate bandit-driven uplink channel selection in a factory cell.",
    )
    sub = parser.add_subparsers(required=True)

    p_run = sub.add_parser("run", help="execute one scenario config file")
    p_run.add_argument("--config", required=True, help="scenario JSON file")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the first seed of the config")
    p_run.add_argument("--out", default="results", help="output directory")
    p_run.add_argument("--sliding", action="store_true",
                       help="also write the sliding-window series (large)")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a preset or a sweep spec file")
    p_sweep.add_argument("target", help="preset name or path to a sweep JSON file")
    p_sweep.add_argument("--seeds", default=None,
                         help="comma-separated seed list overriding the spec")
    p_sweep.add_argument("--t-sim", type=float, default=None,
                         help="override simulated seconds per run")
    p_sweep.add_argument("--processes", type=int, default=1)
    p_sweep.add_argument("--out", default="results", help="output directory")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_list = sub.add_parser("list-presets", help="show the reproduction presets")
    p_list.set_defaults(func=_cmd_list_presets)
    return parser


def _cmd_run(args) -> int:
    cfg = ScenarioConfig.from_json(Path(args.config).read_text())
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    record = engine.run(cfg, seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{record.config_hash}_seed{seed}"
    series = record.windows()
    metrics.write_windows_csv(series, out / f"{stem}_windows.csv")
    if args.sliding:
        metrics.write_windows_csv(record.windows(sliding=True),
                                  out / f"{stem}_windows_sliding.csv")
    conv = metrics.convergence_time(series, level=0.999, hold=4)
    metrics.write_summary_json(
        record, out / f"{stem}_summary.json",
        config_dict=cfg.to_dict(),
        convergence={"level": 0.999, "hold": 4, "time_s": conv},
    )
    final = series.s_tx[-1] if len(series.s_tx) else float("nan")
    print(f"run {stem}: {record.n_su} SUs, final S_TX {final:.4f}, "
          f"convergence {'never' if conv is None else f'{conv:.2f} s'}")
    print(f"wrote {out / (stem + '_windows.csv')}")
    return 0


def _cmd_sweep(args) -> int:
    named = experiments.presets()
    if args.target in named:
        spec = named[args.target]
    else:
        path = Path(args.target)
        if not path.exists():
            print(f"error: {args.target!r} is neither a preset nor a file",
                  file=sys.stderr)
            return 2
        spec = _spec_from_json(path.read_text())
    if args.seeds is not None:
        seeds = tuple(int(s) for s in args.seeds.split(",") if s.strip())
        spec = _replace_base(spec, seeds=seeds)
    if args.t_sim is not None:
        spec = _replace_base(spec, t_sim_s=args.t_sim)
    spec.validate()
    result = experiments.run_sweep(spec, processes=args.processes)
    summary = result.write(args.out)
    print(f"sweep {spec.name}: {len(result.rows)} rows -> {summary}")
    return 0


def _cmd_list_presets(args) -> int:
    for name, spec in sorted(experiments.presets().items()):
        cells = len(spec.cells())
        print(f"{name}: axis={spec.axis} values={list(spec.values)} "
              f"kinds={list(spec.agent_kinds) or [spec.base.agent.kind]} "
              f"modes={list(spec.traffic_modes) or [spec.base.traffic.mode]} "
              f"({cells} cells x {len(spec.base.seeds)} seeds)")
    return 0


def _spec_from_json(text: str) -> experiments.SweepSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid sweep JSON: {exc}") from exc
    try:
        base = ScenarioConfig.from_dict(data["base"])
        return experiments.SweepSpec(
            name=str(data.get("name", "sweep")),
            base=base,
            axis=str(data["axis"]),
            values=tuple(data["values"]),
            agent_kinds=tuple(data.get("agent_kinds", ())),
            traffic_modes=tuple(data.get("traffic_modes", ())),
            convergence_level=float(data.get("convergence_level", 0.999)),
            convergence_hold=int(data.get("convergence_hold", 4)),
            emit_curves=bool(data.get("emit_curves", False)),
        )
    except KeyError as exc:
        raise ConfigError(f"sweep spec missing field: {exc}") from exc


def _replace_base(spec: experiments.SweepSpec, **kwargs) -> experiments.SweepSpec:
    from dataclasses import replace
    return replace(spec, base=replace(spec.base, **kwargs))


if __name__ == "__main__":
    raise SystemExit(main())
