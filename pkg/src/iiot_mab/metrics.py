"""Success-rate time series, convergence detection, and cross-seed aggregation.

The engine emits raw per-SU attempt/success counts; everything else here is
derived. The headline metric is the successful-transmission rate: successes
over attempts in a 1000-SU window (an empty window counts as 1.0, since no
attempt failed).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigError

WINDOW_CSV_COLUMNS = ("su_index", "sim_time_s", "attempts", "successes", "s_tx")


@dataclass
class MetricsRecord:
    """Full outcome of one run: per-SU counts plus per-agent totals."""

    config_hash: str
    seed: int
    t_su_s: float
    window_su: int
    attempts: np.ndarray
    successes: np.ndarray
    agent_rewards: np.ndarray
    agent_attempts: np.ndarray
    collision_losses: int = 0
    outage_losses: int = 0
    drops: int = 0

    @property
    def n_su(self) -> int:
        return len(self.attempts)

    def windows(self, sliding: bool = False) -> "WindowSeries":
        return compute_windows(self, sliding=sliding)

    def cumulative_reward(self) -> np.ndarray:
        """Total reward collected by each agent over the run."""
        return self.agent_rewards.copy()


@dataclass
class WindowSeries:
    """Windowed S_TX series; ``su_index`` is the last SU of each window."""

    su_index: np.ndarray
    time_s: np.ndarray
    attempts: np.ndarray
    successes: np.ndarray
    s_tx: np.ndarray
    window_su: int
    t_su_s: float
    sliding: bool = False


def s_tx(attempts, successes) -> float:
    """Success ratio over a window of per-SU counts; 1.0 when nothing was sent."""
    total = int(np.sum(attempts))
    if total == 0:
        return 1.0
    return float(np.sum(successes) / total)


def compute_windows(record: MetricsRecord, sliding: bool = False) -> WindowSeries:
    w = record.window_su
    att = record.attempts
    suc = record.successes
    if sliding:
        if record.n_su < w:
            ends = np.array([], dtype=np.int64)
        else:
            catt = np.concatenate(([0], np.cumsum(att, dtype=np.int64)))
            csuc = np.concatenate(([0], np.cumsum(suc, dtype=np.int64)))
            ends = np.arange(w, record.n_su + 1, dtype=np.int64)
            watt = catt[ends] - catt[ends - w]
            wsuc = csuc[ends] - csuc[ends - w]
    else:
        n_win = record.n_su // w
        ends = (np.arange(1, n_win + 1, dtype=np.int64)) * w
        watt = att[:n_win * w].reshape(n_win, w).sum(axis=1, dtype=np.int64)
        wsuc = suc[:n_win * w].reshape(n_win, w).sum(axis=1, dtype=np.int64)
    if len(ends) == 0:
        empty = np.array([])
        return WindowSeries(empty.astype(np.int64), empty, empty, empty, empty,
                            w, record.t_su_s, sliding)
    ratio = np.ones(len(ends))
    nonzero = watt > 0
    ratio[nonzero] = wsuc[nonzero] / watt[nonzero]
    return WindowSeries(
        su_index=ends - 1,
        time_s=ends * record.t_su_s,
        attempts=watt.astype(np.int64),
        successes=wsuc.astype(np.int64),
        s_tx=ratio,
        window_su=w,
        t_su_s=record.t_su_s,
        sliding=sliding,
    )


def convergence_time(series: WindowSeries, level: float, hold: int = 4) -> float | None:
    """First window end time at which S_TX reaches ``level`` and holds.

    The level must be sustained for ``hold`` consecutive windows; the time
    reported is the end of the first window of that streak. None if never.
    """
    if not 0.0 < level <= 1.0:
        raise ValueError("level must be in (0, 1]")
    if hold < 1:
        raise ValueError("hold must be >= 1")
    ok = series.s_tx >= level
    if len(ok) < hold:
        return None
    run_len = 0
    for i, flag in enumerate(ok):
        run_len = run_len + 1 if flag else 0
        if run_len >= hold:
            return float(series.time_s[i - hold + 1])
    return None


def s_tx_at(series: WindowSeries, at_s: float) -> float:
    """Windowed S_TX at a simulated time (the window containing that time)."""
    if len(series.time_s) == 0:
        raise ValueError("empty window series")
    idx = int(np.searchsorted(series.time_s, at_s, side="left"))
    idx = min(idx, len(series.time_s) - 1)
    return float(series.s_tx[idx])


def aggregate(records: list[MetricsRecord], at_s: float) -> tuple[float, float]:
    """Mean and sample standard deviation of S_TX at a time across seed runs.

    All records must come from the same scenario (identical config hash);
    only the seed may differ.
    """
    if len(records) < 2:
        raise ConfigError("aggregate needs at least two runs")
    hashes = {r.config_hash for r in records}
    if len(hashes) != 1:
        raise ConfigError(f"records from different configs: {sorted(hashes)}")
    values = np.array([s_tx_at(r.windows(), at_s) for r in records])
    return float(values.mean()), float(values.std(ddof=1))


def write_windows_csv(series: WindowSeries, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(WINDOW_CSV_COLUMNS)
        for i in range(len(series.su_index)):
            writer.writerow([
                int(series.su_index[i]),
                f"{series.time_s[i]:.6f}",
                int(series.attempts[i]),
                int(series.successes[i]),
                f"{series.s_tx[i]:.6f}",
            ])


def read_windows_csv(path: str | Path) -> WindowSeries:
    with Path(path).open() as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != WINDOW_CSV_COLUMNS:
            raise ValueError(f"unexpected window CSV header {header!r} in {path}")
        rows = [row for row in reader if row]
    su = np.array([int(r[0]) for r in rows], dtype=np.int64)
    time_s = np.array([float(r[1]) for r in rows])
    att = np.array([int(r[2]) for r in rows], dtype=np.int64)
    suc = np.array([int(r[3]) for r in rows], dtype=np.int64)
    ratio = np.array([float(r[4]) for r in rows])
    window = int(su[0] + 1) if len(su) else 0
    t_su = float(time_s[0] / (su[0] + 1)) if len(su) else 0.0
    return WindowSeries(su, time_s, att, suc, ratio, window, t_su)


def write_summary_json(record: MetricsRecord, path: str | Path,
                       config_dict: dict | None = None,
                       convergence: dict | None = None) -> None:
    """Run summary document: config echo, seed, totals, convergence time."""
    series = record.windows()
    summary = {
        "config_hash": record.config_hash,
        "seed": record.seed,
        "t_su_s": record.t_su_s,
        "window_su": record.window_su,
        "n_su": record.n_su,
        "total_attempts": int(record.attempts.sum()),
        "total_successes": int(record.successes.sum()),
        "collision_losses": record.collision_losses,
        "outage_losses": record.outage_losses,
        "drops": record.drops,
        "final_s_tx": float(series.s_tx[-1]) if len(series.s_tx) else None,
        "mean_cumulative_reward": float(record.agent_rewards.mean()),
        "config": config_dict,
        "convergence": convergence or {},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True))
