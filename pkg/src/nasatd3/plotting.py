"""Learning-curve SVGs from metrics CSV files (mean +/- std across seeds)."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import numpy as np

from .config import parse_text


class MetricsFormatError(ValueError):
    pass


def read_metrics(path):
    """Parse a metrics or eval CSV into ``(columns, rows)``; values are floats (nan if blank)."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MetricsFormatError(f"{path}:1: empty file, expected a header") from None
        if not header or header[0] != "step":
            raise MetricsFormatError(f"{path}:1: header must start with 'step', got {header!r}")
        rows = []
        for lineno, rec in enumerate(reader, 2):
            if len(rec) != len(header):
                raise MetricsFormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
            try:
                rows.append([float(v) if v != "" else float("nan") for v in rec])
            except ValueError:
                raise MetricsFormatError(f"{path}:{lineno}: non-numeric value in {rec!r}") from None
    return header, np.array(rows, dtype=np.float64).reshape(len(rows), len(header))


def run_label(path):
    """Variant name from the run's config.txt, else the parent directory name."""
    cfg = Path(path).parent / "config.txt"
    if cfg.exists():
        try:
            return parse_text(cfg.read_text()).get("variant", Path(path).parent.name)
        except ValueError:
            pass
    return Path(path).parent.name or Path(path).stem


def aggregate(tables):
    """Mean and std over runs, aligned on the step values common to all runs."""
    steps = None
    for t in tables:
        s = set(t[:, 0].tolist())
        steps = s if steps is None else steps & s
    steps = np.array(sorted(steps or []))
    if steps.size == 0:
        return steps, np.zeros((0, 0)), np.zeros((0, 0))
    stacked = []
    for t in tables:
        pos = {v: i for i, v in enumerate(t[:, 0].tolist())}
        stacked.append(t[[pos[s] for s in steps]][:, 1:])
    arr = np.stack(stacked)
    with np.errstate(invalid="ignore"):
        mean = np.nanmean(arr, axis=0) if np.isfinite(arr).any() else np.full(arr.shape[1:], np.nan)
        std = np.nanstd(arr, axis=0) if np.isfinite(arr).any() else np.full(arr.shape[1:], np.nan)
    return steps, mean, std


def plot(paths, out_dir):
    """Write one SVG per metric column; returns the written paths."""
    import warnings

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not paths:
        raise ValueError("plot needs at least one metrics file")
    matplotlib.rcParams["svg.hashsalt"] = "nasatd3"
    groups = defaultdict(list)
    columns = None
    for p in paths:
        header, rows = read_metrics(p)
        if columns is None:
            columns = header
        elif header != columns:
            raise MetricsFormatError(f"{p}:1: header {header} differs from {columns}")
        groups[run_label(p)].append(rows)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for ci, col in enumerate(columns[1:]):
        fig, ax = plt.subplots(figsize=(6, 4))
        for label in sorted(groups):
            steps, mean, std = aggregate(groups[label])
            if steps.size == 0:
                continue
            m, s = mean[:, ci], std[:, ci]
            ax.plot(steps, m, label=f"{label} (n={len(groups[label])})")
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                ax.fill_between(steps, m - s, m + s, alpha=0.25)
        ax.set_xlabel("environment step")
        ax.set_ylabel(col)
        if ax.get_legend_handles_labels()[0]:
            ax.legend()
        fig.tight_layout()
        path = out_dir / f"{col}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written
