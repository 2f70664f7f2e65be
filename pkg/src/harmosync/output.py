"""CSV emission for traces, events and plot data (full double precision)."""
from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from .simulator import SimulationTrace, sync_error

__all__ = ["OutputError", "write_trace_csv", "write_events_csv", "emit_plot_data", "write_rows_csv"]

FMT = "%.17g"


class OutputError(OSError):
    """Output location missing or not writable."""


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return FMT % x
    return str(x)


def _outdir(path) -> Path:
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {p}: {exc.strerror}") from None
    if not os.access(p, os.W_OK):
        raise OutputError(f"output directory {p} is not writable")
    return p


def write_rows_csv(path, header, rows) -> Path:
    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(x) for x in row])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None
    return path


def _is_empty(trace: SimulationTrace) -> bool:
    # a zero-length horizon carries no propagated interval: emit headers only
    return len(trace.t) <= 1


def _stage_labels(trace: SimulationTrace, coupling) -> list[str]:
    if trace.mode == "fixed":
        return ["fixed"] * len(coupling)
    return ["zooming-in" if c else "zooming-out" for c in coupling]


def write_trace_csv(trace: SimulationTrace, path) -> Path:
    """``t, r_1..r_n, v_1..v_n, mu, stage, err_inf``; dense rows when recorded."""
    n = trace.n
    header = ["t"] + [f"r_{i}" for i in range(1, n + 1)] + [f"v_{i}" for i in range(1, n + 1)] + ["mu", "stage", "err_inf"]
    if _is_empty(trace):
        return write_rows_csv(path, header, [])
    t, X, mu, coupling = trace.timeline()
    err = sync_error(trace, dense=True)
    stages = _stage_labels(trace, coupling)
    rows = ([t[k], *X[k], mu[k], stages[k], err[k]] for k in range(len(t)))
    return write_rows_csv(path, header, rows)


def write_events_csv(trace: SimulationTrace, path) -> Path:
    """One row per event: zoom-in start, dwell boundaries, saturated samples."""
    rows = []
    if trace.k0 is not None:
        rows.append(("zoom_in_start", trace.k0, trace.t[trace.k0], trace.mu[trace.k0]))
        for k in trace.dwell_samples[1:]:
            rows.append(("dwell_boundary", k, trace.t[k], trace.mu[k]))
    for k in np.flatnonzero(trace.saturated):
        rows.append(("saturation", int(k), trace.t[k], trace.mu[k]))
    rows.sort(key=lambda r: (r[1], r[0]))
    return write_rows_csv(path, ["event", "k", "t", "mu"], rows)


def emit_plot_data(trace: SimulationTrace, outdir) -> list[Path]:
    """``positions.csv``, ``velocities.csv`` and ``error.csv`` (with ``mu`` in adjustable mode)."""
    out = _outdir(outdir)
    n = trace.n
    with_mu = trace.mode == "adjustable"
    heads = {
        "positions.csv": ["t"] + [f"r_{i}" for i in range(1, n + 1)],
        "velocities.csv": ["t"] + [f"v_{i}" for i in range(1, n + 1)],
        "error.csv": ["t", "err_inf"] + (["mu"] if with_mu else []),
    }
    if _is_empty(trace):
        return [write_rows_csv(out / name, h, []) for name, h in heads.items()]
    t, X, mu, _ = trace.timeline()
    err = sync_error(trace, dense=True)
    paths = [
        write_rows_csv(out / "positions.csv", heads["positions.csv"], np.column_stack([t, X[:, :n]])),
        write_rows_csv(out / "velocities.csv", heads["velocities.csv"], np.column_stack([t, X[:, n:]])),
    ]
    cols = [t, err] + ([mu] if with_mu else [])
    paths.append(write_rows_csv(out / "error.csv", heads["error.csv"], np.column_stack(cols)))
    return paths
