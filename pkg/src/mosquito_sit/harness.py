"""Parameter sweeps and run output files."""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import config as cfgmod
from .config import ConfigError, MaskSpec, SimConfig
from .pde import GridSpec
from .simulation import SERIES_COLUMNS, RunReport, run

SWEEP_AXES = ("d3", "theta", "alpha", "rho")


def with_axis(base: SimConfig, axis: str, value: float) -> SimConfig:
    """Copy of ``base`` with one sweepable scalar replaced."""
    if axis == "d3":
        return base.replace(params=base.params.replace(d3=float(value)))
    if axis in ("theta", "alpha"):
        if base.ctrl is None:
            raise ConfigError(f"cannot sweep {axis} on an uncontrolled config")
        return base.replace(ctrl=base.ctrl.replace(**{axis: float(value)}))
    if axis == "rho":
        m = base.mask
        return base.replace(mask=MaskSpec(m.kind, m.center, float(value)))
    raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")


def sweep(base: SimConfig, axis: str, values: Sequence[float], jobs: int = 1) -> list[RunReport]:
    """One independent run per value, reports in input order."""
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    configs = [with_axis(base, axis, v) for v in values]
    if jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, configs))
    return [run(c) for c in configs]


def write_timeseries(report: RunReport, path) -> None:
    s = report.series
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SERIES_COLUMNS)
        for i in range(s["t"].size):
            w.writerow([repr(float(s[c][i])) for c in SERIES_COLUMNS])


def read_timeseries(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {c: np.array([float(r[c]) for r in rows]) for c in SERIES_COLUMNS}


def write_snapshot(f: np.ndarray, g: GridSpec, t: float, path) -> None:
    """Header ``# nx ny dx dy t`` then ny rows of nx values, y increasing."""
    with open(path, "w") as fh:
        fh.write(f"# {g.nx} {g.ny} {g.dx!r} {g.dy!r} {float(t)!r}\n")
        for j in range(g.ny):
            fh.write(" ".join(repr(float(v)) for v in f[:, j]) + "\n")


def read_snapshot(path) -> tuple[np.ndarray, dict]:
    with open(path) as fh:
        header = fh.readline().lstrip("#").split()
        rows = [list(map(float, line.split())) for line in fh if line.strip()]
    nx, ny = int(header[0]), int(header[1])
    meta = {"nx": nx, "ny": ny, "dx": float(header[2]), "dy": float(header[3]), "t": float(header[4])}
    f = np.array(rows).T
    if f.shape != (nx, ny):
        raise ValueError(f"snapshot {path}: expected {nx}x{ny} values, got {f.shape}")
    return f, meta


def format_summary(report: RunReport) -> str:
    lines = []
    for k, v in report.summary().items():
        lines.append(f"{k} = {'none' if v is None else v}")
    return "\n".join(lines) + "\n"


def write_outputs(report: RunReport, out_dir) -> Path:
    """Write timeseries.csv, summary.txt, config.ini and snapshots/ under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_timeseries(report, out / "timeseries.csv")
    (out / "summary.txt").write_text(format_summary(report))
    (out / "config.ini").write_text(cfgmod.dumps(report.config))
    if report.snapshots:
        snap_dir = out / "snapshots"
        snap_dir.mkdir(exist_ok=True)
        for t, fields in sorted(report.snapshots.items()):
            for name, f in fields.items():
                write_snapshot(f, report.config.grid, t, snap_dir / f"{name}_t{t:08.3f}.txt")
    return out


def parse_values(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse sweep values {text!r}") from None
    if not vals:
        raise ConfigError("sweep needs at least one value")
    return vals


def summary_table(axis: str, values: Iterable[float], reports: Iterable[RunReport]) -> str:
    lines = [f"{axis:>10} {'conv_time_days':>15} {'control_cost':>14}"]
    for v, r in zip(values, reports):
        ct = "none" if r.convergence_time is None else f"{r.convergence_time:g}"
        lines.append(f"{v:>10g} {ct:>15} {r.control_cost:>14.4e}")
    return "\n".join(lines)
