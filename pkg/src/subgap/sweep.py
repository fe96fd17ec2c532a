"""Parameter sweeps, conductance maps, and flat-file output.

Sweep points are independent solves; a worker pool computes them while the
writer emits rows in grid order, flushing as soon as a prefix is complete.
Per-point failures are recorded in the status column and do not stop the
sweep.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .model import JunctionParams, NumericsConfig
from .observables import CurrentRecord, solve_point

_BOTH_LEAD_PARAMS = {
    "g": ("g_L", "g_R"),
    "gamma": ("gamma_L", "gamma_R"),
    "delta": ("delta_L", "delta_R"),
    "temp": ("temp_L", "temp_R"),
    "phi": ("phi_L", "phi_R"),
}

CSV_HEADER_COMMENTS = (
    "# currents in units of gamma_ref = (gamma_L + gamma_R)/2; energies in units of Delta",
    "# sign convention: positive current = particles flowing left -> right through the"
    " device (I_s_L = -dN_L/dt, I_s_R = +dN_R/dt, likewise pair currents in pairs/time)",
    "# residual = (dN_dot + dN_L + dN_R + 2 dP_L + 2 dP_R)/dt + I_loss, units of gamma_ref",
)


def apply_param(p: JunctionParams, name: str, value: float) -> JunctionParams:
    """Return params with one swept field replaced; 'g','gamma',... set both leads."""
    if name in _BOTH_LEAD_PARAMS:
        lfield, rfield = _BOTH_LEAD_PARAMS[name]
        return replace(p, **{lfield: value, rfield: value})
    if name == "V":
        name = "bias"
    if not hasattr(p, name):
        raise ValueError(f"unknown sweep parameter {name!r}")
    return replace(p, **{name: value})


@dataclass
class SweepSpec:
    """One-dimensional parameter sweep over a fixed junction."""

    param: str
    start: float
    stop: float
    count: int
    base: JunctionParams
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    solver: str = "fourier"
    out: str | None = None
    fmt: str = "csv"
    jobs: int = 1

    def __post_init__(self):
        if self.count < 2:
            raise ValueError("sweep needs count >= 2")
        if self.start == self.stop:
            raise ValueError("sweep needs start != stop")
        if self.solver not in ("fourier", "evolve", "both"):
            raise ValueError(f"unknown solver {self.solver!r}")
        apply_param(self.base, self.param, self.start)  # validate the name early

    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


def _solve_one(args) -> list[CurrentRecord]:
    p, numerics, solver = args
    try:
        recs = solve_point(p, numerics, solver=solver)
        return recs if isinstance(recs, list) else [recs]
    except Exception as exc:  # per-point failure -> status row
        solvers = ("fourier", "evolve") if solver == "both" else (solver,)
        msg = str(exc).replace("\n", " ")[:120].replace(",", ";")
        return [CurrentRecord.failed(p, s, msg) for s in solvers]


class _Writer:
    """Emits records in grid order, flushing incrementally."""

    def __init__(self, path: str | None, fmt: str):
        self.fmt = fmt
        self.fh = open(path, "w", encoding="utf-8") if path else None
        self.first = True
        if self.fh and fmt == "csv":
            for line in CSV_HEADER_COMMENTS:
                self.fh.write(line + "\n")
            self.fh.write(",".join(CurrentRecord.COLUMNS) + "\n")
        elif self.fh:
            self.fh.write("[\n")

    def write(self, rec: CurrentRecord):
        if not self.fh:
            return
        if self.fmt == "csv":
            self.fh.write(format_csv_row(rec) + "\n")
        else:
            prefix = "" if self.first else ",\n"
            self.fh.write(prefix + json.dumps(record_dict(rec)))
            self.first = False
        self.fh.flush()

    def close(self):
        if self.fh:
            if self.fmt == "json":
                self.fh.write("\n]\n")
            self.fh.close()


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.12g}"


def format_csv_row(rec: CurrentRecord) -> str:
    return ",".join(_fmt(v) for v in rec.row())


def record_dict(rec: CurrentRecord) -> dict:
    return {c: getattr(rec, c) for c in CurrentRecord.COLUMNS}


def run_sweep(spec: SweepSpec) -> list[CurrentRecord]:
    """Solve every grid point; deterministic given the spec."""
    points = [(apply_param(spec.base, spec.param, float(v)), spec.numerics, spec.solver)
              for v in spec.grid()]
    writer = _Writer(spec.out, spec.fmt)
    records: list[CurrentRecord] = []
    try:
        if spec.jobs > 1:
            results: dict[int, list[CurrentRecord]] = {}
            next_flush = 0
            with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
                for idx, recs in enumerate(pool.map(_solve_one, points)):
                    results[idx] = recs
                    while next_flush in results:
                        for r in results.pop(next_flush):
                            writer.write(r)
                            records.append(r)
                        next_flush += 1
        else:
            for args in points:
                for r in _solve_one(args):
                    writer.write(r)
                    records.append(r)
    finally:
        writer.close()
    return records


# ---------------------------------------------------------------------------
# conductance map


def central_differences(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """dy/dx on the sample grid: central in the interior, one-sided at the ends."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    out = np.empty_like(y)
    out[1:-1] = (y[2:] - y[:-2]) / (x[2:] - x[:-2])
    out[0] = (y[1] - y[0]) / (x[1] - x[0])
    out[-1] = (y[-1] - y[-2]) / (x[-1] - x[-2])
    return out


MAP_COLUMNS = ("V", "omega", "I_s_R", "dIdV", "status")


def conductance_map(v_grid: np.ndarray, omega_grid: np.ndarray, base: JunctionParams,
                    numerics: NumericsConfig | None = None, solver: str = "fourier",
                    jobs: int = 1, out: str | None = None) -> list[dict]:
    """dI/dV of the right-lead single-particle current on a V x omega grid."""
    v_grid = np.asarray(v_grid, dtype=float)
    omega_grid = np.asarray(omega_grid, dtype=float)
    if len(v_grid) < 2 or len(omega_grid) < 1:
        raise ValueError("conductance map needs >= 2 bias points and >= 1 omega")
    numerics = numerics or NumericsConfig()
    rows = []
    for om in omega_grid:
        pts = [(replace(base, omega=float(om), bias=float(v)), numerics, solver)
               for v in v_grid]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                recs = [r[0] for r in pool.map(_solve_one, pts)]
        else:
            recs = [_solve_one(a)[0] for a in pts]
        cur = np.array([r.I_s_R for r in recs])
        ok = np.isfinite(cur)
        didv = np.full_like(cur, np.nan)
        if ok.all():
            didv = central_differences(cur, v_grid)
        for v, r, d in zip(v_grid, recs, didv):
            rows.append({"V": float(v), "omega": float(om), "I_s_R": r.I_s_R,
                         "dIdV": float(d), "status": r.status})
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write("# conductance map: dIdV = d(I_s_R)/dV, currents in units of"
                     " gamma_ref\n")
            fh.write(",".join(MAP_COLUMNS) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(row[c]) for c in MAP_COLUMNS) + "\n")
    return rows
