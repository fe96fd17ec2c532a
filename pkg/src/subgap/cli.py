"""Command-line interface: bias sweeps, conductance maps, single-point runs."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .model import JunctionParams, NumericsConfig, load_config
from .observables import solve_point
from .sweep import (SweepSpec, conductance_map, format_csv_row, run_sweep,
                    CSV_HEADER_COMMENTS)
from .observables import CurrentRecord


def _parse_sweep(text: str):
    parts = text.split(":")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("--sweep expects param:start:stop:count")
    return parts[0], float(parts[1]), float(parts[2]), int(parts[3])


def _parse_grid(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("grid expects start:stop:count")
    return np.linspace(float(parts[0]), float(parts[1]), int(parts[2]))


def _load(args) -> tuple[JunctionParams, NumericsConfig]:
    if args.config:
        return load_config(args.config)
    return JunctionParams(), NumericsConfig()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="subgap",
                                 description="Driven quantum-dot junction transport")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="flat key=value parameter file")
        sp.add_argument("--solver", choices=("evolve", "fourier", "both"),
                        default="fourier")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")

    iv = sub.add_parser("iv", help="current-voltage (or any 1d parameter) sweep")
    common(iv)
    iv.add_argument("--sweep", type=_parse_sweep, required=True,
                    metavar="param:start:stop:count")

    mp = sub.add_parser("map", help="conductance dI/dV over a V x omega grid")
    common(mp)
    mp.add_argument("--v-grid", type=_parse_grid, required=True, metavar="start:stop:count")
    mp.add_argument("--omega-grid", type=_parse_grid, required=True,
                    metavar="start:stop:count")

    pt = sub.add_parser("point", help="single parameter point with diagnostics")
    common(pt)
    pt.add_argument("--bias", type=float, help="override the config bias")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    params, numerics = _load(args)

    if args.command == "iv":
        name, start, stop, count = args.sweep
        spec = SweepSpec(param=name, start=start, stop=stop, count=count,
                         base=params, numerics=numerics, solver=args.solver,
                         out=args.out, fmt=args.fmt, jobs=args.jobs)
        records = run_sweep(spec)
        if not args.out:
            for line in CSV_HEADER_COMMENTS:
                print(line)
            print(",".join(CurrentRecord.COLUMNS))
            for rec in records:
                print(format_csv_row(rec))
        return 0

    if args.command == "map":
        rows = conductance_map(args.v_grid, args.omega_grid, params,
                               numerics=numerics, solver=args.solver,
                               jobs=args.jobs, out=args.out)
        if not args.out:
            for row in rows:
                print(row)
        return 0

    if args.command == "point":
        if args.bias is not None:
            params = params.with_bias(args.bias)
        result, ctx = solve_point(params, numerics, solver=args.solver,
                                  return_context=True)
        records = result if isinstance(result, list) else [result]
        out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
        basis = ctx["basis"]
        out.write(basis.diagnostics() + "\n")
        out.write(ctx["gen"].norms() + "\n")
        for rec in records:
            out.write(",".join(CurrentRecord.COLUMNS) + "\n")
            out.write(format_csv_row(rec) + "\n")
        if args.out:
            out.close()
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
