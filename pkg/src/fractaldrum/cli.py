"""Command-line front end.

    fractaldrum gen       --ifs cantor --level 3
    fractaldrum spectrum  --ifs carpet --level 1 --refine 9
    fractaldrum classify  --ifs cantor --level 1 --refine 9
    fractaldrum green     --ifs cantor --level 1 --refine 9 --batch pairs.csv
    fractaldrum dims      --ifs carpet --level 1000 --trunc 100 --json

Exit status: 0 success, 2 configuration/input error, 3 numerical error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import errors
from .diaperiodic import classify_spectrum, format_classification, predicted_spectrum
from .dimension import analytic_initiator, dimension_report
from .green import (GreenEvaluator, green_direct, green_modal, green_renormalized,
                    read_green_batch)
from .grid import box_counts, format_box_counts, format_cellset, rasterize_prefractal, refine_to_grid
from .ifs import load_ifs
from .laplacian import domain_spectrum, format_plateau, format_spectrum

_MODULE_NAMES = {
    "ifs": "ifs_core",
    "grid": "prefractal_grid",
    "laplacian": "laplace_spectrum",
    "diaperiodic": "diaperiodic",
    "green": "green",
    "dimension": "dimension",
    "cli": "cli",
}


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _refinement(text):
    v = int(text)
    if v < 2:
        raise argparse.ArgumentTypeError(f"must be >= 2, got {v}")
    return v


def _tolerance(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--ifs", required=True, help="preset name (interval, cantor, carpet, "
                        "gasket) or path to an IFS definition file")
    common.add_argument("--level", type=_nonneg_int, default=1, help="prefractal level N")
    common.add_argument("--base", type=_positive_int, default=None,
                        help="cells per side per iteration (default: 1/ratio)")
    common.add_argument("--refine", type=_refinement, default=9, help="grid steps per cell side")
    common.add_argument("--trunc", type=_positive_int, default=100, help="truncation M")
    common.add_argument("--cluster-tol", type=_tolerance, default=1e-3)
    common.add_argument("--match-tol", type=_tolerance, default=5e-2)
    common.add_argument("--pole-guard", type=_tolerance, default=1e-6)
    common.add_argument("--mode", choices=("analytic", "numeric"), default="numeric")
    common.add_argument("--exponent", type=float, default=0.5,
                        help="magnitude = (-eigenvalue)**exponent; 0.5 gives wavenumbers")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--json", action="store_true", help="machine-readable report")

    parser = argparse.ArgumentParser(prog="fractaldrum", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen", parents=[common], help="rasterize a prefractal")
    sp = sub.add_parser("spectrum", parents=[common], help="Dirichlet spectrum + plateau data")
    sp.add_argument("--k", type=_positive_int, default=None,
                    help="only the k smallest eigenvalues (iterative solver)")
    sub.add_parser("classify", parents=[common], help="diaperiodic/interconnective split")
    g = sub.add_parser("green", parents=[common], help="evaluate Green's functions on a batch")
    g.add_argument("--batch", type=Path, required=True, help="CSV rows x...,x'...,lambda")
    g.add_argument("--kind", choices=("modal", "renormalized", "direct"), default="modal")
    sub.add_parser("dims", parents=[common], help="spectral / box / Moran dimension report")
    return parser


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _header(args, **extra) -> str:
    items = {"ifs": args.ifs, "level": args.level, "refine": args.refine}
    items.update(extra)
    return "".join(f"# {k}: {v}\n" for k, v in items.items())


def cmd_gen(args) -> str:
    ifs = load_ifs(args.ifs)
    cs = rasterize_prefractal(ifs, args.level, args.base)
    path = _write(args.out, "cells.txt", format_cellset(cs))
    counts = box_counts(cs) if args.level >= 1 else []
    if counts:
        _write(args.out, "box_counts.csv", format_box_counts(counts))
    expected = ifs.p ** args.level
    check = "ok" if len(cs) == expected else "differs"
    return f"cells: {len(cs)} (p^N = {expected}, {check}); written to {path}\n"


def _numeric_spectrum(args, ifs, level, vectors=False, k=None):
    g = refine_to_grid(rasterize_prefractal(ifs, level, args.base), args.refine)
    s = domain_spectrum(g, args.cluster_tol, want_vectors=vectors, k=k, seed=args.seed,
                        exponent=args.exponent, level=level)
    return g, s


def cmd_spectrum(args) -> str:
    ifs = load_ifs(args.ifs)
    if args.mode == "analytic":
        seed = analytic_initiator(ifs, args.trunc)
        s = predicted_spectrum(seed, ifs.ratios, args.level).to_spectrum().truncate(args.trunc)
    else:
        _, s = _numeric_spectrum(args, ifs, args.level, k=args.k)
    path = _write(args.out, "spectrum.csv", format_spectrum(s))
    _write(args.out, "plateau.csv", format_plateau(s))
    return f"distinct magnitudes: {len(s)}; multiplicities: {sorted(set(s.multiplicities.tolist()))[:10]}; " \
           f"written to {path}\n"


def cmd_classify(args) -> str:
    if args.level < 1:
        raise errors.ArgumentError("classify needs --level >= 1")
    ifs = load_ifs(args.ifs)
    _, parent = _numeric_spectrum(args, ifs, args.level - 1)
    _, child = _numeric_spectrum(args, ifs, args.level)
    result = classify_spectrum(child, parent, ifs.ratios, args.match_tol)
    path = _write(args.out, "classification.csv", format_classification(result))
    return (f"diaperiodic: {result.diaperiodic_count()}; "
            f"interconnective: {result.interconnective_count()}; written to {path}\n")


def cmd_green(args) -> str:
    ifs = load_ifs(args.ifs)
    try:
        text = args.batch.read_text(encoding="utf-8")
    except OSError as exc:
        raise errors.ParseError(f"cannot read batch file: {exc.strerror}", None, args.batch) from None
    xs, xps, lams = read_green_batch(text, ifs.dim)
    if args.kind == "renormalized":
        if args.level < 1:
            raise errors.ArgumentError("renormalized Green's function needs --level >= 1")
        g, s = _numeric_spectrum(args, ifs, args.level - 1, vectors=True)
    else:
        g, s = _numeric_spectrum(args, ifs, args.level, vectors=True)
    ev = GreenEvaluator.from_spectrum(s, g, pole_guard=args.pole_guard)
    out = [",".join([f"x{i}" for i in range(ifs.dim)] + [f"xp{i}" for i in range(ifs.dim)]
                    + ["lambda", "value"])]
    for x, xp, lam in zip(xs, xps, lams):
        if args.kind == "modal":
            v = green_modal(ev, x, xp, lam)
        elif args.kind == "renormalized":
            v = green_renormalized(ev, ifs, x, xp, lam)
        else:
            v = green_direct(g, x, xp, lam)
        out.append(",".join(repr(float(t)) for t in [*x, *xp, lam, v]))
    body = _header(args, kind=args.kind) + "\n".join(out) + "\n"
    path = _write(args.out, "green.csv", body)
    return f"evaluated {len(lams)} rows; written to {path}\n"


def cmd_dims(args) -> str:
    ifs = load_ifs(args.ifs)
    report = dimension_report(ifs, level=args.level, truncation=args.trunc, mode=args.mode,
                              refinement=args.refine, cluster_tol=args.cluster_tol,
                              base=args.base)
    _write(args.out, "report.csv", report.to_csv())
    return report.to_json() if args.json else report.to_text()


COMMANDS = {
    "gen": cmd_gen,
    "spectrum": cmd_spectrum,
    "classify": cmd_classify,
    "green": cmd_green,
    "dims": cmd_dims,
}


def _origin(exc) -> str:
    tb = exc.__traceback__
    name = "cli"
    while tb is not None:
        mod = tb.tb_frame.f_globals.get("__name__", "")
        if mod.startswith("fractaldrum."):
            name = _MODULE_NAMES.get(mod.split(".")[1], name)
        tb = tb.tb_next
    return name


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sys.stdout.write(COMMANDS[args.command](args))
    except errors.NumericalError as exc:
        sys.stderr.write(f"error [{_origin(exc)}]: {exc}\n")
        return 3
    except errors.FractalDrumError as exc:
        sys.stderr.write(f"error [{_origin(exc)}]: {exc}\n")
        return 2
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        sys.stderr.write(f"error [laplace_spectrum]: {exc}\n")
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
