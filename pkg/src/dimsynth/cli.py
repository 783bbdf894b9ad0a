"""Command-line entry point: ``dimsynth jacobian | evaluate | synthesize``.

Exit codes: 0 success, 1 synthesis failure or type-2 singularity, 2 input error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .interior_point import SynthesisOptions
from .io import (
    DimensionMismatch,
    ParseError,
    design_vector,
    format_design,
    load_catalog,
    load_configuration,
    load_topology,
    prescription_to_csv,
    prescription_to_json,
    results_from_json,
)
from .jacobian import NonSquareA2, SingularA2, assemble_system, reduced_jacobian, type2_matrices
from .design import DesignLayout
from .metrics import evaluate
from .multistart import TASK_POINT
from .synthesis import EmptyCatalog, SynthesisFailure, derive_link_lengths, rank_prescription, run_catalog
from .topology import TopologyError

EXIT_OK, EXIT_FAILURE, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _task_point(text: str | None):
    if text is None:
        return None
    try:
        v = [float(s) for s in text.split(",")]
    except ValueError:
        raise InputError(f"--task-point {text!r}: expected x,y,z") from None
    if len(v) != 3 or not all(math.isfinite(c) for c in v):
        raise InputError(f"--task-point {text!r}: expected three finite numbers")
    return np.array(v)


def _matrix(name: str, M) -> str:
    with np.printoptions(precision=17, suppress=False, linewidth=160):
        return f"{name} =\n{np.array2string(np.asarray(M), separator=', ')}"


def cmd_jacobian(args, out) -> int:
    t = load_topology(args.topology)
    cfg = load_configuration(args.configuration, t, _task_point(args.task_point))
    parts = assemble_system(t, cfg)
    print(f"topology: {t.name}", file=out)
    print(f"active: {', '.join(map(str, parts.active))}", file=out)
    print(f"passive: {', '.join(map(str, parts.passive)) or '-'}", file=out)
    t2 = type2_matrices(parts)
    if t2 is None:
        print("serial: A~/B~ not applicable", file=out)
    else:
        det = float(np.linalg.det(parts.A2))
        print(f"det(A2) = {det!r}", file=out)
        print(_matrix("B~", t2[1]), file=out)
        print(f"A~ = {det!r} * I", file=out)
    try:
        jac, _ = reduced_jacobian(parts)
    except SingularA2 as exc:
        print(f"error: type-2 singularity: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(_matrix("J~", jac), file=out)
    rep = evaluate(t, cfg)
    print(f"mu = {rep.mu!r}", file=out)
    print(f"mu_bar = {rep.mu_bar!r}", file=out)
    print(f"kappa = {rep.kappa!r}", file=out)
    return EXIT_OK


def _load_design(args, t):
    """Configuration from a YAML configuration or a synthesis JSON result."""
    path = Path(args.design)
    if path.suffix.lower() == ".json":
        results = results_from_json(path.read_text(), str(path))
        match = [r for r in results if r.name == (args.name or t.name)]
        if not match:
            raise InputError(f"{path}: no result named {args.name or t.name!r}")
        r = match[0]
        x = design_vector(t, r)
        a = _task_point(args.task_point)
        return DesignLayout.for_topology(t).unpack(x, r.task_point if a is None else a)
    return load_configuration(args.design, t, _task_point(args.task_point))


def cmd_evaluate(args, out) -> int:
    t = load_topology(args.topology)
    cfg = _load_design(args, t)
    try:
        rep = evaluate(t, cfg)
    except SingularA2 as exc:
        print(f"error: type-2 singularity: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    lengths = derive_link_lengths(t, cfg)
    if args.format == "json":
        json.dump({"name": t.name, "mu": rep.mu,
                   "mu_bar": None if math.isnan(rep.mu_bar) else rep.mu_bar,
                   "kappa": None if math.isinf(rep.kappa) else rep.kappa,
                   "length": rep.length, "warnings": list(rep.warnings),
                   "segments": [{"link": l, "segment": s, "length": d} for l, s, d in lengths]},
                  out, indent=2)
        out.write("\n")
        return EXIT_OK
    print(f"topology: {t.name}", file=out)
    print(f"mu = {rep.mu:.6g}", file=out)
    print(f"mu_bar = {rep.mu_bar:.6g}", file=out)
    print(f"kappa = {rep.kappa:.6g}", file=out)
    print(f"L = {rep.length:.6g}" if rep.length is not None else "L = n/a (all prismatic)", file=out)
    for w in rep.warnings:
        print(f"warning: {w}", file=out)
    layout = DesignLayout.for_topology(t)
    for line in format_design(layout.names, layout.pack(cfg)):
        print(f"  {line}", file=out)
    for link, seg, d in lengths:
        print(f"link {link} segment {seg}: {d:.2f}", file=out)
    return EXIT_OK


def cmd_synthesize(args, out) -> int:
    name, task_point, catalog = load_catalog(args.catalog)
    a = _task_point(args.task_point)
    if a is not None:
        task_point = a
    if not catalog:
        raise EmptyCatalog(f"{args.catalog}: catalog has no topologies")
    opts = SynthesisOptions(n_restarts=args.restarts, rng_seed=args.seed, workers=args.workers)
    results = run_catalog(catalog, task_point, opts)
    p = rank_prescription(results)
    text = prescription_to_json(p) if args.format == "json" else prescription_to_csv(p, args.ajv)
    if args.out:
        Path(args.out).write_text(text)
    else:
        out.write(text)
    failed = [r for r in results if isinstance(r, SynthesisFailure)]
    for f in failed:
        print(f"warning: {f.name}: {f.reason}", file=sys.stderr)
    return EXIT_FAILURE if len(failed) == len(results) else EXIT_OK


def _positive_int(text):
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dimsynth", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    tp = dict(metavar="X,Y,Z", help="task point (default: from file, else %s)" % ",".join(map(str, TASK_POINT)))

    j = sub.add_parser("jacobian", help="assemble and reduce the Jacobian at a configuration")
    j.add_argument("topology")
    j.add_argument("configuration")
    j.add_argument("--task-point", **tp)
    j.set_defaults(func=cmd_jacobian)

    e = sub.add_parser("evaluate", help="metrics and link lengths of a design")
    e.add_argument("topology")
    e.add_argument("design", help="configuration YAML or synthesis JSON")
    e.add_argument("--name", help="which result to take from a JSON prescription")
    e.add_argument("--task-point", **tp)
    e.add_argument("--format", choices=("text", "json"), default="text")
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("synthesize", help="multi-start synthesis over a catalog")
    s.add_argument("catalog")
    s.add_argument("--task-point", **tp)
    s.add_argument("--restarts", type=_positive_int, default=SynthesisOptions.n_restarts)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--workers", type=_positive_int, default=1)
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.add_argument("--ajv", action="store_true", help="append the actuated-joint column to CSV")
    s.add_argument("--out")
    s.set_defaults(func=cmd_synthesize)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, out)
    except (ParseError, TopologyError, InputError, DimensionMismatch, EmptyCatalog,
            FileNotFoundError, NonSquareA2) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
