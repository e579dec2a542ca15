"""Command line interface: ``graphon-sampling <subcommand> ...``.

Exit codes: 0 success, 2 validation error (one JSON line on stderr),
1 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .consistency import ConsistencyReport, config_from_dict, run_consistency
from .core import ValidationError, average_graphon, closed_form_graphon, degree_function, is_connected
from .cutnorm import cut_distance
from .graphs import RNG_ALGORITHM, graph_to_graphon, homomorphism_density, homomorphism_density_graphon
from .graphs import sample_w_random_graph
from .io import (
    dumps,
    function_from_dict,
    function_to_dict,
    graph_from_dict,
    graph_to_dict,
    graphon_from_dict,
    graphon_to_dict,
    load_json,
    partition_from_dict,
    psi_from_json,
    rows_to_csv,
    write_text,
)
from .sampling import build_sampling_system, frame_bounds
from .spectral import KINDS, discretize, eigendecompose, pw_project


class UsageError(ValidationError):
    def __init__(self, message: str):
        super().__init__(message, "usage")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class _VersionAction(argparse.Action):
    def __init__(self, option_strings, dest=argparse.SUPPRESS, **kwargs):
        super().__init__(option_strings, dest, nargs=0, default=argparse.SUPPRESS, **kwargs)

    def __call__(self, parser, namespace, values, option_string=None):
        print(f"graphon-sampling {__version__} (rng {RNG_ALGORITHM})")
        parser.exit()


def _emit(text: str, out) -> None:
    if out:
        write_text(out, text)
    else:
        sys.stdout.write(text)


def _graphon(path):
    return graphon_from_dict(load_json(path))


def cmd_info(args):
    w = _graphon(args.graphon)
    d = degree_function(w).values if w.mode == "graphon" else None
    info = {
        "cells": w.n_cells,
        "mode": w.mode,
        "min": float(w.values.min()),
        "max": float(w.values.max()),
        "symmetrized": w.symmetrized,
        "degree_min": None if d is None else float(d.min()),
        "degree_max": None if d is None else float(d.max()),
        "connected": None if w.mode != "graphon" else is_connected(w),
    }
    _emit(dumps(info), args.out)


def cmd_degree(args):
    w = _graphon(args.graphon)
    if w.mode != "graphon":
        raise ValidationError("degree function needs a graphon", "kernel-mode")
    _emit(dumps(function_to_dict(degree_function(w))), args.out)


def cmd_spectrum(args):
    dec = eigendecompose(discretize(_graphon(args.graphon), args.kind))
    rows = [(i, float(lam)) for i, lam in enumerate(dec.eigenvalues)]
    _emit(rows_to_csv(rows, ("index", "eigenvalue")), args.out)


def cmd_pw_project(args):
    w = _graphon(args.graphon)
    f = function_from_dict(load_json(args.signal))
    _emit(dumps(function_to_dict(pw_project(w, args.gamma, f))), args.out)


def cmd_sample_graph(args):
    g = sample_w_random_graph(_graphon(args.graphon), args.n, args.seed)
    _emit(dumps(graph_to_dict(g)), args.out)


def cmd_homdensity(args):
    f = graph_from_dict(load_json(args.pattern))
    if (args.graph is None) == (args.graphon is None):
        raise UsageError("give exactly one of --graph and --graphon")
    if args.graph is not None:
        t = homomorphism_density(f, graph_from_dict(load_json(args.graph)))
    else:
        t = homomorphism_density_graphon(f, _graphon(args.graphon), exact=args.exact)
    out = {"value": float(t)}
    if isinstance(t, Fraction):
        out["fraction"] = f"{t.numerator}/{t.denominator}"
    _emit(dumps(out), args.out)


def cmd_cutnorm(args):
    a, b = _graphon(args.a), _graphon(args.b)
    if args.exact:
        res = cut_distance(a, b, exact=True)
    else:
        if args.seed is None:
            raise UsageError("the heuristic cut norm is randomized: --seed is required (or use --exact)")
        res = cut_distance(a, b, exact=False, restarts=args.restarts, seed=args.seed)
    out = {
        "value": res.value,
        "S_cells": res.s_cells,
        "T_cells": res.t_cells,
        "breakpoints": res.grid.breakpoints.tolist(),
        "method": res.method,
    }
    _emit(dumps(out), args.out)


def cmd_framebounds(args):
    w = _graphon(args.graphon)
    partition = partition_from_dict(load_json(args.partition))
    psi = psi_from_json(load_json(args.psi)) if args.psi else None
    sys_ = build_sampling_system(w, partition, psi)
    _emit(dumps(frame_bounds(sys_, args.gamma).to_dict()), args.out)


def cmd_consistency(args):
    cfg = config_from_dict(load_json(args.config))
    report = run_consistency(cfg, threads=args.threads)
    _emit(dumps(report.to_dict()), args.out)
    if args.csv:
        write_text(args.csv, rows_to_csv(report.rows, ConsistencyReport.CSV_COLUMNS))


def cmd_average(args):
    if (args.graphon is None) == (args.closed_form is None):
        raise UsageError("give exactly one of --graphon and --closed-form")
    if args.graphon is not None:
        w = _graphon(args.graphon)
    else:
        params = json.loads(args.params) if args.params else {}
        w = closed_form_graphon(args.closed_form, **params)
    _emit(dumps(graphon_to_dict(average_graphon(w, args.n))), args.out)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="graphon-sampling", description=__doc__.splitlines()[0])
    p.add_argument("--version", action=_VersionAction, help="print version and RNG identifier")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker cap")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=fn)
        sp.add_argument("--out", help="output file (default stdout)")
        return sp

    sp = add("info", cmd_info, "graphon metadata")
    sp.add_argument("--graphon", required=True)

    sp = add("degree", cmd_degree, "degree function")
    sp.add_argument("--graphon", required=True)

    sp = add("spectrum", cmd_spectrum, "eigenvalues of a discretized operator (CSV)")
    sp.add_argument("--graphon", required=True)
    sp.add_argument("--kind", choices=KINDS, default="laplacian")

    sp = add("pw-project", cmd_pw_project, "Paley-Wiener projection of a signal")
    sp.add_argument("--graphon", required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--signal", required=True)

    sp = add("sample-graph", cmd_sample_graph, "draw a w-random graph")
    sp.add_argument("--graphon", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)

    sp = add("homdensity", cmd_homdensity, "homomorphism density t(F, G) or t(F, w)")
    sp.add_argument("--pattern", "--f", dest="pattern", required=True)
    sp.add_argument("--graph", "--g", dest="graph")
    sp.add_argument("--graphon")
    sp.add_argument("--exact", action="store_true", help="rational arithmetic for --graphon")

    sp = add("cutnorm", cmd_cutnorm, "cut norm of the difference of two graphons")
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    sp.add_argument("--exact", action="store_true")
    sp.add_argument("--restarts", type=int, default=64)
    sp.add_argument("--seed", type=int)

    sp = add("framebounds", cmd_framebounds, "frame-bound certificate for a partition")
    sp.add_argument("--graphon", required=True)
    sp.add_argument("--partition", required=True)
    sp.add_argument("--psi")
    sp.add_argument("--gamma", type=float, required=True)

    sp = add("consistency-run", cmd_consistency, "sampling consistency along a graphon sequence")
    sp.add_argument("--config", required=True)
    sp.add_argument("--csv")

    sp = add("average", cmd_average, "average a graphon over a uniform n-grid")
    sp.add_argument("--graphon")
    sp.add_argument("--closed-form")
    sp.add_argument("--params", help="JSON object of closed-form parameters")
    sp.add_argument("--n", type=int, required=True)
    return p


def _fail(code: str, message: str, status: int) -> int:
    sys.stderr.write(json.dumps({"code": code, "message": message}) + "\n")
    return status


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        args.func(args)
    except ValidationError as exc:
        return _fail(exc.code, str(exc), 2)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001
        return _fail("internal", f"{type(exc).__name__}: {exc}", 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
