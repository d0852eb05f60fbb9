"""Command line interface: ``epival <group> <command> [options]``.

Exit codes: 0 success, 2 I/O error, 3 invalid input or usage, 4 suite
failure, 5 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import convexfn as cf
from . import harness, repro
from .decompose import homogeneous_components, polarize, polynomial_fit
from .errors import EpivalError, OracleFailure, RetryExhausted
from .geometry import Polyhedron
from .hessian import SmoothGridFunction, Window, duality_check, hessian_measure, ps_volume_mc, smooth_theta
from .serialize import csv_text, dumps, read_json
from .valuations import (
    TestFunction,
    ValuationOracle,
    body_valuation,
    dual_zeta_valuation,
    zeta_oracle,
    zeta_valuation,
)

EXIT_OK, EXIT_IO, EXIT_VALIDATION, EXIT_SUITE, EXIT_NUMERIC = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass
class RunConfig:
    """Everything a run depends on; outputs are a function of this record."""

    command: list
    options: dict = field(default_factory=dict)
    seed: int = 0
    workers: int = 1


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _default_seed() -> int:
    raw = os.environ.get("EPIVAL_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"EPIVAL_SEED must be an integer, got {raw!r}")


def _load_fn(path: str):
    return cf.fn_from_dict(read_json(path))


def _emit(text: str, out: str | None):
    if out and out != "-":
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _oracle(expr: str, dim: int) -> ValuationOracle:
    """Parse ``[c*]kind:arg`` terms joined by ``+``.

    kinds: ``zeta:<file>`` (zeta valuation), ``const:<c>`` (constant).
    """
    terms = []
    for term in expr.split("+"):
        coef = 1.0
        if "*" in term:
            c, term = term.split("*", 1)
            coef = float(c)
        if ":" not in term:
            raise ValueError(f"oracle term {term!r} must look like kind:arg")
        kind, arg = term.split(":", 1)
        if kind == "zeta":
            z = TestFunction.from_dict(read_json(arg))
            if z.dim != dim:
                raise ValueError("test function dimension differs from the input function")
            terms.append((coef, "zeta", z))
        elif kind == "const":
            terms.append((coef, "const", float(arg)))
        else:
            raise ValueError(f"unknown oracle kind {kind!r}")

    def ev(u):
        total = 0.0
        for c, kind, obj in terms:
            total += c * (zeta_valuation(obj, u) if kind == "zeta" else obj)
        return total

    degrees = {dim if k == "zeta" else 0 for _, k, _ in terms}
    deg = degrees.pop() if len(degrees) == 1 else None
    return ValuationOracle(ev, True, True, deg, "cellpa", expr)


# -- handlers ---------------------------------------------------------------------

def cmd_fn(args, cfg):
    if args.cmd == "conjugate":
        f = _load_fn(args.inp)
        return dumps(cf.conjugate(f))
    if args.cmd == "scale":
        f = _load_fn(args.inp)
        return dumps(cf.epi_scale(f, args.lam))
    if args.cmd == "infconv":
        fns = [_load_fn(p) for p in args.fns.split(",")]
        weights = args.weights or [1.0] * len(fns)
        if len(weights) != len(fns):
            raise ValueError("need one weight per function")
        return dumps(cf.inf_convolve(weights, fns))
    if args.cmd == "eval":
        f = _load_fn(args.inp)
        return dumps({"x": args.x, "value": cf.eval_fn(f, np.array(args.x))})
    if args.cmd == "sublevel":
        f = _load_fn(args.inp)
        return dumps(cf.sublevel_set(f, args.t))
    raise UsageError("unknown fn command")


def cmd_val(args, cfg):
    z = TestFunction.from_dict(read_json(args.zeta))
    if args.cmd == "eval":
        u = _load_fn(args.fn)
        if not isinstance(u, cf.CellPA):
            raise ValueError("val eval needs a cell function (use dual-eval for max-affine input)")
        return dumps({"value": zeta_valuation(z, u)})
    if args.cmd == "dual-eval":
        v = _load_fn(args.fn)
        if not isinstance(v, cf.MaxAffine):
            raise ValueError("val dual-eval needs a max-affine function")
        return dumps({"value": dual_zeta_valuation(z, v, check=args.check)})
    if args.cmd == "body":
        K = Polyhedron.from_dict(read_json(args.body))
        return dumps({"value": body_valuation(zeta_oracle(z), args.y, K)})
    raise UsageError("unknown val command")


def _window(path):
    return Window.from_dict(read_json(path))


def cmd_hess(args, cfg):
    if args.cmd == "measure":
        u = _load_fn(args.fn)
        W = _window(args.window)
        if isinstance(u, cf.MaxAffine):
            from .hessian import hessian_measure_finite
            t = hessian_measure_finite(u, W)
        else:
            t = hessian_measure(u, W)
        return csv_text(["i", "value"], [[i, float(v)] for i, v in enumerate(t.values)])
    if args.cmd == "verify-ps":
        u = _load_fn(args.fn)
        W = _window(args.window)
        t = hessian_measure(u, W)
        rows = []
        for j, s in enumerate(args.s):
            est = ps_volume_mc(u, s, W, args.samples, seed=cfg.seed * 1000 + j, workers=cfg.workers)
            exact = t.ps_polynomial(s)
            within = abs(est.estimate - exact) <= 3 * est.stderr
            rows.append([float(s), exact, est.estimate, est.stderr, int(within)])
        return csv_text(["s", "polynomial", "estimate", "stderr", "within_3se"], rows)
    if args.cmd == "duality":
        v = _load_fn(args.fn)
        if isinstance(v, cf.CellPA):
            v = cf.conjugate_cell_pa(v)
        rep = duality_check(v, _window(args.window))
        n = v.dim
        rows = [[i, float(a), float(b)] for i, (a, b) in enumerate(zip(rep.lhs, rep.rhs))]
        return csv_text(["i", "theta_i_v", "theta_n_minus_i_conjugate"], rows)
    if args.cmd == "smooth":
        g = read_json(args.grid)
        n = int(g["dim"])
        A = np.asarray(g.get("hessian", np.eye(n).tolist()), dtype=float)
        v = SmoothGridFunction.quadratic(A, g["lo"], g["hi"], float(g["h"]))
        B, C = g["B"], g["C"]
        val = smooth_theta(v, args.i, B["lo"], B["hi"], C["lo"], C["hi"])
        return csv_text(["i", "value"], [[args.i, val]])
    raise UsageError("unknown hess command")


def cmd_decomp(args, cfg):
    if args.cmd == "run":
        u = _load_fn(args.fn)
        if not isinstance(u, cf.CellPA):
            raise ValueError("decomposition needs a cell function")
        Z = _oracle(args.oracle, u.dim)
        comps = homogeneous_components(Z, u, args.n, workers=cfg.workers)
        direct = Z(u)
        return dumps({"components": comps, "sum": float(comps.sum()), "direct": direct,
                      "reconstruction_defect": abs(float(comps.sum()) - direct)})
    fns = [_load_fn(p) for p in args.fns.split(",")]
    Z = _oracle(args.oracle, fns[0].dim)
    if args.cmd == "polarize":
        return dumps({"mixed_value": polarize(Z, fns, workers=cfg.workers)})
    if args.cmd == "fit":
        fit = polynomial_fit(Z, fns, args.lambdas, degree=args.degree, workers=cfg.workers)
        return dumps(fit)
    raise UsageError("unknown decomp command")


def cmd_suite(args, cfg):
    seed = cfg.seed
    if args.kind == "valuation":
        Z = harness.squared_volume_oracle() if args.negative_control else {
            n: zeta_oracle(harness.default_zeta(n)) for n in args.dims}
        rep = harness.valuation_identity_suite(Z, args.cases, seed, dims=args.dims,
                                               negative_control=args.negative_control)
    elif args.kind == "inclexcl":
        Z = {n: zeta_oracle(harness.default_zeta(n)) for n in args.dims}
        rep = harness.inclusion_exclusion_suite(Z, args.m, args.cases, seed, dims=args.dims)
    elif args.kind == "continuity":
        n = args.dims[0]
        Z = harness.cell_count_oracle() if args.negative_control else zeta_oracle(harness.continuity_zeta(n))
        rep = harness.continuity_suite(Z, n, limit=harness.continuity_limit(n),
                                       negative_control=args.negative_control)
    elif args.kind == "coercive":
        demo = harness.coercive_divergence_demo(harness.default_zeta(2), [0.5, 0.4], [[1.0, 0.2], [0.3, 1.0]],
                                                [1.0, 2.0, 4.0, 8.0, 16.0])
        dev = demo.max_relative_deviation
        rep = harness.SuiteReport("coercive", len(demo.radii), dev, 0.01,
                                  [] if dev <= 0.01 else [{"case": 0, "seed": None, "defect": dev}],
                                  None, False, demo.to_dict())
    elif args.kind == "growth":
        g = harness.growth_demo(harness.growth_eta(2), [1, 2, 3, 4, 5, 6, 7, 8])
        ok = g.c1 > 0.1 and abs(g.control_c1) <= 1e-3
        rep = harness.SuiteReport("growth", len(g.lambdas), 0.0 if ok else 1.0, 0.0,
                                  [] if ok else [{"case": 0, "seed": None, "defect": 1.0}], None, False, g.to_dict())
    else:
        raise UsageError(f"unknown suite {args.kind}")
    body = rep.to_dict()
    body["config"] = asdict(cfg)
    text = dumps(body)
    if args.out:
        _emit(text, args.out)
        text = dumps({"suite": rep.suite, "passed": rep.passed, "max_defect": rep.max_defect})
    return text, (EXIT_OK if rep.passed else EXIT_SUITE)


def cmd_repro(args, cfg):
    kwargs = {}
    if args.criterion in (1, 2, 3, 4, 5, 6, 7, 9, 10, 11):
        kwargs["seed"] = cfg.seed
    if args.criterion == 7:
        kwargs["workers"] = cfg.workers
    res = repro.run(args.criterion, **kwargs)
    sys.stderr.write(res.line() + "\n")
    return dumps(res), (EXIT_OK if res.passed else EXIT_SUITE)


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="epival", description="Valuations on piecewise-affine convex functions.")
    p.add_argument("--seed", type=int, default=None, help="random seed (default: $EPIVAL_SEED or 0)")
    p.add_argument("--workers", type=int, default=1, help="worker threads")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    groups = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    fn = groups.add_parser("fn", help="function algebra")
    fs = fn.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name in ("conjugate", "scale", "eval", "sublevel"):
        sp = fs.add_parser(name)
        sp.add_argument("--in", dest="inp", required=True)
        if name == "scale":
            sp.add_argument("--lam", type=float, required=True)
        if name == "eval":
            sp.add_argument("--x", type=_floats, required=True)
        if name == "sublevel":
            sp.add_argument("--t", type=float, required=True)
    sp = fs.add_parser("infconv")
    sp.add_argument("--fns", required=True, help="comma-separated JSON files")
    sp.add_argument("--weights", type=_floats, default=None)

    val = groups.add_parser("val", help="valuation evaluation")
    vs = val.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name in ("eval", "dual-eval"):
        sp = vs.add_parser(name)
        sp.add_argument("--zeta", required=True)
        sp.add_argument("--fn", required=True)
        if name == "dual-eval":
            sp.add_argument("--check", action="store_true")
    sp = vs.add_parser("body")
    sp.add_argument("--zeta", required=True)
    sp.add_argument("--y", type=_floats, required=True)
    sp.add_argument("--body", required=True)

    hs = groups.add_parser("hess", help="Hessian measures").add_subparsers(dest="cmd", required=True,
                                                                           parser_class=_Parser)
    sp = hs.add_parser("measure")
    sp.add_argument("--fn", required=True)
    sp.add_argument("--window", required=True)
    sp = hs.add_parser("verify-ps")
    sp.add_argument("--fn", required=True)
    sp.add_argument("--window", required=True)
    sp.add_argument("--s", type=_floats, default=[0.5, 1.0, 2.0])
    sp.add_argument("--samples", type=int, default=10 ** 6)
    sp = hs.add_parser("duality")
    sp.add_argument("--fn", required=True)
    sp.add_argument("--window", required=True)
    sp = hs.add_parser("smooth")
    sp.add_argument("--grid", required=True)
    sp.add_argument("--i", type=int, required=True)

    ds = groups.add_parser("decomp", help="decomposition").add_subparsers(dest="cmd", required=True,
                                                                          parser_class=_Parser)
    sp = ds.add_parser("run")
    sp.add_argument("--oracle", required=True)
    sp.add_argument("--fn", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp = ds.add_parser("polarize")
    sp.add_argument("--oracle", required=True)
    sp.add_argument("--fns", required=True)
    sp = ds.add_parser("fit")
    sp.add_argument("--oracle", required=True)
    sp.add_argument("--fns", required=True)
    sp.add_argument("--lambdas", type=_floats, required=True)
    sp.add_argument("--degree", type=int, default=None)

    su = groups.add_parser("suite", help="property suites")
    su.add_argument("kind", choices=["valuation", "inclexcl", "continuity", "coercive", "growth"])
    su.add_argument("--cases", type=int, default=100)
    su.add_argument("--m", type=int, default=3)
    su.add_argument("--dims", type=lambda s: [int(x) for x in s.split(",")], default=[1, 2])
    su.add_argument("--negative-control", action="store_true")

    rp = groups.add_parser("repro", help="reproduce an acceptance criterion")
    rp.add_argument("criterion", type=int)
    for leaf in _leaves(p):
        _common(leaf)
    return p


def _leaves(parser):
    subs = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)]
    if not subs:
        return [parser]
    return [leaf for a in subs for child in a.choices.values() for leaf in _leaves(child)]


def _common(parser):
    # Global options may also follow the subcommand.
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    parser.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    parser.add_argument("--out", default=argparse.SUPPRESS)


HANDLERS = {"fn": cmd_fn, "val": cmd_val, "hess": cmd_hess, "decomp": cmd_decomp,
            "suite": cmd_suite, "repro": cmd_repro}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        seed = args.seed if args.seed is not None else _default_seed()
        opts = {k: v for k, v in vars(args).items() if k not in ("seed", "workers")}
        cfg = RunConfig([args.group, getattr(args, "cmd", None) or getattr(args, "kind", None)
                         or getattr(args, "criterion", None)], opts, seed, args.workers)
        result = HANDLERS[args.group](args, cfg)
        code = EXIT_OK
        if isinstance(result, tuple):
            result, code = result
        if args.group == "suite":
            sys.stdout.write(result)
        else:
            _emit(result, args.out)
        return code
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_VALIDATION
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        sys.stderr.write(f"epival: I/O error: {exc}\n")
        return EXIT_IO
    except json.JSONDecodeError as exc:
        sys.stderr.write(f"epival: invalid JSON: {exc}\n")
        return EXIT_VALIDATION
    except (OracleFailure, RetryExhausted, np.linalg.LinAlgError, FloatingPointError, OverflowError) as exc:
        sys.stderr.write(f"epival: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (EpivalError, ValueError, KeyError, TypeError, IndexError) as exc:
        sys.stderr.write(f"epival: invalid input: {exc}\n")
        return EXIT_VALIDATION
    except OSError as exc:
        sys.stderr.write(f"epival: I/O error: {exc}\n")
        return EXIT_IO


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
