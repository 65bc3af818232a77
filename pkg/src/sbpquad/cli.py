"""Command-line interface.

Exit codes: 0 success, 2 search exhausted/budget hit, 3 verification
or construction failure, 4 bad usage or unreadable input.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .advection import (build_problem, certify_stable, max_stable_dt,
                        run_convergence)
from .archive import (ArchiveError, canonical_json, load_rule,
                      operator_to_dict, rule_to_dict, save_operator,
                      save_rule)
from .operators import SBPConstructionError, build_operator, verify_operator
from .search import RuleValidationError, SearchOptions, validate_rule
from .signatures import find_rule

EXIT_OK = 0
EXIT_SEARCH = 2
EXIT_VERIFY = 3
EXIT_USAGE = 4

_DEFAULT_C = {2: (1.25, np.sqrt(7.0) / 4.0),
              3: (1.5, 0.5, 1.0 / np.sqrt(2.0))}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_budget(text: str) -> float:
    text = text.strip().lower()
    scale = 1.0
    if text.endswith("h"):
        scale, text = 3600.0, text[:-1]
    elif text.endswith("m"):
        scale, text = 60.0, text[:-1]
    elif text.endswith("s"):
        text = text[:-1]
    try:
        value = float(text) * scale
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad duration: {text!r}")
    if value <= 0:
        raise argparse.ArgumentTypeError("duration must be positive")
    return value


def _parse_meshes(text: str) -> list[int]:
    try:
        meshes = [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad mesh list: {text!r}")
    if len(meshes) < 2 or any(m < 1 for m in meshes):
        raise argparse.ArgumentTypeError(
            "need at least two positive mesh sizes")
    return meshes


def _load(path: str):
    try:
        return load_rule(path)
    except (OSError, ArchiveError) as exc:
        print(f"cannot load rule: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    except RuleValidationError as exc:
        print(f"archived rule invalid: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_VERIFY)


def _cmd_find(args) -> int:
    options = SearchOptions()
    facet = None if args.facet == "none" else args.facet
    result = find_rule(args.domain, args.qv, facet_kind=facet,
                       seed=args.seed, sweeps=args.sweeps,
                       budget_s=args.budget)
    if result.status != "ok":
        tried = len(result.attempts)
        print(f"search {result.status} after {tried} attempt(s), "
              f"{result.elapsed:.1f}s", file=sys.stderr)
        return EXIT_SEARCH
    rule = result.rule
    print(f"found {rule.domain} rule: degree {rule.qv}, "
          f"{rule.n_nodes} nodes, residual "
          f"{rule.provenance.get('residual_inf', float('nan')):.3e}")
    if args.output:
        save_rule(rule, args.output)
        print(f"wrote {args.output}")
    else:
        sys.stdout.write(canonical_json(rule_to_dict(rule)))
    return EXIT_OK


def _cmd_verify(args) -> int:
    rule = _load(args.rule)
    try:
        validate_rule(rule)
    except RuleValidationError as exc:
        print(f"FAIL: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    print(f"{rule.domain} rule, degree {rule.qv}, {rule.n_nodes} nodes")
    print(f"moment residual   : {rule.residual_inf():.3e}")
    print(f"min weight        : {rule.nodes.weights.min():.6e}")
    print(f"min node spacing  : {rule.min_spacing():.4f}")
    if rule.facet_rule is not None:
        print(f"facet rule        : degree {rule.facet_rule.qv}, "
              f"{rule.facet_rule.n_nodes} nodes, residual "
              f"{rule.facet_rule.residual_inf():.3e}")
    print("PASS")
    return EXIT_OK


def _cmd_sbp(args) -> int:
    rule = _load(args.rule)
    try:
        op = build_operator(rule, p=args.p)
    except SBPConstructionError as exc:
        print(f"FAIL: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    report = verify_operator(op)
    print(report.summary())
    if not report.passed:
        return EXIT_VERIFY
    if args.output:
        save_operator(op, args.output)
        print(f"wrote {args.output}")
    return EXIT_OK


def _velocity(args, dim: int) -> np.ndarray:
    if args.velocity is not None:
        parts = [float(t) for t in args.velocity.split(",")]
        if len(parts) != dim:
            print(f"velocity needs {dim} components", file=sys.stderr)
            raise SystemExit(EXIT_USAGE)
        return np.asarray(parts)
    return np.asarray(_DEFAULT_C[dim])


def _cmd_converge(args) -> int:
    rule = _load(args.rule)
    try:
        op = build_operator(rule, p=args.p)
    except SBPConstructionError as exc:
        print(f"FAIL: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    c = _velocity(args, op.dim)
    result = run_convergence(op, args.meshes, c, t=args.time,
                             omega=args.omega, flux=args.flux)
    print(result.summary())
    if args.output:
        payload = {
            "format": "convergence-study", "schema": 1,
            "p": result.p, "flux": result.flux,
            "meshes": result.meshes, "errors": result.errors,
            "rates": result.rates, "time": args.time,
            "omega": args.omega, "velocity": c.tolist(),
        }
        with open(args.output, "w") as fh:
            fh.write(canonical_json(payload))
        print(f"wrote {args.output}")
    if args.min_rate is not None and result.rates[-1] < args.min_rate:
        print(f"FAIL: rate {result.rates[-1]:.3f} < {args.min_rate}",
              file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _cmd_timestep(args) -> int:
    rule = _load(args.rule)
    try:
        op = build_operator(rule, p=args.p)
    except SBPConstructionError as exc:
        print(f"FAIL: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    c = _velocity(args, op.dim)
    prob = build_problem(op, args.m, c, flux=args.flux,
                         omega=args.omega)
    dt = max_stable_dt(prob, rel_tol=args.rel_tol)
    ok_half, ratio = certify_stable(prob, 0.5 * dt)
    print(f"max stable dt     : {dt:.6e}")
    print(f"energy ratio @dt/2: {ratio:.12f} "
          f"({'nonincreasing' if ok_half else 'INCREASING'})")
    if args.output:
        payload = {
            "format": "timestep-certificate", "schema": 1,
            "p": op.p, "m": args.m, "flux": args.flux,
            "velocity": c.tolist(), "max_stable_dt": dt,
            "energy_ratio_half_dt": ratio,
        }
        with open(args.output, "w") as fh:
            fh.write(canonical_json(payload))
        print(f"wrote {args.output}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="sbpquad",
                     description="Symmetric simplex quadrature rules and "
                                 "summation-by-parts operators.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_find = sub.add_parser("find", help="search for a volume rule")
    p_find.add_argument("--domain", choices=("tri", "tet"), required=True)
    p_find.add_argument("--qv", type=int, required=True,
                        help="volume exactness degree")
    p_find.add_argument("--facet", choices=("lgl", "lg", "none"),
                        default="lgl",
                        help="facet family frozen into the search")
    p_find.add_argument("--seed", type=int, default=0)
    p_find.add_argument("--sweeps", type=int, default=5,
                        help="restart sweeps over the candidate layouts")
    p_find.add_argument("--budget", type=_parse_budget, default=None,
                        metavar="DURATION",
                        help="wall-clock cap, e.g. 90s, 10m, 1h")
    p_find.add_argument("-o", "--output", default=None)
    p_find.set_defaults(func=_cmd_find)

    p_ver = sub.add_parser("verify", help="re-validate an archived rule")
    p_ver.add_argument("rule")
    p_ver.set_defaults(func=_cmd_verify)

    p_sbp = sub.add_parser("sbp", help="build and check SBP operators")
    p_sbp.add_argument("rule")
    p_sbp.add_argument("-p", type=int, default=None,
                       help="operator degree (default: rule's design p)")
    p_sbp.add_argument("-o", "--output", default=None)
    p_sbp.set_defaults(func=_cmd_sbp)

    p_conv = sub.add_parser("converge",
                            help="advection convergence study")
    p_conv.add_argument("rule")
    p_conv.add_argument("--meshes", type=_parse_meshes,
                        default=[8, 12, 16])
    p_conv.add_argument("--time", type=float, default=0.25)
    p_conv.add_argument("--omega", type=int, default=2)
    p_conv.add_argument("--flux", choices=("upwind", "central"),
                        default="upwind")
    p_conv.add_argument("--velocity", default=None,
                        help="comma-separated components")
    p_conv.add_argument("-p", type=int, default=None)
    p_conv.add_argument("--min-rate", type=float, default=None,
                        help="fail unless the final rate reaches this")
    p_conv.add_argument("-o", "--output", default=None)
    p_conv.set_defaults(func=_cmd_converge)

    p_dt = sub.add_parser("timestep",
                          help="largest energy-stable RK4 timestep")
    p_dt.add_argument("rule")
    p_dt.add_argument("--m", type=int, default=4)
    p_dt.add_argument("--flux", choices=("upwind", "central"),
                      default="upwind")
    p_dt.add_argument("--omega", type=int, default=2)
    p_dt.add_argument("--velocity", default=None)
    p_dt.add_argument("--rel-tol", type=float, default=1e-4)
    p_dt.add_argument("-p", type=int, default=None)
    p_dt.add_argument("-o", "--output", default=None)
    p_dt.set_defaults(func=_cmd_timestep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
