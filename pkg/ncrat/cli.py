"""
Command-line front end.

    ncrat <verb> [options]

Every verb writes a machine-readable report (JSON unless --out ends in
.msgpack) and prints a one-line human summary. Exit codes follow the error
categories: 0 success, 1 unreadable input, 2 domain error, 3 parse error,
4 numerical failure.
"""
import argparse
import logging
import sys

import numpy as np
from colorama import Fore, Style, init as colorama_init

from ncrat.config import (
    DEFAULT_SEED, DEFAULT_TOL, DEFAULT_SIZES, DEFAULT_SAMPLES, DEFAULT_SERIES_DEGREE,
    DEFAULT_EPSILON, FOCK_NU_CAP, BOUNDARY_MAX_RADIUS,
)
from ncrat.errors import NcratError, ParseError
from ncrat.files import dumps, load_realization, load_tuple, write_document
from ncrat.fock import build_fock, as_matrix_tuple, direct_sum
from ncrat.lmirep import (
    PositivitySampler, boundary_audit, boundedness_audit, convexity_falsifier,
    locate_boundary, positivity_report, pr_equals_component_check,
)
from ncrat.ncalg import SamplingBox, equivalence_test, evaluate, series_coefficients
from ncrat.parser import parse_expression
from ncrat.realization import (
    invert_realization, minimality_check, minimize, realize, realize_symmetric, symmetrize,
)
from ncrat.singular import invertibility_margin, is_hidden, limit_probe, singularity_report

logger = logging.getLogger("ncrat")

LEVEL_COLORS = {
    logging.DEBUG: Fore.CYAN,
    logging.INFO: Fore.GREEN,
    logging.WARNING: Fore.YELLOW,
    logging.ERROR: Fore.RED,
    logging.CRITICAL: Fore.RED + Style.BRIGHT,
}

GOOD_WORDS = {"Equivalent", "Agree", "Bounded", "NoCounterexample", "member", "converged", "passed"}
BAD_WORDS = {"Distinguished", "Disagree", "Violated", "NonConvex", "non-member", "diverged", "failed"}


class ColorFormatter(logging.Formatter):
    """Colors the level name; the message itself is left as is."""

    def format(self, record):
        color = LEVEL_COLORS.get(record.levelno, "")
        level = f"{color}{record.levelname}{Style.RESET_ALL}"
        return f"{level} {record.name}: {record.getMessage()}"


def setup_logging(verbosity):
    colorama_init()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(ColorFormatter())
    logger.handlers[:] = [handler]
    logger.setLevel(logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG)
    logger.propagate = False


def color_word(word):
    if word in GOOD_WORDS:
        return f"{Fore.GREEN}{word}{Style.RESET_ALL}"
    if word in BAD_WORDS:
        return f"{Fore.RED}{word}{Style.RESET_ALL}"
    return f"{Fore.YELLOW}{word}{Style.RESET_ALL}"


def parse_sizes(text):
    """
    "1..4" or "1,2,3" -> tuple of sizes.

    Raises:
        argparse.ArgumentTypeError: malformed or non-positive sizes
    """
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            sizes = tuple(range(int(lo), int(hi) + 1))
        else:
            sizes = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}")
    if not sizes or min(sizes) < 1:
        raise argparse.ArgumentTypeError(f"sizes must be positive, got {text!r}")
    return sizes


# ---- sources ----

def load_source(args):
    """Expression (--expr with --g) or realization file (--realization)."""
    if getattr(args, "realization", None):
        return load_realization(args.realization)
    if getattr(args, "expr", None) is None:
        raise ParseError("need --expr or --realization")
    return parse_expression(args.expr, args.g)


def emit(args, report, summary):
    if args.out:
        write_document(args.out, report)
        print(summary)
    else:
        sys.stdout.write(dumps(report))
        print(summary, file=sys.stderr)
    return 0


def _matrix_text(m):
    m = np.asarray(m)
    return np.array2string(m, precision=6, suppress_small=True).replace("\n", "")


# ---- verbs ----

def cmd_parse(args):
    e = parse_expression(args.expr, args.g)
    report = {"text": e.to_text(), "shape": list(e.shape), "num_vars": e.num_vars,
              "value_at_zero": e.value_at_zero()}
    return emit(args, report, f"parsed {e.to_text()}  shape={tuple(e.shape)}")


def cmd_eval(args):
    source = load_source(args)
    X = load_tuple(args.point)
    value = evaluate(source, X)
    return emit(args, {"value": value, "n": X.n}, f"value = {_matrix_text(value)}")


def cmd_realize(args):
    e = parse_expression(args.expr, args.g)
    R = realize_symmetric(e, args.tol, args.seed) if args.symmetric else realize(e)
    return emit(args, R.to_dict(), f"realized with d={R.d} ({R.variant})")


def cmd_minimize(args):
    R = load_realization(args.realization)
    M = minimize(R)
    _, reach, obs = minimality_check(R)
    report = M.to_dict()
    return emit(args, report, f"d {R.d} -> {M.d} (reach rank {reach}, obs rank {obs})")


def cmd_invert(args):
    R = load_realization(args.realization)
    Rt = invert_realization(R)
    return emit(args, Rt.to_dict(), f"inverse realized with d={Rt.d}")


def cmd_symmetrize(args):
    R = load_realization(args.realization)
    S = symmetrize(R, args.tol, args.seed)
    return emit(args, S.to_dict(), f"symmetric realization with d={S.d}, signature {np.diag(S.J).astype(int).tolist()}")


def cmd_series(args):
    source = load_source(args)
    coeffs = series_coefficients(source, args.degree)
    report = {"degree": args.degree, "coefficients": {str(w): c for w, c in coeffs.items()}}
    return emit(args, report, f"{len(coeffs)} coefficients up to degree {args.degree}")


def cmd_equiv(args):
    e1 = parse_expression(args.expr1, args.g)
    e2 = parse_expression(args.expr2, args.g)
    plan = SamplingBox(args.epsilon, args.sizes, args.samples, args.seed, args.degree)
    verdict = equivalence_test(e1, e2, plan, args.tol)
    summary = f"{color_word(verdict.kind)} ({verdict.compared} samples, max error {verdict.max_error:.3e})"
    return emit(args, verdict, summary)


def cmd_fock(args):
    basis1, T1 = build_fock(args.g, args.nu)
    T = T1
    dimension = basis1.dimension
    if args.nu2 is not None:
        basis2, T2 = build_fock(args.g, args.nu2)
        T = direct_sum(T1, T2)
        dimension += basis2.dimension
    report = {"g": args.g, "nu": args.nu, "nu2": args.nu2, "dimension": dimension,
              "words": [str(w) for w in basis1.words], "K": as_matrix_tuple(T)}
    return emit(args, report, f"Fock space dimension {dimension} (g={args.g}, nu={args.nu})")


def cmd_probe(args):
    R = load_realization(args.realization)
    chi = load_tuple(args.chi)
    reports = limit_probe(R, chi, seed=args.seed)
    hidden = is_hidden(reports)
    report = {"margin": invertibility_margin(R, chi), "hidden": hidden, "probes": reports}
    word = "converged" if hidden else "diverged"
    emit(args, report, f"probe {color_word(word)} in {sum(r.converged for r in reports)}/{len(reports)} directions")
    if args.require_convergence and not hidden:
        return 4
    return 0


def cmd_residue(args):
    R = load_realization(args.realization)
    chi = load_tuple(args.chi)
    report = singularity_report(R, chi, seed=args.seed, refute=args.refute)
    return emit(args, report, f"p={report['p']}, kernel dim {report['kernel_dim']}, M={_matrix_text(report['M'])}")


def cmd_lmi(args):
    R = load_realization(args.realization)
    if args.point:
        verdict = positivity_report(R, load_tuple(args.point), seed=args.seed)
        word = "member" if verdict.in_positivity_set else "non-member"
        return emit(args, verdict, f"{color_word(word)} (min eig {verdict.min_eig:.6g})")
    sampler = PositivitySampler(R, args.sizes, args.samples, args.seed, args.max_radius)
    bounded = boundedness_audit(sampler, args.bound)
    convex = convexity_falsifier(R, sampler, args.pairs)
    report = {"boundedness": bounded, "convexity": convex}
    summary = f"{color_word(type(bounded).__name__)}, {color_word(type(convex).__name__)}"
    return emit(args, report, summary)


def cmd_audit(args):
    R = load_realization(args.realization)
    Rt = invert_realization(R)
    sampler = PositivitySampler(R, args.sizes, args.samples, args.seed, args.max_radius)
    component = pr_equals_component_check(R, Rt, sampler)
    points = []
    for E in PositivitySampler(R, args.sizes, args.boundary_points, args.seed).directions():
        X = locate_boundary(R, E, args.max_radius, args.seed)
        if X is not None:
            points.append(X)
    checks = boundary_audit(R, Rt, points)
    passed = sum(c.passed for c in checks)
    report = {"component": component, "boundary": checks, "boundary_passed": passed,
              "inverse_dimension": Rt.d}
    word = type(component).__name__
    summary = f"{color_word(word)}; boundary {passed}/{len(checks)} {color_word('passed' if passed == len(checks) else 'failed')}"
    emit(args, report, summary)
    return 0 if passed == len(checks) else 4


# ---- argument parsing ----

def _add_source(p, expr=True):
    if expr:
        p.add_argument("--expr", help='expression text, e.g. "inv(1 - x1*x2)"')
    p.add_argument("--realization", help="realization file (.json or .msgpack)")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="random seed (default 0)")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="comparison tolerance (default 1e-8)")
    common.add_argument("--sizes", type=parse_sizes, default=DEFAULT_SIZES, help='tuple sizes, "1..4" or "1,2,3"')
    common.add_argument("--out", help="report file; stdout when omitted")
    common.add_argument("--g", type=int, default=1, help="number of variables x1..xg")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="ncrat", description="noncommutative rational functions and their realizations")
    verbs = parser.add_subparsers(dest="verb", required=True)

    p = verbs.add_parser("parse", parents=[common], help="parse and print an expression")
    p.add_argument("--expr", required=True)
    p.set_defaults(func=cmd_parse)

    p = verbs.add_parser("eval", parents=[common], help="evaluate at a matrix tuple")
    _add_source(p)
    p.add_argument("--point", required=True, help="matrix tuple file")
    p.set_defaults(func=cmd_eval)

    p = verbs.add_parser("realize", parents=[common], help="minimal descriptor realization of an expression")
    p.add_argument("--expr", required=True)
    p.add_argument("--symmetric", action="store_true", help="return the Symmetric variant")
    p.set_defaults(func=cmd_realize)

    for name, func, text in (("minimize", cmd_minimize, "minimize a realization"),
                             ("invert", cmd_invert, "realize the inverse"),
                             ("symmetrize", cmd_symmetrize, "convert to the Symmetric variant")):
        p = verbs.add_parser(name, parents=[common], help=text)
        p.add_argument("--realization", required=True)
        p.set_defaults(func=func)

    p = verbs.add_parser("series", parents=[common], help="power series coefficients at 0")
    _add_source(p)
    p.add_argument("--degree", type=int, default=DEFAULT_SERIES_DEGREE)
    p.set_defaults(func=cmd_series)

    p = verbs.add_parser("equiv", parents=[common], help="sampling equivalence test")
    p.add_argument("--expr1", required=True)
    p.add_argument("--expr2", required=True)
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--degree", type=int, default=DEFAULT_SERIES_DEGREE)
    p.set_defaults(func=cmd_equiv)

    p = verbs.add_parser("fock", parents=[common], help="truncated Fock space tuple K")
    p.add_argument("--nu", type=int, required=True)
    p.add_argument("--nu2", type=int, help="second summand for K(nu) ⊕ K(nu2)")
    p.set_defaults(func=cmd_fock)

    p = verbs.add_parser("probe", parents=[common], help="limit probes at a singular point")
    p.add_argument("--realization", required=True)
    p.add_argument("--chi", required=True)
    p.add_argument("--require-convergence", action="store_true", help="exit 4 when the probes diverge")
    p.set_defaults(func=cmd_probe)

    p = verbs.add_parser("residue", parents=[common], help="order, residue and refutation report")
    p.add_argument("--realization", required=True)
    p.add_argument("--chi", required=True)
    p.add_argument("--refute", action="store_true", help=f"search Fock paddings (nu <= {FOCK_NU_CAP})")
    p.set_defaults(func=cmd_residue)

    p = verbs.add_parser("lmi", parents=[common], help="positivity membership or set audits")
    p.add_argument("--realization", required=True)
    p.add_argument("--point", help="single tuple; audits the sampled set when omitted")
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--bound", type=float, default=1.0, help="R in sum X_j^2 <= R I")
    p.add_argument("--pairs", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--max-radius", type=float, default=BOUNDARY_MAX_RADIUS)
    p.set_defaults(func=cmd_lmi)

    p = verbs.add_parser("audit", parents=[common], help="positivity set vs. direct sum pencil audit")
    p.add_argument("--realization", required=True)
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--boundary-points", type=int, default=50)
    p.add_argument("--max-radius", type=float, default=BOUNDARY_MAX_RADIUS)
    p.set_defaults(func=cmd_audit)
    return parser


def run(argv=None):
    """
    Returns:
        int: process exit code
    """
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        return args.func(args)
    except NcratError as e:
        print(f"{Fore.RED}{type(e).__name__}{Style.RESET_ALL}: {e}", file=sys.stderr)
        return e.exit_code


def main():
    sys.exit(run())
