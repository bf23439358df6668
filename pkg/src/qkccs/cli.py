"""Command-line front end: build states, run verification suites, emit g2 scans.

Exit codes: 0 success, 1 a verification check failed, 2 invalid arguments,
3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from typing import List, Optional, Sequence

from . import completeness, dalgebra, fockspace, nonclassical, qcalculus, states
from .errors import ConvergenceError, DomainError
from .qmath import QParams

EXIT_OK, EXIT_FAIL, EXIT_ARGS, EXIT_NUMERIC = 0, 1, 2, 3

IDENTITY_TOL = 1e-8
QINTEGRAL_TOL = 1e-6
ALGEBRA_TOL = 1e-12

FIG1_PRESETS = {
    "fig1a": {"ks": (3, 4, 5), "qbars": (2, -2), "q": 0.9},
    "fig1b": {"ks": (3, 4, 5), "qbars": (3, -3), "q": 0.8},
}


def parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}")


def parse_grid(text: str) -> List[float]:
    try:
        xs = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not xs:
        raise argparse.ArgumentTypeError("x grid is empty")
    return xs


def positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


# --------------------------------------------------------------------------
# state


def cmd_state(args) -> int:
    p = QParams(args.q)
    n_max = args.nmax or states.choose_truncation(args.xi, args.qbar, args.k, p)
    params = states.KccsParams(args.xi, args.qbar, args.k, args.j, p, fockspace.Truncation(n_max))
    state = states.build_kccs(params)
    out = args.out or f"state_k{args.k}_qbar{args.qbar}_j{args.j}.txt"
    states.write_state(out, state, params)
    n1, n2 = states.mean_number_relation(state)
    ok = abs((n1 - n2) - args.qbar) <= 1e-10
    print(f"wrote: {out}")
    print(f"n_max: {n_max}")
    print(f"norm: {state.norm()!r}")
    print(f"<N1>: {n1!r}")
    print(f"<N2>: {n2!r}")
    print(f"<N1>-<N2>: {n1 - n2!r}")
    print(f"charge-check: {'pass' if ok else 'fail'}")
    return EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------------------
# verify


@dataclass
class Check:
    suite: str
    name: str
    value: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.value <= self.bound

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.suite}/{self.name}: {self.value:.3e} (bound {self.bound:.0e})"


def _suite_algebra(args, p: QParams) -> List[Check]:
    ops = fockspace.build_operators(fockspace.Truncation(args.nmax or 20), p)
    res = fockspace.algebra_residuals(ops, k=args.k)
    tol = args.tol or ALGEBRA_TOL
    return [Check("algebra", f"{name} q={p.q}", r.scaled, tol) for name, r in res.items()]


def _suite_states(args, p: QParams) -> List[Check]:
    tol = args.tol or IDENTITY_TOL
    k, qbar, xi = args.k, args.qbar, args.xi
    n_max = args.nmax or states.choose_truncation(xi, qbar, k, p)
    trunc = fockspace.Truncation(n_max)
    ops = fockspace.build_operators(trunc, p)
    checks = []
    tag = f"k={k} qbar={qbar} xi={xi}"
    for j in range(k if xi != 0 else 1):
        params = states.KccsParams(xi, qbar, k, j, p, trunc)
        state = states.build_kccs(params)
        for name, value in states.verify_eigen_relations(state, params, ops).items():
            checks.append(Check("states", f"{name} {tag} j={j}", value, tol))
        n1, n2 = states.mean_number_relation(state)
        checks.append(Check("states", f"mean_number {tag} j={j}", abs(n1 - n2 - qbar), 1e-10))
    rep = states.expand_charge_coherent(xi, qbar, k, trunc, p)
    checks.append(Check("states", f"expansion_reconstruction {tag}", rep.reconstruction_residual, tol))
    checks.append(Check("states", f"expansion_sum_rule {tag}", rep.sum_rule_residual, tol))
    if xi != 0:
        built = states.build_kccs(states.KccsParams(xi, qbar, k, 0, p, trunc))
        avg = states.generate_by_averaging(1.0, xi, qbar, k, 0, 4 * (n_max + 1), trunc, p)
        checks.append(Check("states", f"averaging_fidelity_gap {tag}", 1.0 - states.fidelity(built, avg), tol))
    return checks


def _suite_dalgebra(args, p: QParams) -> List[Check]:
    tol = args.tol or IDENTITY_TOL
    trunc = fockspace.Truncation(args.nmax) if args.nmax else None
    tag = f"k={args.k} qbar={args.qbar} xi={args.xi}"
    checks = []
    for row, res in dalgebra.verify_action_table(args.xi, args.qbar, args.k, trunc, p).items():
        checks.append(Check("dalgebra", f"{row}[{res.column}] {tag}", res.residual, tol))
        if res.q_difference_residual is not None:
            checks.append(Check("dalgebra", f"{row}_q_difference {tag}", res.q_difference_residual, tol))
    for name, value in dalgebra.verify_su11_dalgebra(args.xi, args.qbar, args.k, trunc, p).items():
        checks.append(Check("dalgebra", f"{name} {tag}", value, tol))
    return checks


def _suite_moments(args, p: QParams) -> List[Check]:
    tol = args.tol or QINTEGRAL_TOL
    checks = []
    for nu in range(args.numax + 1):
        for pi in range(args.pmax + 1):
            err = qcalculus.verify_moment_identity(pi, nu, p)
            checks.append(Check("moments", f"p={pi} nu={nu} q={p.q}", err, tol))
    return checks


def _suite_completeness(args, p: QParams) -> List[Check]:
    tol = args.tol or QINTEGRAL_TOL
    checks = []
    n_list = list(range(args.pmax + 1))
    for qbar in range(-args.numax, args.numax + 1):
        w = completeness.sector_resolution_weights(qbar, args.k, n_list, p)
        for n, value in zip(w.n_values, w.weights):
            checks.append(Check("completeness", f"weight qbar={qbar} n={n} q={p.q}", abs(value - 1.0), tol))
    cover = completeness.sector_union_check(range(-args.numax, args.numax + 1), args.nmax or 5)
    checks.append(Check("completeness", "sector_tiling", 0.0 if cover.exact else 1.0, 0.0))
    return checks


SUITES = {
    "algebra": _suite_algebra,
    "states": _suite_states,
    "dalgebra": _suite_dalgebra,
    "moments": _suite_moments,
    "completeness": _suite_completeness,
}


def cmd_verify(args) -> int:
    p = QParams(args.q)
    names = list(SUITES) if args.suite == "all" else [args.suite]
    checks: List[Check] = []
    for name in names:
        checks.extend(SUITES[name](args, p))
    for check in checks:
        print(check.line())
    failed = [c for c in checks if not c.passed]
    print(f"summary: {len(checks) - len(failed)}/{len(checks)} checks passed")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(
                [{"suite": c.suite, "name": c.name, "value": c.value, "bound": c.bound, "passed": c.passed} for c in checks],
                fh,
                indent=2,
            )
    return EXIT_FAIL if failed else EXIT_OK


# --------------------------------------------------------------------------
# scan


def _scan_jobs(args):
    for preset in ("fig1a", "fig1b"):
        if getattr(args, preset):
            chosen = FIG1_PRESETS[preset]
            for k in chosen["ks"]:
                for qbar in chosen["qbars"]:
                    yield k, qbar, chosen["q"]
            return
    yield args.k, args.qbar, args.q


def cmd_scan(args) -> int:
    grid = args.xs
    tol = args.tol or 1e-14
    sink = open(args.out, "w") if args.out else sys.stdout
    status = EXIT_OK
    try:
        for k, qbar, q in _scan_jobs(args):
            result = nonclassical.antibunching_scan(k, qbar, QParams(q, tol=tol), grid)
            nonclassical.write_scan_csv(sink, result, tol)
            if result.crossing is not None:
                sink.write(f"# crossing_g0 x={result.crossing!r}\n")
            sink.flush()
            if not result.converged:
                status = EXIT_NUMERIC
    finally:
        if sink is not sys.stdout:
            sink.close()
    return status


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkccs", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file whose keys provide defaults for the subcommand options")
    sub = parser.add_subparsers(dest="command", required=True)

    st = sub.add_parser("state", help="build a k-component state and write it to a file")
    st.add_argument("--k", type=int, default=1)
    st.add_argument("--qbar", type=int, default=0)
    st.add_argument("--j", type=int, default=0)
    st.add_argument("--xi", type=parse_complex, default=complex(0.5))
    st.add_argument("--q", type=positive_float, default=0.9)
    st.add_argument("--nmax", type=int)
    st.add_argument("--out")
    st.set_defaults(func=cmd_state)

    ve = sub.add_parser("verify", help="run verification suites")
    ve.add_argument("--suite", choices=[*SUITES, "all"], default="all")
    ve.add_argument("--q", type=positive_float, default=0.9)
    ve.add_argument("--k", type=int, default=3)
    ve.add_argument("--qbar", type=int, default=2)
    ve.add_argument("--xi", type=parse_complex, default=complex(0.7))
    ve.add_argument("--pmax", type=int, default=4)
    ve.add_argument("--numax", type=int, default=4)
    ve.add_argument("--nmax", type=int)
    ve.add_argument("--tol", type=positive_float)
    ve.add_argument("--json", help="write the check list as JSON to this path")
    ve.set_defaults(func=cmd_verify)

    sc = sub.add_parser("scan", help="emit g2 correlation degrees over an x grid as CSV")
    preset = sc.add_mutually_exclusive_group()
    preset.add_argument("--fig1a", action="store_true", help="k=3,4,5 with qbar=+-2, q=0.9")
    preset.add_argument("--fig1b", action="store_true", help="k=3,4,5 with qbar=+-3, q=0.8")
    sc.add_argument("--k", type=int, default=3)
    sc.add_argument("--qbar", type=int, default=2)
    sc.add_argument("--q", type=positive_float, default=0.9)
    sc.add_argument("--xs", type=parse_grid, help="comma-separated increasing x values (default: 0.01..100 geometric)")
    sc.add_argument("--tol", type=positive_float)
    sc.add_argument("--nmax", type=int, help="accepted for symmetry with other commands; scans need no Fock cutoff")
    sc.add_argument("--out")
    sc.set_defaults(func=cmd_scan)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config {args.config}: {exc}")
    if not isinstance(config, dict):
        parser.error("config must be a JSON object")
    # rebuild the argument list so config values pass through the same type checks
    extra: List[str] = []
    for key, value in config.items():
        flag = f"--{key}"
        if isinstance(value, bool):
            if value:
                extra.append(flag)
        elif isinstance(value, list):
            extra += [flag, ",".join(str(v) for v in value)]
        else:
            extra += [flag, str(value)]
    argv = list(argv)
    pos = argv.index(args.command) + 1
    return parser.parse_args(argv[:pos] + extra + argv[pos:])


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_ARGS
    if getattr(args, "xs", None) is not None:
        if any(x <= 0 for x in args.xs) or any(b <= a for a, b in zip(args.xs, args.xs[1:])):
            print("error: --xs must be positive and strictly increasing", file=sys.stderr)
            return EXIT_ARGS
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except ConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
