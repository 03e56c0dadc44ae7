"""Command-line entry point.

Exit codes: 0 success, 2 usage error, 3 instance parse error, 4 verification
failed, 5 internal invariant violated.
"""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from .algorithms import deferred_acceptance, enumerate_stable_set
from .engine import discounted_payoff, simulate
from .errors import (
    DynMatchError,
    InstanceTooLarge,
    InternalLatticeViolation,
    MarketError,
    NoImprovingOffer,
    NoStationaryTail,
    NotStable,
    ParseError,
    UnknownAgentReference,
    WorkerUnmatched,
)
from .experiment import ExperimentConfig, run_experiment
from .instances import generate_market, parse_instance, parse_matching, serialize_instance
from .market import Regime
from .restabilization import firm_threshold, restabilize, worker_threshold
from .strategies import PROFILE_BUILDERS, PROFILE_REGIMES, REJECTED_SET, STRICT_STATIONARY, build_profile
from .verifier import STATE_SPACES, verify_equilibrium

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_VERIFICATION_FAILED = 4
EXIT_INTERNAL = 5


class UsageError(Exception):
    pass


def fmt(value) -> str:
    """Exact rational next to a 5-significant-digit decimal."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value} (~{float(value):.5g})"
    return f"{value:.5g} ({value!r})"


def _load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return parse_instance(text)


def _matching(m, literal):
    try:
        return parse_matching(m, literal)
    except (ValueError, UnknownAgentReference) as exc:
        raise UsageError(f"bad matching {literal!r}: {exc}") from None


def _profile(args, m, mu):
    options = {}
    if args.profile == "firm-flexible":
        options["mode"] = args.mode
    elif args.mode != REJECTED_SET:
        raise UsageError("--mode only applies to the firm-flexible profile")
    profile = build_profile(args.profile, m, mu, **options)
    regime = Regime.parse(args.regime) if args.regime else PROFILE_REGIMES[args.profile]
    return profile, regime


def cmd_stable_set(args, out):
    m = _load(args.file)
    report = enumerate_stable_set(m)
    out.write(f"matchings {report.all_matchings_count}\n")
    out.write(f"stable {len(report.stable)}\n")
    for mu in report.stable:
        labels = []
        if mu == report.firm_optimal:
            labels.append("firm-optimal")
        if mu == report.worker_optimal:
            labels.append("worker-optimal")
        out.write(f"{mu}" + (f"  {' '.join(labels)}" if labels else "") + "\n")
    return EXIT_OK


def cmd_simulate(args, out):
    m = _load(args.file)
    mu = _matching(m, args.mu)
    profile, regime = _profile(args, m, mu)
    trace = simulate(m, regime, profile, args.max_periods)
    out.write(trace.serialize())
    for a in m.agents:
        out.write(f"payoff {a} {fmt(discounted_payoff(m, trace, a).value)}\n")
    return EXIT_OK


def cmd_thresholds(args, out):
    m = _load(args.file)
    mu = _matching(m, args.mu)
    mu_f = deferred_acceptance(m, "firms")
    out.write(f"mu {mu}\n")
    for w in m.workers:
        out.write(f"c^{w} {fmt(worker_threshold(m, mu, w, args.mode))}\n")
    for f in m.firms:
        out.write(f"c^{f} {fmt(firm_threshold(m, mu, f, mu_f))}\n")
    return EXIT_OK


def cmd_restabilize(args, out):
    m = _load(args.file)
    mu = _matching(m, args.mu)
    if not m.is_worker(args.worker):
        raise UsageError(f"{args.worker!r} is not a worker of this market")
    try:
        outcome = restabilize(m, mu, args.worker, args.mode)
    except NoImprovingOffer as exc:
        out.write(f"worker {args.worker}\nno improving offer: {exc}\n")
        return EXIT_OK
    out.write(outcome.serialize())
    return EXIT_OK


def cmd_verify(args, out):
    m = _load(args.file)
    mu = _matching(m, args.mu)
    profile, regime = _profile(args, m, mu)
    report = verify_equilibrium(m, regime, profile, states=args.states)
    out.write(report.to_kv() if args.format == "kv" else report.to_text())
    return EXIT_OK if report.is_equilibrium else EXIT_VERIFICATION_FAILED


def cmd_experiment(args, out):
    try:
        config = ExperimentConfig(
            seed=args.seed,
            instances=args.instances,
            max_firms=args.max_firms,
            max_workers=args.max_workers,
            regimes=tuple(Regime.parse(r) for r in args.regimes),
            profiles=tuple(args.profiles),
            grid=args.grid,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = run_experiment(config)
    out.write(result.to_text())
    return EXIT_OK if result.all_passed else EXIT_VERIFICATION_FAILED


def cmd_generate(args, out):
    try:
        m = generate_market(args.seed, args.firms, args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out.write(serialize_instance(m))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynmatch",
        description="Dynamic matching markets under commitment: simulation and equilibrium checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def with_file(p):
        p.add_argument("file", help="instance file")

    def with_mode(p):
        p.add_argument(
            "--mode",
            choices=(REJECTED_SET, STRICT_STATIONARY),
            default=REJECTED_SET,
            help="how a rejected firm remembers who turned it down",
        )

    def with_profile(p):
        p.add_argument("--profile", required=True, choices=sorted(PROFILE_BUILDERS))
        p.add_argument("--regime", help="none, firm, worker or two-sided (default: the profile's own)")
        with_mode(p)

    p = sub.add_parser("stable-set", help="list all stable matchings")
    with_file(p)
    p.set_defaults(func=cmd_stable_set)

    p = sub.add_parser("simulate", help="play a profile from the empty matching")
    with_file(p)
    with_profile(p)
    p.add_argument("--mu", default="firmOpt", help="target matching (default firmOpt)")
    p.add_argument("--max-periods", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("thresholds", help="patience thresholds of every agent")
    with_file(p)
    p.add_argument("--mu", required=True)
    with_mode(p)
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("restabilize", help="play out a worker's resignation")
    with_file(p)
    p.add_argument("--mu", required=True)
    p.add_argument("--worker", required=True)
    with_mode(p)
    p.set_defaults(func=cmd_restabilize)

    p = sub.add_parser("verify", help="check a profile for profitable deviations")
    with_file(p)
    with_profile(p)
    p.add_argument("--mu", required=True)
    p.add_argument("--states", choices=STATE_SPACES, default="path")
    p.add_argument("--format", choices=("text", "kv"), default="text")
    p.set_defaults(func=cmd_verify)

    defaults = ExperimentConfig()
    p = sub.add_parser("experiment", help="run every check over seeded random markets")
    p.add_argument("--seed", type=int, default=defaults.seed)
    p.add_argument("--instances", type=int, default=defaults.instances)
    p.add_argument("--max-firms", type=int, default=defaults.max_firms)
    p.add_argument("--max-workers", type=int, default=defaults.max_workers)
    p.add_argument("--regimes", nargs="+", default=[r.value for r in defaults.regimes])
    p.add_argument("--profiles", nargs="+", default=list(defaults.profiles))
    p.add_argument("--grid", type=int, default=defaults.grid)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("generate", help="write a random market in the instance format")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--firms", type=int, required=True)
    p.add_argument("--workers", type=int, required=True)
    p.set_defaults(func=cmd_generate)
    return parser


def run_command(argv, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args, out)
    except ParseError as exc:
        err.write(f"parse error: {exc}\n")
        return EXIT_PARSE
    except MarketError as exc:
        where = f" (line {exc.line})" if exc.line is not None and "line" not in str(exc) else ""
        err.write(f"invalid market{where}: {exc}\n")
        return EXIT_PARSE
    except (UsageError, NotStable, WorkerUnmatched, InstanceTooLarge, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (InternalLatticeViolation, NoStationaryTail) as exc:
        err.write(f"internal invariant violated: {exc}\n")
        return EXIT_INTERNAL
    except DynMatchError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INTERNAL


def main(argv=None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
