"""Seeded batch runs of the equilibrium checks over random markets."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .algorithms import (
    MAX_SIDE,
    check_single_agent_property,
    deferred_acceptance,
    enumerate_stable_set,
)
from .engine import simulate
from .errors import NoImprovingOffer
from .instances import generate_market
from .market import MarketInstance, Matching, Regime, is_stable
from .restabilization import firm_threshold, restabilize, worker_threshold
from .strategies import PROFILE_BUILDERS, PROFILE_REGIMES, build_profile
from .verifier import firm_wait_comparison, threshold_boundary_test, verify_equilibrium

MARGIN = Fraction(1, 500)


def below_threshold(c, margin=MARGIN) -> Fraction:
    """A rational discount factor ``margin`` below the threshold ``c``."""
    return (Fraction(c) - margin).limit_denominator(10**6)


def discounts_below_thresholds(m: MarketInstance, mu: Matching, side: str, margin=MARGIN):
    """Copy of ``m`` where every agent on ``side`` is at least ``margin`` below its threshold.

    Agents already below keep their discount factor.  Agents whose threshold is
    1 are left alone.
    """
    changes = {}
    if side == "workers":
        for w in m.workers:
            c = worker_threshold(m, mu, w)
            if c < 1 and m.discount(w) > Fraction(c) - margin:
                changes[w] = below_threshold(c, margin)
    else:
        mu_f = deferred_acceptance(m, "firms")
        for f in m.firms:
            c = firm_threshold(m, mu, f, mu_f)
            if c < 1 and m.discount(f) > c - margin:
                changes[f] = below_threshold(c, margin)
    return m.with_discount_map(changes) if changes else m


def prepare_market(m: MarketInstance, mu: Matching, descriptor: str) -> MarketInstance:
    """The market a profile is checked on: flexible profiles need patience below the thresholds."""
    if descriptor == "firm-flexible":
        return discounts_below_thresholds(m, mu, "workers")
    if descriptor == "worker-flexible":
        return discounts_below_thresholds(m, mu, "firms")
    return m


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    instances: int = 200
    max_firms: int = 4
    max_workers: int = 4
    regimes: tuple = (Regime.NONE, Regime.FIRM, Regime.WORKER)
    profiles: tuple = tuple(PROFILE_BUILDERS)
    grid: int = 1000  # threshold probes sit 1/grid either side of the threshold

    def __post_init__(self):
        if self.instances < 1:
            raise ValueError("instances must be positive")
        for n in (self.max_firms, self.max_workers):
            if not 1 <= n <= MAX_SIDE:
                raise ValueError(f"market sides must be between 1 and {MAX_SIDE}")
        for p in self.profiles:
            if p not in PROFILE_BUILDERS:
                raise ValueError(f"unknown profile {p!r}")
        if self.grid < 10:
            raise ValueError("grid must be at least 10")

    def markets(self):
        """Yield ``(instance seed, market)``; everything follows from ``seed``."""
        rng = random.Random(self.seed)
        for _ in range(self.instances):
            instance_seed = rng.randrange(2**32)
            n_f = rng.randint(1, self.max_firms)
            n_w = rng.randint(1, self.max_workers)
            yield instance_seed, generate_market(instance_seed, n_f, n_w)


@dataclass
class Tally:
    passed: int = 0
    failed: int = 0
    examples: list = field(default_factory=list)

    def record(self, ok: bool, detail: str = "") -> None:
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            if len(self.examples) < 3:
                self.examples.append(detail)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: dict

    @property
    def all_passed(self) -> bool:
        return all(t.failed == 0 for t in self.rows.values())

    def to_text(self) -> str:
        width = max(len(name) for name in self.rows)
        lines = [
            f"seed {self.config.seed}, {self.config.instances} markets up to "
            f"{self.config.max_firms}x{self.config.max_workers}",
            f"{'check'.ljust(width)}  passed  failed  verdict",
        ]
        for name, t in self.rows.items():
            verdict = "PASS" if t.failed == 0 else "FAIL"
            lines.append(f"{name.ljust(width)}  {t.passed:6d}  {t.failed:6d}  {verdict}")
            for detail in t.examples:
                lines.append(f"    {detail}")
        lines.append("overall: " + ("PASS" if self.all_passed else "FAIL"))
        return "\n".join(lines) + "\n"


def _check_profile(m, mu, descriptor):
    market = prepare_market(m, mu, descriptor)
    profile = build_profile(descriptor, market, mu)
    regime = PROFILE_REGIMES[descriptor]
    trace = simulate(market, regime, profile)
    on_path = trace.tail_start == 1 and trace.cycle == (mu,)
    report = verify_equilibrium(market, regime, profile)
    return on_path and report.is_equilibrium, report


def run_experiment(config: ExperimentConfig = ExperimentConfig()) -> ExperimentResult:
    profiles = [p for p in config.profiles if PROFILE_REGIMES[p] in config.regimes]
    rows = {
        "stable-set": Tally(),
        "single-agent": Tally(),
        "restabilize": Tally(),
        "worker-threshold": Tally(),
        "firm-threshold": Tally(),
    }
    for p in profiles:
        rows[p] = Tally()
    margin = Fraction(1, config.grid)

    for seed, m in config.markets():
        report = enumerate_stable_set(m)
        mu_f = deferred_acceptance(m, "firms")
        mu_w = deferred_acceptance(m, "workers")
        rows["stable-set"].record(
            is_stable(m, mu_f) and is_stable(m, mu_w)
            and mu_f == report.firm_optimal and mu_w == report.worker_optimal,
            f"market {seed}",
        )
        rows["single-agent"].record(check_single_agent_property(m).holds, f"market {seed}")

        for mu in report.stable:
            tag = f"market {seed} mu {mu}"
            for w in m.workers:
                if not mu.is_matched(w):
                    continue
                try:
                    outcome = restabilize(m, mu, w)
                except NoImprovingOffer:
                    improvable = m.utility(w, mu_w.partner(w)) > m.utility(w, mu.partner(w))
                    rows["restabilize"].record(not improvable, f"{tag} {w}: no improving offer")
                    continue
                nu = outcome.final
                rows["restabilize"].record(
                    nu in report.stable
                    and m.utility(w, nu.partner(w)) > m.utility(w, mu.partner(w))
                    and 1 <= outcome.periods_waited <= 2 * len(m.firms) * len(m.workers),
                    f"{tag} {w}",
                )
                if worker_threshold(m, mu, w) < 1:
                    rows["worker-threshold"].record(
                        threshold_boundary_test(m, mu, w, "worker"), f"{tag} {w}"
                    )
            for f in m.firms:
                c = firm_threshold(m, mu, f, mu_f)
                if c >= 1:
                    continue
                below = below_threshold(c, margin)
                ok = threshold_boundary_test(m, mu, f, "firm") and all(
                    not firm_wait_comparison(m, mu, f, below, t, mu_f).profitable
                    for t in range(1, 2 * len(m.firms) * len(m.workers) + 5)
                )
                rows["firm-threshold"].record(ok, f"{tag} {f}")
            for p in profiles:
                ok, verdict = _check_profile(m, mu, p)
                detail = tag
                if verdict.witnesses:
                    detail += ": " + verdict.witnesses[0].describe()
                rows[p].record(ok, detail)
    return ExperimentResult(config, rows)
