"""Vacancy-chain re-stabilization after a worker resigns, and the patience thresholds.

The resigning worker turns down every offer that does not beat her current
partner.  Everyone else plays the flexible firm-commitment profile, so the
firm she left goes down its list and each acceptance may free another firm.
"""
from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction

from .algorithms import deferred_acceptance
from .engine import Trace, default_max_periods, format_pairs, simulate
from .errors import NoImprovingOffer, NotStable, WorkerUnmatched
from .market import Matching, MarketInstance, Regime, is_stable
from .strategies import REJECTED_SET, FlexibleFirmProfile

THRESHOLD_DIGITS = 34


class _Resigning(FlexibleFirmProfile):
    """Flexible firm profile in which one worker holds out for a better partner."""

    def __init__(self, market, target, worker, reservation, mode):
        super().__init__(market, target, Regime.FIRM, mode, "resign-and-wait")
        self.worker = worker
        self.reservation = reservation

    def worker_response(self, regime, w, prev, offers):
        if w != self.worker:
            return super().worker_response(regime, w, prev, offers)
        table = self.market.worker_utils[w]
        best, best_u = w, self.reservation
        for f in offers:
            if table[f] > best_u:
                best, best_u = f, table[f]
        return best


@dataclass(frozen=True)
class RestabilizationOutcome:
    resigning_worker: str
    initial: Matching
    final: Matching
    periods_waited: int
    event_log: tuple  # (period, firm, offered worker, accepted)
    trace: Trace

    def serialize(self) -> str:
        lines = [
            f"worker {self.resigning_worker}",
            f"initial | {format_pairs(self.initial)}",
            f"final | {format_pairs(self.final)}",
            f"k {self.periods_waited}",
        ]
        for t, f, w, accepted in self.event_log:
            lines.append(f"{t} | {f}->{w} | {'accepted' if accepted else 'rejected'}")
        return "\n".join(lines) + "\n"


def restabilize(
    m: MarketInstance, mu: Matching, w: str, mode: str = REJECTED_SET, max_periods=None
) -> RestabilizationOutcome:
    """Play out ``w``'s resignation from stable ``mu`` under firm commitment.

    Period 1 is the resignation period.  ``periods_waited`` is the number of
    periods after it up to and including the one in which the improving offer
    reaches ``w``, so she is single for exactly that many periods.
    """
    if not is_stable(m, mu):
        raise NotStable(f"{mu} is not stable")
    if not mu.is_matched(w):
        raise WorkerUnmatched(f"{w} is single under {mu}; there is nothing to resign from")
    if max_periods is None:
        max_periods = 2 * default_max_periods(m)

    reservation = m.utility(w, mu.partner(w))
    profile = _Resigning(m, mu, w, reservation, mode)
    trace = simulate(m, Regime.FIRM, profile, max_periods)

    horizon = trace.tail_start + len(trace.cycle) - 1
    arrival = None
    for t in range(1, horizon + 1):
        if trace.matching_at(t).is_matched(w):
            arrival = t
            break
    if arrival is None:
        raise NoImprovingOffer(f"{w} never receives an offer better than {mu.partner(w)}")

    log = []
    prev = trace.start
    for t in range(1, arrival + 1):
        offers, _, realized = trace.periods[t - 1]
        for f, o in sorted(offers.offers.items()):
            if o != f and not prev.is_matched(f):
                log.append((t, f, o, realized.partner(f) == o))
        prev = realized
    return RestabilizationOutcome(
        resigning_worker=w,
        initial=mu,
        final=trace.matching_at(arrival),
        periods_waited=arrival - 1,
        event_log=tuple(log),
        trace=trace,
    )


def root_of_ratio(ratio: Fraction, k: int) -> float:
    """``ratio ** (1/k)`` evaluated with 34 significant digits, then rounded to float."""
    with localcontext() as ctx:
        ctx.prec = THRESHOLD_DIGITS
        value = (Decimal(ratio.numerator) / Decimal(ratio.denominator)) ** (Decimal(1) / Decimal(k))
    return float(value)


def worker_threshold(m: MarketInstance, mu: Matching, w: str, mode: str = REJECTED_SET) -> float:
    """Discount factor above which resigning and waiting pays off for ``w``; 1.0 if it never does."""
    if not is_stable(m, mu):
        raise NotStable(f"{mu} is not stable")
    try:
        outcome = restabilize(m, mu, w, mode)
    except (NoImprovingOffer, WorkerUnmatched):
        return 1.0
    ratio = m.utility(w, mu.partner(w)) / m.utility(w, outcome.final.partner(w))
    return root_of_ratio(ratio, outcome.periods_waited)


def firm_threshold(m: MarketInstance, mu: Matching, f: str, firm_optimal=None) -> Fraction:
    """Ratio of ``f``'s utility under ``mu`` to its utility under the firm-optimal matching."""
    if not is_stable(m, mu):
        raise NotStable(f"{mu} is not stable")
    if not mu.is_matched(f):
        return Fraction(1)
    if firm_optimal is None:
        firm_optimal = deferred_acceptance(m, "firms")
    return m.utility(f, mu.partner(f)) / m.utility(f, firm_optimal.partner(f))
