"""Stationary strategy profiles and the five canonical profiles built on a stable matching."""
from __future__ import annotations

from typing import Optional

from .algorithms import deferred_acceptance
from .engine import continuation_class
from .errors import NotStable
from .market import Matching, MarketInstance, Regime, active_sets, is_stable

STRICT_STATIONARY = "strict-stationary"
REJECTED_SET = "rejected-set"


def continuation_equivalent(regime: Regime, mu: Matching, mu2: Matching) -> bool:
    return continuation_class(regime, mu) == continuation_class(regime, mu2)


def best_response_accept(m: MarketInstance, w: str, offers) -> str:
    """The received offer ``w`` values most, or ``w`` herself if none is worth more than 0."""
    table = m.worker_utils[w]
    best, best_u = w, 0
    for f in offers:
        if table[f] > best_u:
            best, best_u = f, table[f]
    return best


class StationaryStrategyProfile:
    """Offer rule for firms and response rule for workers.

    The base rule has every active firm offer its partner under ``target`` and
    every worker accept her best positive offer, within what her commitment
    allows.  Committed firms renew, because renewing is their only option.
    """

    descriptor = "target-offers"
    uses_memory = False

    def __init__(self, market: MarketInstance, target: Matching, regime: Regime, name=None):
        self.market = market
        self.target = target
        self.regime = regime
        self.name = name or self.descriptor

    def __repr__(self):
        return f"{type(self).__name__}({self.name}, target={self.target}, regime={self.regime})"

    def initial_memory(self):
        return ()

    def next_memory(self, memory, regime, prev, offers, realized):
        return memory

    def firm_offer(self, regime: Regime, f: str, prev: Matching, memory=()) -> str:
        forced = self._forced_offer(regime, f, prev)
        if forced is not None:
            return forced
        return self.target.partner(f)

    def worker_response(self, regime: Regime, w: str, prev: Matching, offers) -> str:
        _, inactive_workers = active_sets(self.market, regime, prev)
        if w in inactive_workers:
            employer = prev.partner(w)
            return employer if employer in offers else w
        return best_response_accept(self.market, w, offers)

    @staticmethod
    def _forced_offer(regime, f, prev) -> Optional[str]:
        if regime in (Regime.FIRM, Regime.TWO_SIDED) and prev.is_matched(f):
            return prev.partner(f)
        return None


class FlexibleFirmProfile(StationaryStrategyProfile):
    """Firms renew with their target partner; a rejected firm looks elsewhere.

    An unmatched firm offers to the worker it values most, other than its
    target partner, among those who value it above their current match.  In
    ``rejected-set`` mode the firm also skips workers who already turned it
    down since it last held a job; in ``strict-stationary`` mode it decides
    from the previous matching alone.
    """

    descriptor = "firm-flexible"

    def __init__(self, market, target, regime=Regime.FIRM, mode=REJECTED_SET, name=None):
        if mode not in (REJECTED_SET, STRICT_STATIONARY):
            raise ValueError(f"unknown mode {mode!r}")
        super().__init__(market, target, regime, name)
        self.mode = mode
        self.uses_memory = mode == REJECTED_SET
        self._index = {f: i for i, f in enumerate(market.firms)}

    def initial_memory(self):
        if not self.uses_memory:
            return ()
        return tuple(frozenset() for _ in self.market.firms)

    def next_memory(self, memory, regime, prev, offers, realized):
        if not self.uses_memory:
            return memory
        out = []
        for f, rejected in zip(self.market.firms, memory):
            if realized.is_matched(f):
                out.append(frozenset())
            elif offers[f] != f:
                out.append(rejected | {offers[f]})
            else:
                out.append(rejected)
        return tuple(out)

    def rejected(self, f, memory) -> frozenset:
        if not self.uses_memory or not memory:
            return frozenset()
        return memory[self._index[f]]

    def firm_offer(self, regime, f, prev, memory=()):
        forced = self._forced_offer(regime, f, prev)
        if forced is not None:
            return forced
        own = self.target.partner(f)
        rejected = self.rejected(f, memory)
        if not prev.pairs and not rejected:
            return own
        if prev.partner(f) == own:
            return own
        m = self.market
        best, best_u = f, 0
        for w in m.workers:
            if w == own or w in rejected:
                continue
            u = m.firm_utils[f][w]
            if u > best_u and m.worker_utils[w][f] > m.utility(w, prev.partner(w)):
                best, best_u = w, u
        return best


class FallbackProfile(StationaryStrategyProfile):
    """Firms offer their target partner while the target holds, otherwise their firm-optimal partner."""

    descriptor = "worker-flexible"

    def __init__(self, market, target, regime=Regime.WORKER, name=None, firm_optimal=None):
        super().__init__(market, target, regime, name)
        self.firm_optimal = firm_optimal or deferred_acceptance(market, "firms")

    def firm_offer(self, regime, f, prev, memory=()):
        forced = self._forced_offer(regime, f, prev)
        if forced is not None:
            return forced
        if prev == self.target or not prev.pairs:
            return self.target.partner(f)
        return self.firm_optimal.partner(f)


def _require_stable(m, mu):
    if not is_stable(m, mu):
        raise NotStable(f"{mu} is not stable")


def profile_no_commitment(m: MarketInstance, mu: Matching) -> StationaryStrategyProfile:
    _require_stable(m, mu)
    return StationaryStrategyProfile(m, mu, Regime.NONE, "no-commit")


def profile_firm_commit_restrictive(m: MarketInstance, mu: Matching) -> StationaryStrategyProfile:
    _require_stable(m, mu)
    return StationaryStrategyProfile(m, mu, Regime.FIRM, "firm-restrictive")


def profile_firm_commit_flexible(
    m: MarketInstance, mu: Matching, mode: str = REJECTED_SET
) -> FlexibleFirmProfile:
    _require_stable(m, mu)
    return FlexibleFirmProfile(m, mu, Regime.FIRM, mode, "firm-flexible")


def profile_worker_commit_restrictive(m: MarketInstance, mu: Matching) -> StationaryStrategyProfile:
    _require_stable(m, mu)
    return StationaryStrategyProfile(m, mu, Regime.WORKER, "worker-restrictive")


def profile_worker_commit_flexible(m: MarketInstance, mu: Matching) -> FallbackProfile:
    _require_stable(m, mu)
    return FallbackProfile(m, mu, Regime.WORKER, "worker-flexible")


PROFILE_BUILDERS = {
    "no-commit": profile_no_commitment,
    "firm-restrictive": profile_firm_commit_restrictive,
    "firm-flexible": profile_firm_commit_flexible,
    "worker-restrictive": profile_worker_commit_restrictive,
    "worker-flexible": profile_worker_commit_flexible,
}

PROFILE_REGIMES = {
    "no-commit": Regime.NONE,
    "firm-restrictive": Regime.FIRM,
    "firm-flexible": Regime.FIRM,
    "worker-restrictive": Regime.WORKER,
    "worker-flexible": Regime.WORKER,
}


def build_profile(descriptor: str, m: MarketInstance, mu: Matching, **options):
    try:
        builder = PROFILE_BUILDERS[descriptor]
    except KeyError:
        raise ValueError(f"unknown profile {descriptor!r}") from None
    return builder(m, mu, **options)
