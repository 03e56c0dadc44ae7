"""Deferred acceptance, brute-force stable-set enumeration and the single-agent check."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from math import comb, factorial
from typing import Iterator, Optional

from .errors import InstanceTooLarge, InternalLatticeViolation
from .market import Matching, MarketInstance, is_stable

MAX_SIDE = 7


def deferred_acceptance(m: MarketInstance, proposing_side: str = "firms") -> Matching:
    """Deferred acceptance; with firms proposing it yields the firm-optimal stable matching.

    Proposers run down their acceptable partners in descending utility order and
    receivers hold the best acceptable proposal seen so far.  Free proposers
    are processed in identifier order so the run is reproducible.
    """
    if proposing_side not in ("firms", "workers"):
        raise ValueError("proposing_side must be 'firms' or 'workers'")
    if proposing_side == "firms":
        proposers, tables = m.firms, m.firm_utils
        receiver_tables = m.worker_utils
    else:
        proposers, tables = m.workers, m.worker_utils
        receiver_tables = m.firm_utils

    lists = {
        p: sorted((r for r, u in tables[p].items() if u > 0), key=lambda r: -tables[p][r])
        for p in proposers
    }
    next_choice = {p: 0 for p in proposers}
    held = {}
    free = deque(proposers)
    while free:
        p = free.popleft()
        prefs = lists[p]
        while next_choice[p] < len(prefs):
            r = prefs[next_choice[p]]
            next_choice[p] += 1
            utility = receiver_tables[r][p]
            if utility <= 0:
                continue
            incumbent = held.get(r)
            if incumbent is None:
                held[r] = p
                break
            if utility > receiver_tables[r][incumbent]:
                held[r] = p
                free.append(incumbent)
                break
    if proposing_side == "firms":
        return Matching((p, r) for r, p in held.items())
    return Matching((r, p) for r, p in held.items())


def matching_count(n_firms: int, n_workers: int) -> int:
    return sum(
        comb(n_firms, k) * comb(n_workers, k) * factorial(k)
        for k in range(min(n_firms, n_workers) + 1)
    )


def _guard(m: MarketInstance) -> None:
    if len(m.firms) > MAX_SIDE or len(m.workers) > MAX_SIDE:
        raise InstanceTooLarge(
            f"brute force is limited to {MAX_SIDE}x{MAX_SIDE} markets, "
            f"got {len(m.firms)}x{len(m.workers)}"
        )


def _enumerate(firms, workers, allowed=None) -> Iterator[Matching]:
    n = len(firms)
    pairs = []
    used = set()

    def rec(i):
        if i == n:
            yield Matching(pairs)
            return
        f = firms[i]
        yield from rec(i + 1)
        for w in workers:
            if w in used or (allowed is not None and (f, w) not in allowed):
                continue
            used.add(w)
            pairs.append((f, w))
            yield from rec(i + 1)
            pairs.pop()
            used.discard(w)

    yield from rec(0)


def enumerate_all_matchings(m: MarketInstance) -> Iterator[Matching]:
    """Yield every partial one-to-one matching of ``m`` exactly once.

    Firms are visited in order; each is left single first, then paired with
    each free worker in order.
    """
    _guard(m)
    return _enumerate(m.firms, m.workers)


@dataclass(frozen=True)
class StableSetReport:
    all_matchings_count: int
    stable: tuple
    firm_optimal: Matching
    worker_optimal: Matching


def _optimum(m, stable, side):
    for candidate in stable:
        if all(
            m.utility(a, candidate.partner(a)) >= m.utility(a, other.partner(a))
            for other in stable
            for a in side
        ):
            return candidate
    raise InternalLatticeViolation("no stable matching is simultaneously optimal")


def enumerate_stable_set(m: MarketInstance) -> StableSetReport:
    """Filter all matchings by stability and locate both side-optimal members.

    Only mutually acceptable pairs can appear in a stable (hence individually
    rational) matching, so the search skips the rest; the reported count still
    covers every matching.
    """
    _guard(m)
    acceptable = {
        (f, w)
        for f in m.firms
        for w in m.workers
        if m.firm_utils[f][w] > 0 and m.worker_utils[w][f] > 0
    }
    stable = tuple(mu for mu in _enumerate(m.firms, m.workers, acceptable) if is_stable(m, mu))
    if not stable:
        raise InternalLatticeViolation("stable set is empty")
    return StableSetReport(
        all_matchings_count=matching_count(len(m.firms), len(m.workers)),
        stable=stable,
        firm_optimal=_optimum(m, stable, m.firms),
        worker_optimal=_optimum(m, stable, m.workers),
    )


@dataclass(frozen=True)
class SingleAgentCheck:
    holds: bool
    witness: Optional[tuple] = None  # (stable matching, stable matching, agent)

    def __bool__(self):
        return self.holds


def check_single_agent_property(m: MarketInstance) -> SingleAgentCheck:
    report = enumerate_stable_set(m)
    first = report.stable[0]
    single = set(m.agents) - first.matched_agents
    for other in report.stable[1:]:
        other_single = set(m.agents) - other.matched_agents
        if other_single != single:
            agent = sorted(single ^ other_single)[0]
            return SingleAgentCheck(False, (first, other, agent))
    return SingleAgentCheck(True)
