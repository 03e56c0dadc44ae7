"""The two-stage period protocol, trace simulation and exact discounted payoffs.

A period starts from the previous matching.  Firms make offers (inactive
firms can only renew), workers answer with one of the offers they received or
with themselves, and the answers define the new matching.

Profiles are duck-typed: the engine only calls ``firm_offer``,
``worker_response``, ``initial_memory`` and ``next_memory`` (see
:mod:`dynmatch.strategies`).  ``memory`` is whatever hashable bookkeeping a
profile carries between periods; stationary profiles keep it empty.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Mapping, NamedTuple, Optional

from .errors import InfeasibleOffer, InfeasibleResponse, NoStationaryTail
from .market import Matching, MarketInstance, Regime, active_sets, as_fraction


class GameState(NamedTuple):
    prev: Matching
    memory: Hashable = ()


class Deviation(NamedTuple):
    """A single-period action that replaces what the profile prescribes."""

    agent: str
    action: str


@dataclass(frozen=True)
class OfferProfile:
    offers: Mapping  # firm -> worker, or the firm itself for "no offer"

    def received(self, worker: str) -> frozenset:
        return frozenset(f for f, o in self.offers.items() if o == worker)

    def key(self) -> tuple:
        return tuple(sorted(self.offers.items()))


@dataclass(frozen=True)
class ResponseProfile:
    responses: Mapping  # worker -> firm, or the worker itself for "reject all"

    def key(self) -> tuple:
        return tuple(sorted(self.responses.items()))


class Period(NamedTuple):
    offers: OfferProfile
    responses: ResponseProfile
    matching: Matching


@dataclass(frozen=True)
class DiscountedPayoff:
    agent: str
    value: Fraction

    def __float__(self):
        return float(self.value)


def continuation_class(regime: Regime, mu: Matching) -> Hashable:
    """A key that is equal for two matchings iff they are continuation-equivalent."""
    if regime is Regime.NONE:
        return ()
    if regime is Regime.TWO_SIDED:
        return mu.matched_agents
    return mu


def default_max_periods(m: MarketInstance) -> int:
    return 2 * len(m.firms) * len(m.workers) + 4


def feasible_offers(m: MarketInstance, regime: Regime, prev: Matching, f: str) -> frozenset:
    inactive_firms, _ = active_sets(m, regime, prev)
    if f in inactive_firms:
        return frozenset({prev.partner(f)})
    return frozenset(m.workers) | {f}


def admissible_responses(
    m: MarketInstance, regime: Regime, prev: Matching, w: str, received
) -> frozenset:
    """Responses open to ``w``.

    A committed worker whose employer does not renew is released: her only
    admissible response is to stay single this period.
    """
    received = frozenset(received)
    _, inactive_workers = active_sets(m, regime, prev)
    if w in inactive_workers:
        employer = prev.partner(w)
        return frozenset({employer}) if employer in received else frozenset({w})
    return received | {w}


def play_period(
    m: MarketInstance,
    regime: Regime,
    prev: Matching,
    offers,
    responses,
) -> Matching:
    """Validate one period's actions against ``prev`` and return the realized matching."""
    offers = dict(offers.offers if isinstance(offers, OfferProfile) else offers)
    responses = dict(
        responses.responses if isinstance(responses, ResponseProfile) else responses
    )
    inactive_firms, inactive_workers = active_sets(m, regime, prev)
    worker_set = set(m.workers)

    received = {w: set() for w in m.workers}
    for f in m.firms:
        if f not in offers:
            raise InfeasibleOffer(f, "no action given")
        o = offers[f]
        if f in inactive_firms:
            if o != prev.partner(f):
                raise InfeasibleOffer(f, f"committed to {prev.partner(f)}, offered {o}")
        elif o != f and o not in worker_set:
            raise InfeasibleOffer(f, f"{o!r} is not a worker")
        if o != f:
            received[o].add(f)
    for f in offers:
        if f not in m.firm_utils:
            raise InfeasibleOffer(f, "not a firm of this market")

    pairs = []
    for w in m.workers:
        if w not in responses:
            raise InfeasibleResponse(w, "no action given")
        r = responses[w]
        if w in inactive_workers:
            employer = prev.partner(w)
            expected = employer if employer in received[w] else w
            if r != expected:
                raise InfeasibleResponse(w, f"committed; must answer {expected}, answered {r}")
        elif r != w and r not in received[w]:
            raise InfeasibleResponse(w, f"accepted {r}, which made no offer")
        if r != w:
            pairs.append((r, w))
    for w in responses:
        if w not in m.worker_utils:
            raise InfeasibleResponse(w, "not a worker of this market")
    return Matching(pairs)


def step(m, regime, profile, state: GameState, deviation: Optional[Deviation] = None):
    """Play one period from ``state``; returns ``(offers, responses, matching, next_state)``.

    Offers and responses are plain dicts.  A deviation replaces the profile's
    action for one agent in this period only; everybody else reacts to the
    offers actually made.
    """
    prev, memory = state
    offers = {f: profile.firm_offer(regime, f, prev, memory) for f in m.firms}
    if deviation is not None and deviation.agent in offers:
        offers[deviation.agent] = deviation.action
    received = {w: [] for w in m.workers}
    for f, o in offers.items():
        if o != f:
            if o not in received:
                raise InfeasibleOffer(f, f"{o!r} is not a worker")
            received[o].append(f)
    responses = {
        w: profile.worker_response(regime, w, prev, frozenset(received[w]))
        for w in m.workers
    }
    if deviation is not None and deviation.agent in responses:
        responses[deviation.agent] = deviation.action
    realized = play_period(m, regime, prev, offers, responses)
    memory = profile.next_memory(memory, regime, prev, offers, realized)
    return offers, responses, realized, GameState(realized, memory)


@dataclass(frozen=True)
class Trace:
    """Periods played from ``start`` plus the eventually periodic tail.

    From period ``tail_start`` on the realized matchings repeat ``cycle``.
    Every trace produced by a deterministic profile has such a tail; for the
    canonical profiles the cycle has length one.
    """

    start: Matching
    periods: tuple
    tail_start: int
    cycle: tuple

    @property
    def tail_matching(self) -> Matching:
        if len(self.cycle) != 1:
            raise ValueError(f"tail cycles through {len(self.cycle)} matchings")
        return self.cycle[0]

    @property
    def is_eventually_constant(self) -> bool:
        return len(self.cycle) == 1

    def matching_at(self, t: int) -> Matching:
        if t < 1:
            raise ValueError("periods are numbered from 1")
        if t < self.tail_start:
            return self.periods[t - 1].matching
        return self.cycle[(t - self.tail_start) % len(self.cycle)]

    def prefix(self) -> tuple:
        return tuple(p.matching for p in self.periods[: self.tail_start - 1])

    def serialize(self) -> str:
        lines = [f"start | {format_pairs(self.start)}"]
        for t, (offers, responses, mu) in enumerate(self.periods, start=1):
            o = "; ".join(f"{f}->{x}" for f, x in sorted(offers.offers.items()))
            r = "; ".join(f"{w}->{x}" for w, x in sorted(responses.responses.items()))
            lines.append(f"{t} | {o} | {r} | {format_pairs(mu)}")
        tail = " / ".join(format_pairs(mu) for mu in self.cycle)
        lines.append(f"tail {self.tail_start} | {tail}")
        return "\n".join(lines) + "\n"


def format_pairs(mu: Matching) -> str:
    if not mu.pairs:
        return "-"
    return " ".join(f"({f},{w})" for f, w in mu.sorted_pairs())


def simulate(
    m: MarketInstance,
    regime: Regime,
    profile,
    max_periods: Optional[int] = None,
    *,
    start: Optional[Matching] = None,
    memory=None,
    deviation: Optional[Deviation] = None,
) -> Trace:
    """Run the profile from ``start`` (default: nobody matched) until its state recurs.

    The recurrence key is the continuation class of the previous matching,
    the prescribed offers and the profile memory.  ``deviation`` is applied in
    the first period only, and that period never serves as a recurrence point.
    """
    if max_periods is None:
        max_periods = default_max_periods(m)
    prev = start if start is not None else Matching.empty()
    if memory is None:
        memory = profile.initial_memory()
    state = GameState(prev, memory)

    seen = {}
    periods = []
    for t in range(1, max_periods + 2):
        prescribed = {f: profile.firm_offer(regime, f, state.prev, state.memory) for f in m.firms}
        key = (continuation_class(regime, state.prev), tuple(sorted(prescribed.items())), state.memory)
        if not (t == 1 and deviation is not None):
            if key in seen:
                return _close(state_start=prev, periods=periods, loop_from=seen[key])
            seen[key] = t
        if t > max_periods:
            break
        offers, responses, realized, state = step(
            m, regime, profile, state, deviation if t == 1 else None
        )
        periods.append(Period(OfferProfile(offers), ResponseProfile(responses), realized))

    partial = Trace(prev, tuple(periods), len(periods) + 1, ())
    raise NoStationaryTail(
        f"no recurring state within {max_periods} periods", trace=partial
    )


def _close(state_start, periods, loop_from):
    cycle = [p.matching for p in periods[loop_from - 1 :]]
    tail_start = loop_from
    # Slide the tail start back while the preceding period already repeats the cycle.
    while tail_start > 1 and periods[tail_start - 2].matching == cycle[-1]:
        tail_start -= 1
        cycle = [cycle[-1]] + cycle[:-1]
    cycle = _minimal_cycle(cycle)
    return Trace(state_start, tuple(periods), tail_start, tuple(cycle))


def _minimal_cycle(cycle):
    n = len(cycle)
    for d in range(1, n + 1):
        if n % d == 0 and cycle == cycle[:d] * (n // d):
            return cycle[:d]
    return cycle


def stream_value(prefix, cycle, delta) -> Fraction:
    """Exact value of ``sum_t delta**(t-1) * x_t`` for a prefix followed by a repeating cycle."""
    delta = as_fraction(delta)
    total = Fraction(0)
    weight = Fraction(1)
    for x in prefix:
        total += weight * x
        weight *= delta
    cycle_sum = Fraction(0)
    w = Fraction(1)
    for x in cycle:
        cycle_sum += w * x
        w *= delta
    return total + weight * cycle_sum / (1 - w)


def discounted_payoff(m: MarketInstance, trace: Trace, agent: str, delta=None) -> DiscountedPayoff:
    """Closed-form discounted payoff of ``agent`` along ``trace``.

    ``delta`` overrides the agent's own discount factor.
    """
    if not trace.cycle:
        raise NoStationaryTail("trace has no detected tail", trace=trace)
    d = m.discount(agent) if delta is None else as_fraction(delta)
    prefix = [m.utility(agent, mu.partner(agent)) for mu in trace.prefix()]
    cycle = [m.utility(agent, mu.partner(agent)) for mu in trace.cycle]
    return DiscountedPayoff(agent, stream_value(prefix, cycle, d))
