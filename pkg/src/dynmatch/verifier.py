"""Stationary-equilibrium verification by deviation checks with exact payoffs.

With the other agents fixed to a deterministic profile, each agent faces a
finite deterministic decision problem whose states are ``(previous matching,
profile memory)``.  Discounting makes the one-shot deviation principle exact
on any set of states closed under the agent's own actions, and policy
iteration on that set gives the agent's exact best-response values.
Continuation values come from following a policy until a state repeats, so
every payoff is an exact rational.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import engine
from .algorithms import MAX_SIDE, deferred_acceptance, enumerate_all_matchings
from .engine import Deviation, GameState, continuation_class, default_max_periods
from .errors import InstanceTooLarge, NoBoundary, NoImprovingOffer, NoStationaryTail, NotStable
from .market import Matching, MarketInstance, Regime, as_fraction, is_stable
from .restabilization import firm_threshold, restabilize, worker_threshold
from .strategies import REJECTED_SET, FlexibleFirmProfile

EQUILIBRIUM = "Equilibrium"
NOT_EQUILIBRIUM = "NotEquilibrium"
BOUNDARY_OFFSET = Fraction(1, 1000)


@dataclass(frozen=True)
class DeviationWitness:
    agent: str
    state: GameState
    prescribed_action: str
    deviating_action: str
    payoff_on_path: Fraction
    payoff_deviating: Fraction
    regime: Regime
    offers_received: Optional[frozenset] = None
    kind: str = "one-shot"
    plan: tuple = ()  # (state, action) pairs of a multi-period deviation

    @property
    def gain(self) -> Fraction:
        return self.payoff_deviating - self.payoff_on_path

    def describe(self) -> str:
        where = engine.format_pairs(self.state.prev)
        if self.offers_received is not None:
            where += " offers={" + ",".join(sorted(self.offers_received)) + "}"
        return (
            f"{self.kind} {self.agent} at [{where}]: "
            f"{self.prescribed_action} -> {self.deviating_action}, "
            f"payoff {self.payoff_on_path} -> {self.payoff_deviating} "
            f"(~{float(self.payoff_on_path):.5g} -> {float(self.payoff_deviating):.5g})"
        )


@dataclass(frozen=True)
class EquilibriumReport:
    profile: str
    regime: Regime
    verdict: str
    witnesses: tuple
    states_checked: int
    agents_checked: int
    state_space: str = "path"
    notes: tuple = field(default=())

    @property
    def is_equilibrium(self) -> bool:
        return self.verdict == EQUILIBRIUM

    def to_text(self) -> str:
        lines = [
            f"profile: {self.profile}",
            f"regime: {self.regime}",
            f"state-space: {self.state_space}",
            f"verdict: {self.verdict}",
            f"states-checked: {self.states_checked}",
            f"agents-checked: {self.agents_checked}",
            f"witnesses: {len(self.witnesses)}",
        ]
        lines += [f"  {w.describe()}" for w in self.witnesses]
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines) + "\n"

    def to_kv(self) -> str:
        lines = [
            f"profile={self.profile}",
            f"regime={self.regime}",
            f"state_space={self.state_space}",
            f"verdict={self.verdict}",
            f"states_checked={self.states_checked}",
            f"agents_checked={self.agents_checked}",
            f"witness_count={len(self.witnesses)}",
        ]
        for i, w in enumerate(self.witnesses):
            lines += [
                f"witness.{i}.kind={w.kind}",
                f"witness.{i}.agent={w.agent}",
                f"witness.{i}.state={engine.format_pairs(w.state.prev)}",
                f"witness.{i}.prescribed={w.prescribed_action}",
                f"witness.{i}.deviation={w.deviating_action}",
                f"witness.{i}.payoff_on_path={w.payoff_on_path}",
                f"witness.{i}.payoff_deviating={w.payoff_deviating}",
            ]
        return "\n".join(lines) + "\n"


class GameGraph:
    """Cached transitions and exact continuation values of a profile."""

    def __init__(self, m: MarketInstance, regime: Regime, profile, max_path: int = 100_000):
        self.m = m
        self.regime = regime
        self.profile = profile
        self.max_path = max_path
        self._steps = {}
        self._values = {}

    def initial_state(self) -> GameState:
        return GameState(Matching.empty(), self.profile.initial_memory())

    def step(self, state: GameState, deviation: Optional[Deviation] = None):
        key = (state, deviation)
        hit = self._steps.get(key)
        if hit is None:
            hit = engine.step(self.m, self.regime, self.profile, state, deviation)
            self._steps[key] = hit
        return hit

    def prescribed_offers(self, state: GameState) -> dict:
        return self.step(state)[0]

    def reward(self, agent: str, state: GameState, deviation=None) -> Fraction:
        mu = self.step(state, deviation)[2]
        return self.m.utility(agent, mu.partner(agent))

    def value(self, agent: str, state: GameState) -> Fraction:
        """Discounted payoff of ``agent`` when everybody follows the profile from ``state``."""
        cache = self._values.setdefault(agent, {})
        if state not in cache:
            evaluate_path(
                state,
                lambda s: self.step(s)[3],
                lambda s: self.reward(agent, s),
                self.m.discount(agent),
                cache,
                self.max_path,
            )
        return cache[state]


def evaluate_path(start, successor, reward, delta, cache, max_path=100_000):
    """Exact values along the deterministic path from ``start``, stored into ``cache``.

    The path is followed until it enters a state with a cached value or closes
    a cycle; the cycle is valued as a geometric series and earlier states by
    backward recursion.
    """
    path, index = [], {}
    s = start
    while s not in cache and s not in index:
        if len(path) > max_path:
            raise NoStationaryTail(f"no recurring state within {max_path} periods")
        index[s] = len(path)
        path.append(s)
        s = successor(s)
    rewards = [reward(p) for p in path]
    if s in index:
        c = index[s]
        nxt = cache[path[c]] = engine.stream_value((), rewards[c:], delta)
        for j in range(len(path) - 1, c, -1):
            nxt = cache[path[j]] = rewards[j] + delta * nxt
        nxt = cache[path[c]]
        stop = c
    else:
        nxt = cache[s]
        stop = len(path)
    for j in range(stop - 1, -1, -1):
        nxt = cache[path[j]] = rewards[j] + delta * nxt
    return cache[start]


def _actions(graph: GameGraph, agent: str, state: GameState):
    """Return ``(feasible actions, prescribed action, offers received or None)``."""
    m, regime, prev = graph.m, graph.regime, state.prev
    offers = graph.prescribed_offers(state)
    if m.is_firm(agent):
        return engine.feasible_offers(m, regime, prev, agent), offers[agent], None
    received = frozenset(f for f, o in offers.items() if o == agent)
    feasible = engine.admissible_responses(m, regime, prev, agent, received)
    prescribed = graph.profile.worker_response(regime, agent, prev, received)
    return feasible, prescribed, received


def one_shot_deviations(
    m: MarketInstance,
    regime: Regime,
    profile,
    agent: str,
    state: Optional[GameState] = None,
    *,
    graph: Optional[GameGraph] = None,
) -> list:
    """Witnesses for every strictly profitable single-period deviation of ``agent`` at ``state``.

    ``state`` defaults to the opening state, where nobody is matched yet.
    """
    graph = graph or GameGraph(m, regime, profile)
    if state is None:
        state = graph.initial_state()
    elif isinstance(state, Matching):
        state = GameState(state, profile.initial_memory())
    feasible, prescribed, received = _actions(graph, agent, state)
    on_path = graph.value(agent, state)
    delta = m.discount(agent)
    out = []
    for action in sorted(feasible):
        if action == prescribed:
            continue
        _, _, mu, nxt = graph.step(state, Deviation(agent, action))
        payoff = m.utility(agent, mu.partner(agent)) + delta * graph.value(agent, nxt)
        if payoff > on_path:
            out.append(
                DeviationWitness(
                    agent=agent,
                    state=state,
                    prescribed_action=prescribed,
                    deviating_action=action,
                    payoff_on_path=on_path,
                    payoff_deviating=payoff,
                    regime=regime,
                    offers_received=received,
                )
            )
    return out


def reachable_states(graph: GameGraph, agent: str) -> list:
    """States the agent can reach from the opening state while everyone else follows the profile."""
    start = graph.initial_state()
    seen = {start: None}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        feasible, prescribed, _ = _actions(graph, agent, s)
        for action in sorted(feasible):
            dev = None if action == prescribed else Deviation(agent, action)
            nxt = graph.step(s, dev)[3]
            if nxt not in seen:
                seen[nxt] = None
                queue.append(nxt)
    return list(seen)


def all_states(graph: GameGraph) -> list:
    """One state per continuation class of every matching, with the profile's opening memory."""
    memory = graph.profile.initial_memory()
    out, classes = [], set()
    for mu in enumerate_all_matchings(graph.m):
        key = continuation_class(graph.regime, mu)
        if key in classes:
            continue
        classes.add(key)
        out.append(GameState(mu, memory))
    return out


@dataclass(frozen=True)
class AgentOptimum:
    """Profile values and best-response values of one agent over the states it can reach."""

    agent: str
    states: tuple
    prescribed: dict
    policy: dict
    profile_values: dict
    optimal_values: dict

    def improves(self, state) -> bool:
        return self.optimal_values[state] > self.profile_values[state]


def best_response_values(graph: GameGraph, agent: str) -> AgentOptimum:
    """Exact optimal values for ``agent`` against the profile, by policy iteration.

    Starting from the profile's own actions, every state switches to a
    strictly better action until none exists; values of each candidate policy
    are exact because play under a fixed policy is deterministic.
    """
    m = graph.m
    delta = m.discount(agent)
    states = reachable_states(graph, agent)
    info = {s: _actions(graph, agent, s) for s in states}
    prescribed = {s: info[s][1] for s in states}

    def dev(s, a):
        return None if a == prescribed[s] else Deviation(agent, a)

    policy = dict(prescribed)
    while True:
        values = {}
        for s in states:
            evaluate_path(
                s,
                lambda x: graph.step(x, dev(x, policy[x]))[3],
                lambda x: graph.reward(agent, x, dev(x, policy[x])),
                delta,
                values,
                graph.max_path,
            )
        changed = False
        for s in states:
            best_a, best_v = policy[s], values[s]
            for a in sorted(info[s][0]):
                d = dev(s, a)
                v = graph.reward(agent, s, d) + delta * values[graph.step(s, d)[3]]
                if v > best_v:
                    best_a, best_v = a, v
            if best_a != policy[s]:
                policy[s] = best_a
                changed = True
        if not changed:
            break
    return AgentOptimum(
        agent,
        tuple(states),
        prescribed,
        policy,
        {s: graph.value(agent, s) for s in states},
        values,
    )


def _path_witness(graph: GameGraph, opt: AgentOptimum) -> Optional[DeviationWitness]:
    """Witness at the first state on the equilibrium path where the best response departs."""
    agent, m = opt.agent, graph.m
    s = graph.initial_state()
    seen = set()
    while s not in seen:
        seen.add(s)
        if opt.policy[s] != opt.prescribed[s]:
            action = opt.policy[s]
            d = Deviation(agent, action)
            nxt = graph.step(s, d)[3]
            one_shot = graph.reward(agent, s, d) + m.discount(agent) * graph.value(agent, nxt)
            received = _actions(graph, agent, s)[2]
            if one_shot > opt.profile_values[s]:
                return DeviationWitness(
                    agent, s, opt.prescribed[s], action, opt.profile_values[s],
                    one_shot, graph.regime, received,
                )
            plan, x = [], s
            visited = set()
            while x not in visited:
                visited.add(x)
                plan.append((x, opt.policy[x]))
                a = opt.policy[x]
                x = graph.step(x, None if a == opt.prescribed[x] else Deviation(agent, a))[3]
            return DeviationWitness(
                agent, s, opt.prescribed[s], action, opt.profile_values[s],
                opt.optimal_values[s], graph.regime, received,
                kind="multi-period", plan=tuple(plan),
            )
        s = graph.step(s)[3]
    return None


STATE_SPACES = ("path", "reachable", "all")


def verify_equilibrium(
    m: MarketInstance, regime: Regime, profile, states: str = "path"
) -> EquilibriumReport:
    """Check a profile for profitable unilateral deviations.

    ``states`` picks how demanding the check is:

    * ``"path"``: for each agent, compute its exact best response to the
      others (any number of deviating periods) and compare values at the
      states the profile itself visits.  A failure yields one witness per
      agent at the first state where the best response departs.
    * ``"reachable"``: one-shot deviations at every state the agent can
      bring about through its own actions.
    * ``"all"``: one-shot deviations at one state per continuation class of
      every matching, including play no unilateral deviation reaches.

    Under firm commitment with the flexible firm profile the resign-and-wait
    deviation is also compared in closed form.
    """
    if len(m.firms) > MAX_SIDE or len(m.workers) > MAX_SIDE:
        raise InstanceTooLarge(f"verification is limited to {MAX_SIDE}x{MAX_SIDE} markets")
    if states not in STATE_SPACES:
        raise ValueError(f"states must be one of {STATE_SPACES}")
    graph = GameGraph(m, regime, profile)
    witnesses = []
    checked = set()
    if states == "path":
        for agent in m.agents:
            opt = best_response_values(graph, agent)
            checked.update(opt.states)
            w = _path_witness(graph, opt)
            if w is not None:
                witnesses.append(w)
    else:
        shared = all_states(graph) if states == "all" else None
        for agent in m.agents:
            space = shared if shared is not None else reachable_states(graph, agent)
            for s in space:
                checked.add(s)
                witnesses.extend(one_shot_deviations(m, regime, profile, agent, s, graph=graph))

    notes = []
    if regime is Regime.FIRM and isinstance(profile, FlexibleFirmProfile) and is_stable(m, profile.target):
        for w in m.workers:
            if not profile.target.is_matched(w):
                continue
            cmp = resign_and_wait_comparison(m, profile.target, w, m.discount(w), mode=profile.mode)
            if cmp.profitable:
                witnesses.append(
                    DeviationWitness(
                        agent=w,
                        state=graph.initial_state(),
                        prescribed_action=profile.target.partner(w),
                        deviating_action="resign-and-wait",
                        payoff_on_path=cmp.stay,
                        payoff_deviating=cmp.deviate,
                        regime=regime,
                        kind="resign-and-wait",
                    )
                )
        notes.append("resign-and-wait compared in closed form for every matched worker")

    witnesses.sort(key=_witness_order(m))
    return EquilibriumReport(
        profile=getattr(profile, "name", type(profile).__name__),
        regime=regime,
        verdict=EQUILIBRIUM if not witnesses else NOT_EQUILIBRIUM,
        witnesses=tuple(witnesses),
        states_checked=len(checked),
        agents_checked=len(m.agents),
        state_space=states,
        notes=tuple(notes),
    )


def replay_witness(m: MarketInstance, profile, witness: DeviationWitness) -> tuple:
    """Recompute a witness's two payoffs by playing the game again.

    Returns ``(payoff_on_path, payoff_deviating)``.
    """
    regime = witness.regime
    agent = witness.agent
    start, memory = witness.state
    on_path = engine.discounted_payoff(
        m, engine.simulate(m, regime, profile, start=start, memory=memory), agent
    ).value
    if witness.kind == "one-shot":
        trace = engine.simulate(
            m, regime, profile, start=start, memory=memory,
            deviation=Deviation(agent, witness.deviating_action),
        )
        return on_path, engine.discounted_payoff(m, trace, agent).value
    if witness.kind == "resign-and-wait":
        outcome = restabilize(m, profile.target, agent, getattr(profile, "mode", REJECTED_SET))
        return on_path, engine.discounted_payoff(m, outcome.trace, agent).value
    plan = dict(witness.plan)
    state, seen, rewards = witness.state, {}, []
    while state not in seen:
        seen[state] = len(rewards)
        _, _, mu, nxt = engine.step(
            m, regime, profile, state, Deviation(agent, plan[state])
        )
        rewards.append(m.utility(agent, mu.partner(agent)))
        state = nxt
    c = seen[state]
    deviating = engine.stream_value(rewards[:c], rewards[c:], m.discount(agent))
    return on_path, deviating


def _witness_order(m):
    rank = {a: i for i, a in enumerate(m.agents)}

    def key(w):
        return (
            rank[w.agent],
            w.kind,
            sorted(w.state.prev.pairs),
            repr(w.state.memory),
            w.deviating_action,
        )

    return key


@dataclass(frozen=True)
class ResignAndWait:
    stay: Fraction
    deviate: Fraction
    profitable: bool
    periods_waited: Optional[int] = None
    final: Optional[Matching] = None


def resign_and_wait_comparison(
    m: MarketInstance, mu: Matching, w: str, delta_w, mode: str = REJECTED_SET
) -> ResignAndWait:
    """Staying with ``mu(w)`` forever against resigning and waiting ``k(w)`` periods."""
    if not is_stable(m, mu):
        raise NotStable(f"{mu} is not stable")
    delta = as_fraction(delta_w)
    stay = m.utility(w, mu.partner(w)) / (1 - delta)
    try:
        outcome = restabilize(m, mu, w, mode)
    except NoImprovingOffer:
        return ResignAndWait(stay, Fraction(0), False)
    k = outcome.periods_waited
    deviate = delta**k * m.utility(w, outcome.final.partner(w)) / (1 - delta)
    return ResignAndWait(stay, deviate, deviate > stay, k, outcome.final)


@dataclass(frozen=True)
class FirmWait:
    stay: Fraction
    deviate: Fraction
    profitable: bool
    threshold: Fraction
    threshold_agrees: bool


def firm_wait_comparison(
    m: MarketInstance, mu: Matching, f: str, delta_f, deviation_period: int, firm_optimal=None
) -> FirmWait:
    """Keeping ``mu(f)`` forever against withholding an offer in one period and then getting the firm-optimal partner.

    ``threshold_agrees`` records whether the direct comparison gives the same
    verdict as the simple test ``delta_f > u_f(mu(f)) / u_f(mu_F(f))``.
    """
    if not is_stable(m, mu):
        raise NotStable(f"{mu} is not stable")
    if deviation_period < 1:
        raise ValueError("deviation_period starts at 1")
    if firm_optimal is None:
        firm_optimal = deferred_acceptance(m, "firms")
    delta = as_fraction(delta_f)
    current = m.utility(f, mu.partner(f))
    best = m.utility(f, firm_optimal.partner(f))
    stay = current / (1 - delta)
    deviate = (
        current * (1 - delta ** (deviation_period - 1)) / (1 - delta)
        + delta**deviation_period * best / (1 - delta)
    )
    threshold = firm_threshold(m, mu, f, firm_optimal)
    profitable = deviate > stay
    return FirmWait(stay, deviate, profitable, threshold, profitable == (delta > threshold))


def _probe_points(c: float):
    lo = Fraction(c) - BOUNDARY_OFFSET
    hi = Fraction(c) + BOUNDARY_OFFSET
    eps = Fraction(1, 10**12)
    return max(lo, eps), min(hi, 1 - eps)


def threshold_boundary_test(
    m: MarketInstance, mu: Matching, agent: str, side: str = None, max_periods=None
) -> bool:
    """Whether the deviation flips from unprofitable to profitable across the agent's threshold.

    Probes ``c - 1e-3`` and ``c + 1e-3``.  For firms every withholding period
    from 1 to ``max_periods`` is compared.
    """
    if side is None:
        side = "firm" if m.is_firm(agent) else "worker"
    if side == "worker":
        c = worker_threshold(m, mu, agent)
        if c >= 1:
            raise NoBoundary(f"{agent} never gains by resigning under {mu}")
        lo, hi = _probe_points(c)
        return (
            not resign_and_wait_comparison(m, mu, agent, lo).profitable
            and resign_and_wait_comparison(m, mu, agent, hi).profitable
        )
    if side == "firm":
        firm_optimal = deferred_acceptance(m, "firms")
        c = firm_threshold(m, mu, agent, firm_optimal)
        if c >= 1:
            raise NoBoundary(f"{agent} already has its firm-optimal partner under {mu}")
        if max_periods is None:
            max_periods = default_max_periods(m)
        lo, hi = _probe_points(float(c))
        periods = range(1, max_periods + 1)
        below = [firm_wait_comparison(m, mu, agent, lo, t, firm_optimal).profitable for t in periods]
        above = [firm_wait_comparison(m, mu, agent, hi, t, firm_optimal).profitable for t in periods]
        return not any(below) and all(above)
    raise ValueError("side must be 'worker' or 'firm'")
