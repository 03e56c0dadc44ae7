from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import corpus
from dynmatch.algorithms import enumerate_all_matchings, enumerate_stable_set
from dynmatch.engine import (
    Deviation,
    GameState,
    OfferProfile,
    Period,
    ResponseProfile,
    Trace,
    admissible_responses,
    default_max_periods,
    discounted_payoff,
    feasible_offers,
    play_period,
    simulate,
    step,
    stream_value,
)
from dynmatch.errors import InfeasibleOffer, InfeasibleResponse, NoStationaryTail
from dynmatch.market import Matching, Regime, is_individually_rational
from dynmatch.strategies import (
    PROFILE_BUILDERS,
    PROFILE_REGIMES,
    StationaryStrategyProfile,
    build_profile,
    profile_firm_commit_restrictive,
    profile_no_commitment,
)
from oracles import truncated_payoff

ONE = Matching([("f1", "w1")])
MU_F = Matching([("f1", "w1"), ("f2", "w2")])
MU_W = Matching([("f1", "w2"), ("f2", "w1")])


class Idle(StationaryStrategyProfile):
    def firm_offer(self, regime, f, prev, memory=()):
        return f

    def worker_response(self, regime, w, prev, offers):
        return w


class Alternating(StationaryStrategyProfile):
    """Everyone moves to the other perfect matching of M2 each period."""

    def firm_offer(self, regime, f, prev, memory=()):
        if prev == MU_F:
            return MU_W.partner(f)
        return MU_F.partner(f)

    def worker_response(self, regime, w, prev, offers):
        return next(iter(offers)) if offers else w


def test_feasible_offers(m2):
    assert feasible_offers(m2, Regime.FIRM, ONE, "f1") == {"w1"}
    assert feasible_offers(m2, Regime.NONE, ONE, "f1") == {"w1", "w2", "f1"}
    assert feasible_offers(m2, Regime.WORKER, ONE, "f1") == {"w1", "w2", "f1"}


def test_admissible_responses(m2):
    assert admissible_responses(m2, Regime.NONE, Matching.empty(), "w1", {"f1", "f2"}) == {"f1", "f2", "w1"}
    assert admissible_responses(m2, Regime.WORKER, ONE, "w1", {"f1", "f2"}) == {"f1"}
    assert admissible_responses(m2, Regime.WORKER, ONE, "w1", {"f2"}) == {"w1"}


def test_play_period(m2):
    empty = Matching.empty()
    assert play_period(m2, Regime.NONE, empty, {"f1": "w1", "f2": "w2"}, {"w1": "f1", "w2": "f2"}) == MU_F
    assert play_period(
        m2, Regime.NONE, empty, {"f1": "w1", "f2": "w1"}, {"w1": "f2", "w2": "w2"}
    ) == Matching([("f2", "w1")])


def test_play_period_rejects_infeasible_actions(m2):
    with pytest.raises(InfeasibleOffer) as err:
        play_period(m2, Regime.FIRM, ONE, {"f1": "w2", "f2": "f2"}, {"w1": "w1", "w2": "f1"})
    assert err.value.firm == "f1"
    with pytest.raises(InfeasibleResponse) as err:
        play_period(m2, Regime.NONE, Matching.empty(), {"f1": "w1", "f2": "f2"}, {"w1": "f2", "w2": "w2"})
    assert err.value.worker == "w1"
    with pytest.raises(InfeasibleResponse):
        play_period(m2, Regime.WORKER, ONE, {"f1": "w1", "f2": "w1"}, {"w1": "f2", "w2": "w2"})


def test_no_commitment_trace_is_constant(m2):
    trace = simulate(m2, Regime.NONE, profile_no_commitment(m2, MU_F))
    assert trace.tail_start == 1
    assert trace.tail_matching == MU_F
    assert all(p.matching == MU_F for p in trace.periods)


def test_firm_commitment_restrictive_trace(m2):
    trace = simulate(m2, Regime.FIRM, profile_firm_commit_restrictive(m2, MU_W))
    assert trace.tail_start == 1 and trace.tail_matching == MU_W


def test_idle_profile_never_matches(m2):
    for regime in Regime:
        trace = simulate(m2, regime, Idle(m2, MU_F, regime))
        assert trace.tail_matching == Matching.empty()
        assert discounted_payoff(m2, trace, "f1").value == 0


def test_periodic_tail(m2):
    trace = simulate(m2, Regime.NONE, Alternating(m2, MU_F, Regime.NONE))
    assert trace.cycle in ((MU_F, MU_W), (MU_W, MU_F))
    assert not trace.is_eventually_constant
    with pytest.raises(ValueError):
        trace.tail_matching
    # f1 earns 2, 1, 2, 1, ... at delta 1/2: (2 + 1/2) / (1 - 1/4)
    assert discounted_payoff(m2, trace, "f1").value == Fraction(10, 3)


def test_recurrence_budget(m2):
    with pytest.raises(NoStationaryTail) as err:
        simulate(m2, Regime.NONE, Alternating(m2, MU_F, Regime.NONE), max_periods=1)
    assert err.value.trace is not None
    assert default_max_periods(m2) == 12


def test_payoff_closed_forms(m2):
    assert stream_value((), (3,), Fraction(1, 2)) == 6
    assert stream_value((0, 0), (3,), Fraction(1, 2)) == Fraction(3, 2)
    assert stream_value((), (0,), Fraction(1, 2)) == 0
    idle = Period(OfferProfile({"f1": "f1", "f2": "f2"}), ResponseProfile({"w1": "w1", "w2": "w2"}), Matching.empty())
    trace = Trace(Matching.empty(), (idle, idle), 3, (ONE,))
    assert discounted_payoff(m2, trace, "f1").value == Fraction(1, 4) * 2 * 2
    assert discounted_payoff(m2, trace, "f1", delta=Fraction(1, 3)).value == Fraction(1, 9) * 2 * Fraction(3, 2)


def test_deviation_applies_in_the_first_period_only(m2):
    profile = profile_no_commitment(m2, MU_F)
    trace = simulate(m2, Regime.NONE, profile, deviation=Deviation("f1", "w2"))
    # w2 prefers f1 and takes it, leaving f2 and w1 single for a period
    assert trace.periods[0].matching == Matching([("f1", "w2")])
    assert trace.matching_at(2) == MU_F
    assert trace.tail_start == 2


def test_step_returns_next_state(m2):
    profile = profile_no_commitment(m2, MU_F)
    offers, responses, mu, nxt = step(m2, Regime.NONE, profile, GameState(Matching.empty()))
    assert offers == {"f1": "w1", "f2": "w2"}
    assert responses == {"w1": "f1", "w2": "f2"}
    assert nxt == GameState(MU_F, ())


def test_trace_text_format(m2):
    trace = simulate(m2, Regime.NONE, profile_no_commitment(m2, MU_W))
    assert trace.serialize() == (
        "start | -\n"
        "1 | f1->w2; f2->w1 | w1->f2; w2->f1 | (f1,w2) (f2,w1)\n"
        "tail 1 | (f1,w2) (f2,w1)\n"
    )


def test_no_commitment_tails_do_not_depend_on_the_start():
    for m in corpus(40, max_side=3, seed=5):
        for mu in enumerate_stable_set(m).stable:
            profile = profile_no_commitment(m, mu)
            tails = {
                simulate(m, Regime.NONE, profile, start=s).cycle
                for s in enumerate_all_matchings(m)
            }
            assert tails == {(mu,)}


def test_traces_from_rational_starts_stay_rational():
    for m in corpus(60, max_side=3, seed=9):
        for mu in enumerate_stable_set(m).stable:
            for name in PROFILE_BUILDERS:
                regime = PROFILE_REGIMES[name]
                profile = build_profile(name, m, mu)
                for start in enumerate_all_matchings(m):
                    if not is_individually_rational(m, start):
                        continue
                    trace = simulate(m, regime, profile, start=start)
                    assert all(is_individually_rational(m, p.matching) for p in trace.periods)


def test_play_period_is_deterministic(m2):
    args = (m2, Regime.NONE, Matching.empty(), {"f1": "w1", "f2": "w1"}, {"w1": "f2", "w2": "w2"})
    assert play_period(*args) == play_period(*args)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.integers(-5, 12), max_size=6),
    st.lists(st.integers(-5, 12), min_size=1, max_size=4),
    st.integers(1, 99),
)
def test_closed_form_matches_truncated_sum(prefix, cycle, k):
    delta = Fraction(k, 100)
    exact = stream_value(prefix, cycle, delta)

    def u(t):
        if t <= len(prefix):
            return prefix[t - 1]
        return cycle[(t - len(prefix) - 1) % len(cycle)]

    # truncate where the remaining mass is below 1e-9
    bound = max(abs(x) for x in prefix + cycle) or 1
    horizon = 1
    while float(delta) ** horizon * bound / (1 - float(delta)) >= 1e-9:
        horizon += 1
    assert abs(float(exact - truncated_payoff(u, delta, horizon))) < 1e-9
