from fractions import Fraction

import pytest
from hypothesis import given, settings

from conftest import markets
from dynmatch.errors import (
    DiscountOutOfRange,
    DuplicateAgent,
    DuplicateUtility,
    MissingUtility,
    UnknownAgentReference,
    ZeroUtility,
)
from dynmatch.market import (
    Matching,
    Regime,
    active_sets,
    as_fraction,
    blocking_pairs,
    check_matching,
    is_individually_rational,
    is_stable,
    validate_market,
)
from oracles import all_matchings, stable


def raw_m2(**changes):
    raw = {
        "firms": ["f1", "f2"],
        "workers": ["w1", "w2"],
        "firm_utils": {"f1": {"w1": 2, "w2": 1}, "f2": {"w1": 1, "w2": 2}},
        "worker_utils": {"w1": {"f1": 1, "f2": 2}, "w2": {"f1": 2, "f2": 1}},
        "discounts": {a: 0.5 for a in ("f1", "f2", "w1", "w2")},
    }
    raw.update(changes)
    return raw


MU_F = Matching([("f1", "w1"), ("f2", "w2")])
MU_W = Matching([("f1", "w2"), ("f2", "w1")])


def test_m2_is_valid_and_exact():
    m = validate_market(raw_m2())
    assert m.firms == ("f1", "f2")
    assert m.utility("f1", "w1") == 2
    assert m.utility("w1", "w1") == 0
    assert m.discount("w2") == Fraction(1, 2)


def test_tied_utilities_rejected():
    raw = raw_m2(firm_utils={"f1": {"w1": 2, "w2": 2}, "f2": {"w1": 1, "w2": 2}})
    with pytest.raises(DuplicateUtility):
        validate_market(raw)


@pytest.mark.parametrize("value", [1.0, 0, -0.1, 1.5])
def test_discount_outside_unit_interval_rejected(value):
    raw = raw_m2(discounts={"f1": 0.5, "f2": 0.5, "w1": value, "w2": 0.5})
    with pytest.raises(DiscountOutOfRange):
        validate_market(raw)


def test_zero_utility_for_a_partner_rejected():
    raw = raw_m2(worker_utils={"w1": {"f1": 0, "f2": 2}, "w2": {"f1": 2, "f2": 1}})
    with pytest.raises(ZeroUtility):
        validate_market(raw)


def test_unknown_partner_rejected():
    raw = raw_m2(worker_utils={"w1": {"f1": 1, "f9": 2}, "w2": {"f1": 2, "f2": 1}})
    with pytest.raises(UnknownAgentReference):
        validate_market(raw)


def test_incomplete_table_and_duplicate_agents_rejected():
    with pytest.raises(MissingUtility):
        validate_market(raw_m2(worker_utils={"w1": {"f1": 1}, "w2": {"f1": 2, "f2": 1}}))
    with pytest.raises(DuplicateAgent):
        validate_market(raw_m2(firms=["f1", "f1"]))


def test_float_discounts_become_short_rationals():
    assert as_fraction(0.9) == Fraction(9, 10)
    assert as_fraction("3/7") == Fraction(3, 7)


def test_matching_is_symmetric_and_rejects_double_use():
    assert MU_F.partner("w2") == "f2"
    assert MU_F.partner("f2") == "w2"
    assert Matching.empty().partner("f1") == "f1"
    with pytest.raises(ValueError):
        Matching([("f1", "w1"), ("f2", "w1")])


def test_check_matching_rejects_foreign_agents(m2):
    with pytest.raises(UnknownAgentReference):
        check_matching(m2, Matching([("w1", "f1")]))


def test_individual_rationality(m2):
    assert is_individually_rational(m2, Matching.empty())
    assert is_individually_rational(m2, MU_F)
    m = validate_market(raw_m2(worker_utils={"w1": {"f1": -1, "f2": 2}, "w2": {"f1": 2, "f2": 1}}))
    assert not is_individually_rational(m, Matching([("f1", "w1")]))


def test_blocking_pairs_of_m2(m2):
    assert blocking_pairs(m2, MU_F) == []
    assert blocking_pairs(m2, MU_W) == []
    assert blocking_pairs(m2, Matching.empty()) == [
        ("f1", "w1"),
        ("f1", "w2"),
        ("f2", "w1"),
        ("f2", "w2"),
    ]


def test_stability_of_m2(m2):
    assert is_stable(m2, MU_F)
    assert is_stable(m2, MU_W)
    assert not is_stable(m2, Matching.empty())


def test_active_sets_per_regime(m2):
    one = Matching([("f1", "w1")])
    assert active_sets(m2, Regime.NONE, one) == (frozenset(), frozenset())
    assert active_sets(m2, Regime.FIRM, one) == ({"f1"}, frozenset())
    assert active_sets(m2, Regime.WORKER, one) == (frozenset(), {"w1"})
    assert active_sets(m2, Regime.TWO_SIDED, one) == ({"f1"}, {"w1"})
    assert active_sets(m2, Regime.WORKER, Matching.empty()) == (frozenset(), frozenset())


def test_regime_names_parse():
    assert Regime.parse("firm") is Regime.FIRM
    assert Regime.parse("NoCommitment") is Regime.NONE
    with pytest.raises(ValueError):
        Regime.parse("sometimes")


def test_copies_with_new_discounts_are_validated(m2):
    changed = m2.with_uniform_discount("0.9", "workers")
    assert changed.discount("w1") == Fraction(9, 10)
    assert changed.discount("f1") == Fraction(1, 2)
    assert changed != m2
    with pytest.raises(DiscountOutOfRange):
        m2.with_discounts(w1=1)


@settings(max_examples=60, deadline=None)
@given(markets())
def test_stability_agrees_with_oracle(m):
    for pairs in all_matchings(m):
        assert is_stable(m, Matching(pairs)) == stable(m, pairs)


@settings(max_examples=60, deadline=None)
@given(markets())
def test_stable_implies_rational_and_empty_matching_blocked_by_acceptable_pairs(m):
    for pairs in all_matchings(m):
        mu = Matching(pairs)
        if is_stable(m, mu):
            assert is_individually_rational(m, mu)
    acceptable = [
        (f, w) for f in m.firms for w in m.workers
        if m.firm_utils[f][w] > 0 and m.worker_utils[w][f] > 0
    ]
    assert blocking_pairs(m, Matching.empty()) == acceptable


@settings(max_examples=40, deadline=None)
@given(markets())
def test_adding_a_pair_never_shrinks_inactive_sets(m):
    for pairs in all_matchings(m):
        mu = Matching(pairs)
        for f in m.firms:
            for w in m.workers:
                if mu.is_matched(f) or mu.is_matched(w):
                    continue
                bigger = Matching(set(pairs) | {(f, w)})
                for regime in Regime:
                    small_f, small_w = active_sets(m, regime, mu)
                    big_f, big_w = active_sets(m, regime, bigger)
                    assert small_f <= big_f and small_w <= big_w


@settings(max_examples=80, deadline=None)
@given(markets())
def test_validation_rejects_exactly_the_corrupted_inputs(m):
    raw = {
        "firms": list(m.firms),
        "workers": list(m.workers),
        "firm_utils": {f: dict(m.firm_utils[f]) for f in m.firms},
        "worker_utils": {w: dict(m.worker_utils[w]) for w in m.workers},
        "discounts": {a: m.discount(a) for a in m.agents},
    }
    assert validate_market(raw) == m
    f = m.firms[0]
    if len(m.workers) > 1:
        tied = dict(raw, firm_utils=dict(raw["firm_utils"]))
        row = dict(tied["firm_utils"][f])
        row[m.workers[1]] = row[m.workers[0]]
        tied["firm_utils"][f] = row
        with pytest.raises(DuplicateUtility):
            validate_market(tied)
    zero = dict(raw, firm_utils=dict(raw["firm_utils"]))
    zero["firm_utils"][f] = dict(zero["firm_utils"][f], **{m.workers[0]: 0})
    with pytest.raises(ZeroUtility):
        validate_market(zero)
    late = dict(raw, discounts=dict(raw["discounts"], **{f: 1}))
    with pytest.raises(DiscountOutOfRange):
        validate_market(late)
