import math
from fractions import Fraction

import pytest

from conftest import corpus
from dynmatch.algorithms import deferred_acceptance, enumerate_stable_set
from dynmatch.errors import NoImprovingOffer, NotStable, WorkerUnmatched
from dynmatch.market import Matching, is_stable, validate_market
from dynmatch.restabilization import (
    firm_threshold,
    restabilize,
    root_of_ratio,
    worker_threshold,
)
from dynmatch.strategies import STRICT_STATIONARY

MU_F = Matching([("f1", "w1"), ("f2", "w2")])
MU_W = Matching([("f1", "w2"), ("f2", "w1")])


def test_resignation_chain_on_m2(m2):
    out = restabilize(m2, MU_F, "w1")
    assert out.final == MU_W
    assert out.final.partner("w1") == "f2"
    assert out.periods_waited == 2
    assert out.event_log == (
        (1, "f1", "w1", False),
        (1, "f2", "w2", True),
        (2, "f1", "w2", True),
        (3, "f2", "w1", True),
    )
    assert out.serialize().splitlines()[:4] == [
        "worker w1",
        "initial | (f1,w1) (f2,w2)",
        "final | (f1,w2) (f2,w1)",
        "k 2",
    ]


def test_symmetric_worker_waits_as_long(m2):
    assert restabilize(m2, MU_F, "w2").periods_waited == 2


def test_no_room_to_improve(m2, m1):
    with pytest.raises(NoImprovingOffer):
        restabilize(m2, MU_W, "w1")
    with pytest.raises(NoImprovingOffer):
        restabilize(m1, MU_F, "w1")


def test_preconditions(m2):
    with pytest.raises(NotStable):
        restabilize(m2, Matching([("f1", "w1")]), "w1")
    lonely = validate_market(
        {
            "firms": ["f1"],
            "workers": ["w1", "w2"],
            "firm_utils": {"f1": {"w1": 2, "w2": 1}},
            "worker_utils": {"w1": {"f1": 1}, "w2": {"f1": 1}},
            "discounts": {"f1": 0.5, "w1": 0.5, "w2": 0.5},
        }
    )
    with pytest.raises(WorkerUnmatched):
        restabilize(lonely, Matching([("f1", "w1")]), "w2")


def test_thresholds_on_m2(m2):
    assert worker_threshold(m2, MU_F, "w1") == pytest.approx(math.sqrt(0.5), abs=1e-15)
    assert worker_threshold(m2, MU_F, "w2") == pytest.approx(math.sqrt(0.5), abs=1e-15)
    assert worker_threshold(m2, MU_W, "w1") == 1.0
    assert firm_threshold(m2, MU_W, "f1") == Fraction(1, 2)
    assert firm_threshold(m2, MU_W, "f2") == Fraction(1, 2)
    assert firm_threshold(m2, MU_F, "f1") == 1


def test_unique_stable_matching_has_unit_firm_thresholds(m1):
    assert firm_threshold(m1, MU_F, "f2") == 1


def test_root_is_precise():
    assert root_of_ratio(Fraction(1, 2), 2) == math.sqrt(0.5)
    assert root_of_ratio(Fraction(1, 8), 3) == 0.5
    assert root_of_ratio(Fraction(1, 3), 1) == 1 / 3


def test_strict_stationary_mode_reaches_the_same_outcome_on_m2(m2):
    out = restabilize(m2, MU_F, "w1", mode=STRICT_STATIONARY)
    assert out.final == MU_W and out.periods_waited == 2


def test_restabilization_postconditions_on_corpus():
    runs = 0
    for m in corpus(200, max_side=5, seed=21):
        report = enumerate_stable_set(m)
        mu_w = report.worker_optimal
        for mu in report.stable:
            for w in m.workers:
                if not mu.is_matched(w):
                    continue
                improvable = m.utility(w, mu_w.partner(w)) > m.utility(w, mu.partner(w))
                try:
                    out = restabilize(m, mu, w)
                except NoImprovingOffer:
                    assert not improvable
                    assert worker_threshold(m, mu, w) == 1.0
                    continue
                runs += 1
                assert improvable
                assert is_stable(m, out.final) and out.final in report.stable
                assert m.utility(w, out.final.partner(w)) > m.utility(w, mu.partner(w))
                assert 1 <= out.periods_waited <= 2 * len(m.firms) * len(m.workers)
                assert 0 < worker_threshold(m, mu, w) < 1
    assert runs >= 10


def test_threshold_ranges_on_corpus():
    for m in corpus(100, max_side=4, seed=22):
        report = enumerate_stable_set(m)
        mu_f = deferred_acceptance(m, "firms")
        for mu in report.stable:
            for f in m.firms:
                assert 0 < firm_threshold(m, mu, f, mu_f) <= 1
            if mu == report.worker_optimal:
                assert all(worker_threshold(m, mu, w) == 1.0 for w in m.workers)
            if mu == report.firm_optimal:
                assert all(firm_threshold(m, mu, f) == 1 for f in m.firms)


def test_longer_wait_means_higher_threshold():
    ratio = Fraction(1, 3)
    roots = [root_of_ratio(ratio, k) for k in range(1, 8)]
    assert roots == sorted(roots) and len(set(roots)) == len(roots)
