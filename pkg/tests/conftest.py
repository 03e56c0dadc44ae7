import random

import pytest
from hypothesis import strategies as st

from dynmatch.algorithms import deferred_acceptance
from dynmatch.instances import generate_market
from dynmatch.market import validate_market


def make_m2(delta="1/2"):
    return validate_market(
        {
            "firms": ["f1", "f2"],
            "workers": ["w1", "w2"],
            "firm_utils": {"f1": {"w1": 2, "w2": 1}, "f2": {"w1": 1, "w2": 2}},
            "worker_utils": {"w1": {"f1": 1, "f2": 2}, "w2": {"f1": 2, "f2": 1}},
            "discounts": {a: delta for a in ("f1", "f2", "w1", "w2")},
        }
    )


def make_m1(delta="1/2"):
    return validate_market(
        {
            "firms": ["f1", "f2"],
            "workers": ["w1", "w2"],
            "firm_utils": {"f1": {"w1": 2, "w2": 1}, "f2": {"w1": 1, "w2": 2}},
            "worker_utils": {"w1": {"f1": 2, "f2": 1}, "w2": {"f1": 1, "f2": 2}},
            "discounts": {a: delta for a in ("f1", "f2", "w1", "w2")},
        }
    )


def corpus(count=200, max_side=4, seed=0):
    """Seeded random markets of varying shape."""
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        s = rng.randrange(2**32)
        out.append(generate_market(s, rng.randint(1, max_side), rng.randint(1, max_side)))
    return out


@st.composite
def markets(draw, max_firms=3, max_workers=3):
    n_f = draw(st.integers(1, max_firms))
    n_w = draw(st.integers(1, max_workers))
    firms = [f"f{i}" for i in range(1, n_f + 1)]
    workers = [f"w{j}" for j in range(1, n_w + 1)]
    values = st.integers(-4, 12).filter(lambda v: v != 0)

    def row(partners):
        vals = draw(st.lists(values, min_size=len(partners), max_size=len(partners), unique=True))
        return dict(zip(partners, vals))

    discount = st.integers(1, 99).map(lambda k: f"{k}/100")
    return validate_market(
        {
            "firms": firms,
            "workers": workers,
            "firm_utils": {f: row(workers) for f in firms},
            "worker_utils": {w: row(firms) for w in workers},
            "discounts": {a: draw(discount) for a in firms + workers},
        }
    )


@pytest.fixture
def m2():
    return make_m2()


@pytest.fixture
def m1():
    return make_m1()


@pytest.fixture
def mu_f(m2):
    return deferred_acceptance(m2, "firms")


@pytest.fixture
def mu_w(m2):
    return deferred_acceptance(m2, "workers")


# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
