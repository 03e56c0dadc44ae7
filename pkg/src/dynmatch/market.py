"""Market instances, matchings, commitment regimes and static stability predicates.

Utilities and discount factors are held as :class:`fractions.Fraction` so that
stability checks and payoff comparisons never depend on rounding.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping

from .errors import (
    DiscountOutOfRange,
    DuplicateAgent,
    DuplicateUtility,
    MissingUtility,
    UnknownAgentReference,
    ZeroUtility,
)


def as_fraction(value) -> Fraction:
    """Convert ints, decimal strings, ``p/q`` strings, floats and Decimals to a Fraction.

    Floats go through their shortest repr, so ``0.9`` becomes ``9/10`` rather
    than the nearest binary double.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, Decimal):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational number")


class Regime(enum.Enum):
    """Which side of the market is bound by commitment once matched."""

    TWO_SIDED = "two-sided"
    NONE = "none"
    FIRM = "firm"
    WORKER = "worker"

    @classmethod
    def parse(cls, name: str) -> "Regime":
        aliases = {
            "two-sided": cls.TWO_SIDED,
            "twosided": cls.TWO_SIDED,
            "both": cls.TWO_SIDED,
            "none": cls.NONE,
            "no-commitment": cls.NONE,
            "nocommitment": cls.NONE,
            "firm": cls.FIRM,
            "firm-only": cls.FIRM,
            "firmonly": cls.FIRM,
            "worker": cls.WORKER,
            "worker-only": cls.WORKER,
            "workeronly": cls.WORKER,
        }
        try:
            return aliases[name.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown regime {name!r}") from None

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Matching:
    """A partial one-to-one assignment of firms to workers.

    Only the set of pairs takes part in equality and hashing.  ``partner``
    returns the agent itself for anyone who is unmatched.
    """

    pairs: frozenset = frozenset()
    _partner: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        pairs = frozenset((str(f), str(w)) for f, w in self.pairs)
        partner = {}
        for f, w in pairs:
            if f == w:
                raise ValueError(f"agent {f!r} cannot be matched to itself")
            if f in partner or w in partner:
                taken = f if f in partner else w
                raise ValueError(f"agent {taken!r} appears in more than one pair")
            partner[f] = w
            partner[w] = f
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "_partner", partner)

    @classmethod
    def empty(cls) -> "Matching":
        return cls(frozenset())

    def partner(self, agent: str) -> str:
        return self._partner.get(agent, agent)

    def is_matched(self, agent: str) -> bool:
        return agent in self._partner

    @property
    def matched_agents(self) -> frozenset:
        return frozenset(self._partner)

    def sorted_pairs(self) -> list:
        return sorted(self.pairs)

    def with_pair_removed(self, agent: str) -> "Matching":
        return Matching(p for p in self.pairs if agent not in p)

    def __iter__(self):
        return iter(self.sorted_pairs())

    def __len__(self):
        return len(self.pairs)

    def __str__(self):
        if not self.pairs:
            return "{}"
        return "{" + ", ".join(f"({f},{w})" for f, w in self.sorted_pairs()) + "}"


@dataclass(frozen=True, eq=False)
class MarketInstance:
    """Firms, workers, their utilities and discount factors.

    Build instances through :func:`validate_market`; the constructor does not
    re-check the model assumptions.
    """

    firms: tuple
    workers: tuple
    firm_utils: Mapping
    worker_utils: Mapping
    firm_discounts: Mapping
    worker_discounts: Mapping

    def is_firm(self, agent: str) -> bool:
        return agent in self.firm_utils

    def is_worker(self, agent: str) -> bool:
        return agent in self.worker_utils

    @property
    def agents(self) -> tuple:
        return self.firms + self.workers

    def utility(self, agent: str, partner: str) -> Fraction:
        if agent == partner:
            return Fraction(0)
        table = self.firm_utils.get(agent)
        if table is None:
            table = self.worker_utils[agent]
        return table[partner]

    def discount(self, agent: str) -> Fraction:
        if agent in self.firm_discounts:
            return self.firm_discounts[agent]
        return self.worker_discounts[agent]

    def partners_of(self, agent: str) -> tuple:
        return self.workers if self.is_firm(agent) else self.firms

    def with_discounts(self, **overrides) -> "MarketInstance":
        """Return a copy with some discount factors replaced.

        Keyword names are agent identifiers; use :meth:`with_discount_map` for
        identifiers that are not valid Python names.
        """
        return self.with_discount_map(overrides)

    def with_discount_map(self, overrides: Mapping) -> "MarketInstance":
        firm_d = dict(self.firm_discounts)
        worker_d = dict(self.worker_discounts)
        for agent, value in overrides.items():
            value = _check_discount(agent, value)
            if agent in firm_d:
                firm_d[agent] = value
            elif agent in worker_d:
                worker_d[agent] = value
            else:
                raise UnknownAgentReference(f"unknown agent {agent!r}")
        return MarketInstance(
            self.firms,
            self.workers,
            self.firm_utils,
            self.worker_utils,
            MappingProxyType(firm_d),
            MappingProxyType(worker_d),
        )

    def with_uniform_discount(self, value, side: str = "all") -> "MarketInstance":
        if side == "firms":
            agents = self.firms
        elif side == "workers":
            agents = self.workers
        else:
            agents = self.agents
        return self.with_discount_map({a: value for a in agents})

    def __eq__(self, other):
        if not isinstance(other, MarketInstance):
            return NotImplemented
        return (
            self.firms == other.firms
            and self.workers == other.workers
            and _plain(self.firm_utils) == _plain(other.firm_utils)
            and _plain(self.worker_utils) == _plain(other.worker_utils)
            and dict(self.firm_discounts) == dict(other.firm_discounts)
            and dict(self.worker_discounts) == dict(other.worker_discounts)
        )

    __hash__ = None


def _plain(tables):
    return {k: dict(v) for k, v in tables.items()}


def _check_discount(agent, value, line=None) -> Fraction:
    value = as_fraction(value)
    if not 0 < value < 1:
        raise DiscountOutOfRange(
            f"discount factor of {agent!r} must lie in (0, 1), got {value}", line
        )
    return value


def validate_market(raw: Mapping) -> MarketInstance:
    """Check candidate market data and return an immutable :class:`MarketInstance`.

    ``raw`` holds ``firms``, ``workers``, ``firm_utils``, ``worker_utils`` and
    the discount factors, either as ``firm_discounts``/``worker_discounts`` or
    as a single ``discounts`` map.  Every agent must rate every agent on the
    other side with a distinct nonzero value.
    """
    firms = [str(f) for f in raw["firms"]]
    workers = [str(w) for w in raw["workers"]]
    for group, name in ((firms, "firm"), (workers, "worker")):
        if len(set(group)) != len(group):
            raise DuplicateAgent(f"duplicate {name} identifier")
    overlap = set(firms) & set(workers)
    if overlap:
        raise DuplicateAgent(f"identifiers used on both sides: {sorted(overlap)}")
    firms = tuple(sorted(firms))
    workers = tuple(sorted(workers))

    firm_utils = _check_tables(raw.get("firm_utils", {}), firms, workers, "firm")
    worker_utils = _check_tables(raw.get("worker_utils", {}), workers, firms, "worker")

    merged = dict(raw.get("discounts", {}))
    merged.update(raw.get("firm_discounts", {}))
    merged.update(raw.get("worker_discounts", {}))
    for agent in merged:
        if agent not in firms and agent not in workers:
            raise UnknownAgentReference(f"discount given for unknown agent {agent!r}")
    firm_d, worker_d = {}, {}
    for agents, target in ((firms, firm_d), (workers, worker_d)):
        for agent in agents:
            if agent not in merged:
                raise DiscountOutOfRange(f"no discount factor for {agent!r}")
            target[agent] = _check_discount(agent, merged[agent])

    return MarketInstance(
        firms,
        workers,
        MappingProxyType(firm_utils),
        MappingProxyType(worker_utils),
        MappingProxyType(firm_d),
        MappingProxyType(worker_d),
    )


def _check_tables(tables, owners, partners, side):
    known = set(owners)
    for owner in tables:
        if owner not in known:
            raise UnknownAgentReference(f"utilities given for unknown {side} {owner!r}")
    out = {}
    for owner in owners:
        given = tables.get(owner, {})
        row = {}
        for partner, value in given.items():
            if partner == owner:
                if as_fraction(value) != 0:
                    raise ZeroUtility(f"u_{owner}({owner}) must be 0")
                continue
            if partner not in partners:
                raise UnknownAgentReference(
                    f"{owner!r} rates unknown agent {partner!r}"
                )
            value = as_fraction(value)
            if value == 0:
                raise ZeroUtility(f"u_{owner}({partner}) is 0; only being single may be worth 0")
            row[partner] = value
        missing = [p for p in partners if p not in row]
        if missing:
            raise MissingUtility(f"{owner!r} gives no utility for {missing}")
        if len(set(row.values())) != len(row):
            raise DuplicateUtility(f"utilities of {owner!r} are not strict")
        out[owner] = MappingProxyType(row)
    return out


def check_matching(m: MarketInstance, mu: Matching) -> None:
    """Raise :class:`UnknownAgentReference` unless every pair is firm-worker in ``m``."""
    for f, w in mu.pairs:
        if f not in m.firm_utils:
            raise UnknownAgentReference(f"{f!r} is not a firm of this market")
        if w not in m.worker_utils:
            raise UnknownAgentReference(f"{w!r} is not a worker of this market")


def is_individually_rational(m: MarketInstance, mu: Matching) -> bool:
    for f, w in mu.pairs:
        if m.utility(f, w) < 0 or m.utility(w, f) < 0:
            return False
    return True


def blocking_pairs(m: MarketInstance, mu: Matching) -> list:
    """All pairs ``(f, w)`` who strictly prefer each other to their partners under ``mu``."""
    current = {a: m.utility(a, mu.partner(a)) for a in m.agents}
    out = []
    for f in m.firms:
        uf = m.firm_utils[f]
        for w in m.workers:
            if uf[w] > current[f] and m.worker_utils[w][f] > current[w]:
                out.append((f, w))
    return out


def is_stable(m: MarketInstance, mu: Matching) -> bool:
    if not is_individually_rational(m, mu):
        return False
    current = {a: m.utility(a, mu.partner(a)) for a in m.agents}
    for f in m.firms:
        uf = m.firm_utils[f]
        cf = current[f]
        for w in m.workers:
            if uf[w] > cf and m.worker_utils[w][f] > current[w]:
                return False
    return True


def active_sets(m: MarketInstance, regime: Regime, prev: Matching):
    """Return ``(inactive_firms, inactive_workers)`` for the period after ``prev``."""
    matched_firms = frozenset(f for f, _ in prev.pairs)
    matched_workers = frozenset(w for _, w in prev.pairs)
    if regime is Regime.TWO_SIDED:
        return matched_firms, matched_workers
    if regime is Regime.FIRM:
        return matched_firms, frozenset()
    if regime is Regime.WORKER:
        return frozenset(), matched_workers
    return frozenset(), frozenset()
