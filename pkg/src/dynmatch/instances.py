"""Instance files, matching literals and seeded random markets.

An instance file is a sequence of bracketed sections::

    # comments run to the end of the line
    [firms]
    f1
    f2
    [workers]
    w1
    w2
    [firm_utils]
    f1 w1 2
    f1 w2 1/2
    [worker_utils]
    w1 f1 0.75
    [discounts]
    f1 1/2
    w1 0.9

Utilities and discounts accept integers, decimals and ``p/q`` rationals.  A
pair left out of a utility section is unacceptable: it gets a negative value
below everything listed for that agent, distinct per omitted partner.
"""
from __future__ import annotations

import random
from fractions import Fraction

from .algorithms import deferred_acceptance
from .errors import DiscountOutOfRange, MarketError, ParseError, UnknownAgentReference
from .market import Matching, MarketInstance, as_fraction, check_matching, validate_market

SECTIONS = ("firms", "workers", "firm_utils", "worker_utils", "discounts")

UTILITY_RANGE = (-3, 12)
DISCOUNT_STEPS = range(6, 95)  # discount factors k/100, inside (0.05, 0.95)
MAX_GENERATED_SIDE = 7


def _number(token, line, column):
    try:
        return as_fraction(token)
    except (ValueError, ZeroDivisionError):
        raise ParseError(line, column, f"{token!r} is not a number") from None


def _tokens(text):
    """Yield ``(line number, [(column, token), ...])`` for each non-blank line."""
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        tokens = []
        pos = 0
        for piece in content.split():
            pos = content.index(piece, pos)
            tokens.append((pos + 1, piece))
            pos += len(piece)
        if tokens:
            yield number, tokens


def parse_instance(text: str) -> MarketInstance:
    """Parse an instance file into a validated market.

    Raises :class:`ParseError` with line and column for malformed text, and the
    market validation errors (tagged with a line where one applies) otherwise.
    """
    section = None
    seen_sections = set()
    agents = {"firms": [], "workers": []}
    agent_lines = {}
    utils = {"firm_utils": {}, "worker_utils": {}}
    util_lines = {}
    discounts = {}
    discount_lines = {}

    for line, tokens in _tokens(text):
        col, first = tokens[0]
        if first.startswith("["):
            if len(tokens) != 1 or not first.endswith("]"):
                raise ParseError(line, col, "malformed section header")
            name = first[1:-1].strip().lower()
            if name not in SECTIONS:
                raise ParseError(line, col, f"unknown section [{name}]")
            if name in seen_sections:
                raise ParseError(line, col, f"section [{name}] appears twice")
            seen_sections.add(name)
            section = name
            continue
        if section is None:
            raise ParseError(line, col, "content before the first section header")

        if section in ("firms", "workers"):
            if len(tokens) != 1:
                raise ParseError(line, tokens[1][0], "expected one identifier per line")
            if first in agent_lines:
                raise ParseError(line, col, f"duplicate-entry: agent {first!r} already declared")
            agents[section].append(first)
            agent_lines[first] = line
        elif section in utils:
            if len(tokens) != 3:
                raise ParseError(line, col, "expected 'agent partner value'")
            (_, owner), (_, partner), (vcol, value) = tokens
            key = (owner, partner)
            if key in util_lines:
                raise ParseError(
                    line, col, f"duplicate-entry: {owner} {partner} already set on line {util_lines[key]}"
                )
            utils[section].setdefault(owner, {})[partner] = _number(value, line, vcol)
            util_lines[key] = line
        else:
            if len(tokens) != 2:
                raise ParseError(line, col, "expected 'agent value'")
            (_, agent), (vcol, value) = tokens
            if agent in discount_lines:
                raise ParseError(
                    line, col, f"duplicate-entry: discount of {agent} already set on line {discount_lines[agent]}"
                )
            discounts[agent] = _number(value, line, vcol)
            discount_lines[agent] = line

    for name in ("firms", "workers"):
        if not agents[name]:
            raise ParseError(0, 0, f"section [{name}] is missing or empty")

    firm_set, worker_set = set(agents["firms"]), set(agents["workers"])
    for agent, value in discounts.items():
        line = discount_lines[agent]
        if agent not in firm_set and agent not in worker_set:
            raise UnknownAgentReference(f"discount given for unknown agent {agent!r}", line)
        if not 0 < value < 1:
            raise DiscountOutOfRange(
                f"discount factor of {agent!r} must lie in (0, 1), got {value}", line
            )
    for section, owners, partners in (
        ("firm_utils", firm_set, worker_set),
        ("worker_utils", worker_set, firm_set),
    ):
        for owner, row in utils[section].items():
            for partner in row:
                if owner not in owners or partner not in partners:
                    raise UnknownAgentReference(
                        f"[{section}] refers to {owner} {partner}", util_lines[(owner, partner)]
                    )

    firm_utils = _fill_unacceptable(utils["firm_utils"], agents["firms"], agents["workers"])
    worker_utils = _fill_unacceptable(utils["worker_utils"], agents["workers"], agents["firms"])
    try:
        return validate_market(
            {
                "firms": agents["firms"],
                "workers": agents["workers"],
                "firm_utils": firm_utils,
                "worker_utils": worker_utils,
                "discounts": discounts,
            }
        )
    except MarketError as exc:
        if exc.line is None:
            exc.line = _blame(exc, util_lines, discount_lines, agent_lines)
        raise


def _blame(exc, util_lines, discount_lines, agent_lines):
    """Best-effort line for a validation error raised without one."""
    message = str(exc)
    for (owner, _), line in sorted(util_lines.items(), key=lambda kv: kv[1]):
        if repr(owner) in message or f"u_{owner}(" in message:
            return line
    for agent, line in agent_lines.items():
        if repr(agent) in message:
            return line
    return None


def _fill_unacceptable(given, owners, partners):
    out = {}
    for owner in owners:
        row = dict(given.get(owner, {}))
        floor = min([v for v in row.values() if v < 0], default=Fraction(0))
        for partner in sorted(partners):
            if partner not in row:
                floor -= 1
                row[partner] = floor
        out[owner] = row
    return out


def _format_number(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def serialize_instance(m: MarketInstance) -> str:
    """Write ``m`` in the instance format; every utility is listed explicitly."""
    lines = ["[firms]", *m.firms, "", "[workers]", *m.workers, "", "[firm_utils]"]
    for f in m.firms:
        lines.extend(f"{f} {w} {_format_number(m.firm_utils[f][w])}" for w in m.workers)
    lines += ["", "[worker_utils]"]
    for w in m.workers:
        lines.extend(f"{w} {f} {_format_number(m.worker_utils[w][f])}" for f in m.firms)
    lines += ["", "[discounts]"]
    lines.extend(f"{a} {_format_number(m.discount(a))}" for a in m.agents)
    return "\n".join(lines) + "\n"


def generate_market(seed: int, n_firms: int, n_workers: int) -> MarketInstance:
    """A random valid market, fully determined by ``seed``.

    Each agent rates the other side with distinct nonzero integers from
    [-3, 12], so roughly four in five partners are acceptable.  Discount
    factors are drawn from the grid k/100 with 6 <= k <= 94.
    """
    for n in (n_firms, n_workers):
        if not 1 <= n <= MAX_GENERATED_SIDE:
            raise ValueError(f"market sides must have between 1 and {MAX_GENERATED_SIDE} agents")
    rng = random.Random(seed)
    firms = [f"f{i}" for i in range(1, n_firms + 1)]
    workers = [f"w{j}" for j in range(1, n_workers + 1)]
    values = [v for v in range(UTILITY_RANGE[0], UTILITY_RANGE[1] + 1) if v != 0]

    def table(owners, partners):
        return {o: dict(zip(partners, rng.sample(values, len(partners)))) for o in owners}

    firm_utils = table(firms, workers)
    worker_utils = table(workers, firms)
    discounts = {a: Fraction(rng.choice(DISCOUNT_STEPS), 100) for a in firms + workers}
    return validate_market(
        {
            "firms": firms,
            "workers": workers,
            "firm_utils": firm_utils,
            "worker_utils": worker_utils,
            "discounts": discounts,
        }
    )


def parse_matching(m: MarketInstance, literal: str) -> Matching:
    """Read a matching literal.

    ``firmOpt`` and ``workerOpt`` name the side-optimal stable matchings,
    ``empty`` the matching with no pairs, and anything else is a list of
    ``firm:worker`` pairs separated by commas.
    """
    text = literal.strip()
    key = text.lower()
    if key in ("firmopt", "firm-optimal", "muf"):
        return deferred_acceptance(m, "firms")
    if key in ("workeropt", "worker-optimal", "muw"):
        return deferred_acceptance(m, "workers")
    if key in ("empty", "-", "{}", ""):
        return Matching.empty()
    pairs = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.replace("(", "").replace(")", "").split(":")
        if len(parts) != 2:
            raise ValueError(f"bad pair {chunk!r}; expected firm:worker")
        pairs.append((parts[0].strip(), parts[1].strip()))
    mu = Matching(pairs)
    check_matching(m, mu)
    return mu
