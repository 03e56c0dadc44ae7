"""Reference computations written independently of the library internals.

They favour obviousness over speed and touch only the public market data
(agent tuples, utility tables, discount factors).
"""
from fractions import Fraction
from itertools import combinations, permutations


def all_matchings(m):
    """Every partial matching as a frozenset of pairs, via subsets and permutations."""
    out = set()
    for k in range(min(len(m.firms), len(m.workers)) + 1):
        for fs in combinations(m.firms, k):
            for ws in permutations(m.workers, k):
                out.add(frozenset(zip(fs, ws)))
    return out


def partner_map(pairs):
    p = {}
    for f, w in pairs:
        p[f] = w
        p[w] = f
    return p


def util(m, agent, pairs):
    p = partner_map(pairs)
    if agent not in p:
        return 0
    table = m.firm_utils[agent] if agent in m.firm_utils else m.worker_utils[agent]
    return table[p[agent]]


def stable(m, pairs):
    for f, w in pairs:
        if m.firm_utils[f][w] < 0 or m.worker_utils[w][f] < 0:
            return False
    for f in m.firms:
        for w in m.workers:
            if m.firm_utils[f][w] > util(m, f, pairs) and m.worker_utils[w][f] > util(m, w, pairs):
                return False
    return True


def stable_set(m):
    return {pairs for pairs in all_matchings(m) if stable(m, pairs)}


def side_optimum(m, side):
    """The stable matching every agent of ``side`` weakly prefers to all others."""
    agents = m.firms if side == "firms" else m.workers
    candidates = stable_set(m)
    for c in candidates:
        if all(util(m, a, c) >= util(m, a, o) for o in candidates for a in agents):
            return c
    return None


def truncated_payoff(utilities_by_period, delta, periods):
    """Plain sum of the first ``periods`` discounted utilities."""
    total = Fraction(0)
    for t in range(periods):
        total += Fraction(delta) ** t * utilities_by_period(t + 1)
    return total
