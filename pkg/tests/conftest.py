"""Independent brute-force oracles shared by the tests.

None of these call the solver code they are used to check: covering is
tested by positional comparison of sorted copies (total orders) or by a
tiny recursive matcher, and LP optima by enumerating bases with sympy.
"""

import itertools
import random
from fractions import Fraction

import pytest
import sympy

from ordcover.model import CoverSet, Instance, OrderRelation, SetSystem
from ordcover.instances import random_instance


def copies_desc(counts, order):
    """Multiset as a list sorted largest first (total order)."""
    rank = {x: r for r, x in enumerate(order.sequence)}
    out = [i for i, c in counts.items() for _ in range(c)]
    return sorted(out, key=lambda i: rank[i])


def total_dominates(big, small, order):
    """Positional comparison: k-th largest of big is >= k-th largest of small."""
    rank = {x: r for r, x in enumerate(order.sequence)}
    a = copies_desc(big, order)
    b = copies_desc(small, order)
    if len(b) > len(a):
        return False
    return all(rank[x] <= rank[y] for x, y in zip(a, b))


def match_dominates(big, small, order):
    """Injective slot map by plain backtracking; for partial orders."""
    slots = [i for i, c in big.items() for _ in range(c)]
    need = [i for i, c in small.items() for _ in range(c)]
    used = [False] * len(slots)

    def rec(q):
        if q == len(need):
            return True
        for s, g in enumerate(slots):
            if not used[s] and (g == need[q] or (need[q], g) in order.pairs):
                used[s] = True
                if rec(q + 1):
                    return True
                used[s] = False
        return False

    return rec(0)


def brute_member(inst, counts):
    """(feasible, cost) with the cheapest listed dominator."""
    counts = {i: c for i, c in counts.items() if c}
    dom = total_dominates if inst.order.total_order else match_dominates
    costs = [G.cost for G in inst.system.sets if dom(G.counts, counts, inst.order)]
    if not costs:
        return (True, Fraction(0)) if not counts else (False, None)
    return True, min(costs)


def pooled(sets):
    out = {}
    for S in sets:
        for i, c in S.elements:
            out[i] = out.get(i, 0) + c
    return out


def brute_covers(inst, sets, demand=None):
    demand = inst.demand if demand is None else demand
    demand = {i: c for i, c in demand.items() if c}
    dom = total_dominates if inst.order.total_order else match_dominates
    return dom(pooled(sets), demand, inst.order)


def brute_opt(inst, demand=None, max_sets=None):
    """Cheapest multiset of listed sets whose slots host the demand."""
    demand = inst.demand if demand is None else demand
    need = sum(demand.values())
    if need == 0:
        return Fraction(0)
    gens = list(inst.system.sets)
    cmin = min(G.cost for G in gens)
    max_sets = need if max_sets is None else max_sets
    best = None
    for r in range(1, max_sets + 1):
        if best is not None and cmin * r >= best:
            break
        for pick in itertools.combinations_with_replacement(range(len(gens)), r):
            cost = sum((gens[q].cost for q in pick), Fraction(0))
            if best is not None and cost >= best:
                continue
            if brute_covers(inst, [gens[q] for q in pick], demand):
                best = cost
    return best


def vertex_lp(columns, rhs):
    """min c.x s.t. A x >= rhs, x >= 0 by enumerating all bases (sympy rationals).

    ``columns`` are (vector, cost); surplus columns are added here.
    """
    m = len(rhs)
    cols = [(list(v), c) for v, c in columns]
    cols += [([-int(r == j) for r in range(m)], 0) for j in range(m)]
    b = sympy.Matrix([sympy.Rational(int(x)) for x in rhs])
    best = None
    for basis in itertools.combinations(range(len(cols)), m):
        B = sympy.Matrix([[cols[q][0][r] for q in basis] for r in range(m)])
        if B.det() == 0:
            continue
        x = B.LUsolve(b)
        if any(v < 0 for v in x):
            continue
        val = sum(sympy.Rational(cols[q][1].numerator, cols[q][1].denominator) * x[t]
                  if isinstance(cols[q][1], Fraction) else cols[q][1] * x[t]
                  for t, q in enumerate(basis))
        if best is None or val < best:
            best = val
    return None if best is None else Fraction(int(best.p), int(best.q))


def small_instance(seed, n_max=6, k_max=3, mult_max=2, unit=None):
    rng = random.Random(seed)
    n = rng.randint(1, n_max)
    k = rng.randint(1, k_max)
    return random_instance(rng, n, k, sets=rng.randint(1, 4), max_mult=mult_max,
                           unit_cost=(rng.random() < 0.5) if unit is None else unit)


def antichain_instance(sets, mult):
    ids = sorted(mult)
    order = OrderRelation.from_pairs(ids, [])
    gens = tuple(CoverSet.of(S, 1) for S in sets)
    return Instance(tuple((i, mult[i]) for i in ids), order, SetSystem("generators", gens))


@pytest.fixture
def rng():
    return random.Random(12345)


def brute_sizes(inst):
    """min w(S)/|S| over member multisets drawn from each up-set."""
    kmax = max(len(G) for G in inst.system.sets)
    out = {}
    for i in inst.ids:
        up = sorted(inst.order.up[i])
        best = None
        for r in range(1, kmax + 1):
            for pick in itertools.combinations_with_replacement(up, r):
                S = {}
                for x in pick:
                    S[x] = S.get(x, 0) + 1
                ok, w = brute_member(inst, S)
                if ok and (best is None or w / r < best):
                    best = w / r
        out[i] = best
    return out


def brute_pattern_cover(b, patterns):
    """Cheapest multiplicity vector over (vector, cost) patterns covering ``b`` coordinatewise."""
    b = list(b)
    useful = [(v, w) for v, w in patterns if any(v)]
    caps = [max(-(-x // y) for x, y in zip(b, v) if y) if any(y and x for x, y in zip(b, v)) else 0
            for v, _ in useful]
    best = None

    def rec(q, left, cost):
        nonlocal best
        if best is not None and cost >= best:
            return
        if not any(x > 0 for x in left):
            best = cost
            return
        if q == len(useful):
            return
        v, w = useful[q]
        for t in range(caps[q], -1, -1):
            rec(q + 1, [x - t * y for x, y in zip(left, v)], cost + t * w)

    rec(0, b, Fraction(0))
    return best
