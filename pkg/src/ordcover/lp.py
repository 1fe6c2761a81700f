"""Exact covering LP with multiplicities.

    min  sum_p w(p) x_p   s.t.  sum_p x_p p >= b,  x >= 0

Patterns are multisets over the item types with positive demand.  The LP is
solved by a revised simplex on Fractions, started from an artificial basis
(Big-M with M = 2, which no optimum uses because every coverable unit can be
covered at cost <= 1), with the lexicographic ratio test for anti-cycling.
Columns come either from an explicit list (lowest index first) or from a
pricing oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .model import (
    CapacityError,
    CoverSet,
    InfeasibleError,
    Instance,
    InputError,
    _normalize,
)
from .rational import fmt

Pattern = CoverSet
Demand = Mapping[int, int]

BIG_M = Fraction(2)
DEFAULT_PATTERN_LIMIT = 20000


def support(b: Demand) -> int:
    return sum(1 for c in b.values() if c > 0)


def size(b: Demand, s: Mapping[int, Fraction]) -> Fraction:
    return sum((c * s[i] for i, c in b.items() if c), Fraction(0))


@dataclass(frozen=True)
class FractionalSolution:
    weights: tuple[tuple[Pattern, Fraction], ...]
    objective: Fraction
    basic: bool = True
    duals: tuple[tuple[int, Fraction], ...] = ()

    @property
    def patterns(self) -> list[Pattern]:
        return [p for p, _ in self.weights]

    def coverage(self) -> dict[int, Fraction]:
        cov: dict[int, Fraction] = {}
        for p, x in self.weights:
            for i, c in p.elements:
                cov[i] = cov.get(i, Fraction(0)) + x * c
        return cov

    def covers(self, b: Demand) -> bool:
        cov = self.coverage()
        return all(cov.get(i, 0) >= c for i, c in b.items() if c)

    def to_json(self) -> dict:
        return {
            "patterns": [{"p": {str(i): c for i, c in p.elements}, "cost": fmt(p.cost), "weight": fmt(x)}
                         for p, x in self.weights],
            "objective": fmt(self.objective),
            "basic": self.basic,
        }


# --------------------------------------------------------------------------
# simplex core

Column = tuple[object, list[Fraction], Fraction]  # key, dense vector over rows, cost


def _simplex(rhs: Sequence[Fraction], price: Callable[[list[Fraction], set], Column | None]):
    m = len(rhs)
    binv = [[Fraction(int(r == c)) for c in range(m)] for r in range(m)]
    xb = [Fraction(v) for v in rhs]
    basis: list[object] = [("art", r) for r in range(m)]
    cb = [BIG_M] * m
    store: dict[object, tuple[list[Fraction], Fraction]] = {}
    y = [BIG_M] * m
    while True:
        in_basis = set(basis)
        col = None
        for j in range(m):
            if y[j] < 0 and ("sur", j) not in in_basis:
                col = (("sur", j), [Fraction(-int(r == j)) for r in range(m)], Fraction(0))
                break
        if col is None:
            col = price(y, in_basis)
        if col is None:
            break
        key, vec, cost = col
        store[key] = (vec, cost)
        nz = [(c, v) for c, v in enumerate(vec) if v]
        d = [sum((binv[r][c] * v for c, v in nz if binv[r][c]), Fraction(0)) for r in range(m)]
        cand = [r for r in range(m) if d[r] > 0]
        if not cand:
            raise RuntimeError("covering LP reported unbounded")
        # lexicographic minimum ratio
        best = min(xb[r] / d[r] for r in cand)
        cand = [r for r in cand if xb[r] / d[r] == best]
        j = 0
        while len(cand) > 1:
            vals = {r: binv[r][j] / d[r] for r in cand}
            low = min(vals.values())
            cand = [r for r in cand if vals[r] == low]
            j += 1
        r0 = cand[0]
        piv = d[r0]
        row = [v / piv for v in binv[r0]]
        support_cols = [c for c in range(m) if row[c]]
        binv[r0] = row
        xb[r0] = xb[r0] / piv
        for r in range(m):
            if r != r0 and d[r]:
                f = d[r]
                br = binv[r]
                for c in support_cols:
                    br[c] = br[c] - f * row[c]
                xb[r] = xb[r] - f * xb[r0]
        # dual update: y += (reduced cost of the entering column) * new pivot row
        rc = cost - sum((y[c] * v for c, v in nz), Fraction(0))
        for c in support_cols:
            y[c] = y[c] + rc * row[c]
        basis[r0] = key
        cb[r0] = cost
    return basis, xb, y, store


def _finish(rows: list[int], basis, xb, y, store, patterns: Mapping[object, Pattern]) -> FractionalSolution:
    weights = []
    for key, x in zip(basis, xb):
        if isinstance(key, tuple) and key[0] == "art":
            if x > 0:
                raise InfeasibleError(rows[key[1]])
            continue
        if isinstance(key, tuple) and key[0] == "sur":
            continue
        if x > 0:
            weights.append((patterns[key], x))
    weights.sort(key=lambda px: (px[0].elements, px[0].cost))
    obj = sum((p.cost * x for p, x in weights), Fraction(0))
    return FractionalSolution(tuple(weights), obj, True, tuple(zip(rows, y)))


def _rows_of(b: Demand) -> list[int]:
    return sorted(i for i, c in b.items() if c > 0)


def solve_lp(patterns: Sequence[Pattern], b: Demand) -> FractionalSolution:
    """Basic optimal solution over an explicit column list."""
    rows = _rows_of(b)
    if not rows:
        return FractionalSolution((), Fraction(0), True)
    index = {i: r for r, i in enumerate(rows)}
    m = len(rows)
    cols = []
    by_key: dict[object, Pattern] = {}
    for q, p in enumerate(patterns):
        vec = [Fraction(0)] * m
        for i, c in p.elements:
            if i in index:
                vec[index[i]] = Fraction(c)
        if any(vec):
            cols.append((("pat", q), vec, p.cost))
            by_key[("pat", q)] = p
    for i in rows:
        if not any(col[1][index[i]] for col in cols):
            raise InfeasibleError(i)

    def price(y, in_basis):
        for key, vec, cost in cols:
            if key in in_basis:
                continue
            if cost - sum((y[r] * v for r, v in enumerate(vec) if v), Fraction(0)) < 0:
                return key, vec, cost
        return None

    basis, xb, y, store = _simplex([Fraction(b[i]) for i in rows], price)
    return _finish(rows, basis, xb, y, store, by_key)


# --------------------------------------------------------------------------
# pricing oracles


def _generator_pricer(instance: Instance, rows: list[int]):
    order = instance.order
    gens = list(instance.system.sets)
    row_set = set(rows)
    if order.total_order:
        rank = order.rank

    def best_hosts(y: Mapping[int, Fraction]) -> dict[int, tuple[Fraction, int]]:
        """For each item g: the row item below-or-equal g with the largest positive dual."""
        host: dict[int, tuple[Fraction, int]] = {}
        if order.total_order:
            # walk upward from the smallest item; keep running best
            best = None
            seq = order.sequence
            suffix: dict[int, tuple[Fraction, int] | None] = {}
            for i in reversed(seq):
                if i in row_set and y[i] > 0:
                    if best is None or y[i] > best[0] or (y[i] == best[0] and rank[i] < rank[best[1]]):
                        best = (y[i], i)
                suffix[i] = best
            return {g: v for g, v in suffix.items() if v is not None}
        for g in order.ground:
            best = None
            for t in sorted(order.down[g] & row_set):
                if y[t] > 0 and (best is None or y[t] > best[0]):
                    best = (y[t], t)
            if best is not None:
                host[g] = best
        return host

    def oracle(y: Mapping[int, Fraction]):
        host = best_hosts(y)
        best = None
        for G in gens:
            value = Fraction(0)
            counts: dict[int, int] = {}
            for g, c in G.elements:
                h = host.get(g)
                if h is not None:
                    value += h[0] * c
                    counts[h[1]] = counts.get(h[1], 0) + c
            rc = G.cost - value
            if rc < 0 and (best is None or rc < best[0]):
                best = (rc, counts)
        if best is None:
            return None
        counts = best[1]
        ok, cost = instance.member(counts)
        return counts, cost

    return oracle


def _adapter_pricer(instance: Instance, rows: list[int]):
    adapter = instance.adapter
    row_set = set(rows)

    def oracle(y):
        found = adapter.price({i: v for i, v in y.items() if i in row_set and v > 0})
        if found is None:
            return None
        counts, cost = found
        return {i: c for i, c in counts.items() if i in row_set and c}, cost

    return oracle


def pricing_oracle(instance: Instance, rows: list[int]):
    if instance.system.kind == "adapter":
        return _adapter_pricer(instance, rows)
    return _generator_pricer(instance, rows)


def price_pattern(instance: Instance, duals: Mapping[int, Fraction]) -> Pattern | None:
    """Feasible pattern with negative reduced cost ``w(p) - duals . p``, if any."""
    if instance.system.kind != "adapter":
        raise InputError("price_pattern needs an adapter instance")
    adapter = instance.adapter
    found = adapter.price({i: Fraction(v) for i, v in duals.items() if v > 0})
    if found is None:
        return None
    counts, cost = found
    rc = cost - sum((Fraction(duals.get(i, 0)) * c for i, c in counts.items()), Fraction(0))
    if rc >= 0:
        return None
    return CoverSet(_normalize(counts), cost)


def solve_instance(instance: Instance, b: Demand | None = None) -> FractionalSolution:
    """OPT_f(b) by column generation over the instance's feasible patterns."""
    b = instance.demand if b is None else b
    rows = _rows_of(b)
    if not rows:
        return FractionalSolution((), Fraction(0), True)
    oracle = pricing_oracle(instance, rows)
    index = {i: r for r, i in enumerate(rows)}
    m = len(rows)
    by_key: dict[object, Pattern] = {}

    def price(y, in_basis):
        found = oracle(dict(zip(rows, y)))
        if found is None:
            return None
        counts, cost = found
        p = CoverSet(_normalize(counts), cost)
        vec = [Fraction(0)] * m
        for i, c in p.elements:
            vec[index[i]] = Fraction(c)
        key = ("pat", p.elements)
        if key in in_basis:
            return None
        by_key[key] = p
        return key, vec, cost

    basis, xb, y, store = _simplex([Fraction(b[i]) for i in rows], price)
    return _finish(rows, basis, xb, y, store, by_key)


# --------------------------------------------------------------------------
# explicit enumeration


def _keep_maximal(patterns: Iterable[Pattern]) -> list[Pattern]:
    unique: dict[tuple, Pattern] = {}
    for p in patterns:
        old = unique.get(p.elements)
        if old is None or p.cost < old.cost:
            unique[p.elements] = p
    cand = sorted(unique.values(), key=lambda p: (-len(p), p.elements))
    kept: list[Pattern] = []
    for p in cand:
        pc = p.counts
        if any(q.cost <= p.cost and q.elements != p.elements
               and all(q.counts.get(i, 0) >= c for i, c in pc.items()) for q in kept):
            continue
        kept.append(p)
    kept.sort(key=lambda p: p.elements)
    return kept


def _compositions(c: int, hosts: list[int], limit: int):
    """Ways to spread ``c`` identical slots over ``hosts`` (all slots used)."""
    produced = 0

    def rec(pos: int, left: int, acc: list[tuple[int, int]]):
        nonlocal produced
        if pos == len(hosts) - 1:
            produced += 1
            if produced > limit:
                raise CapacityError(f"more than {limit} patterns")
            yield tuple(acc + ([(hosts[pos], left)] if left else []))
            return
        for q in range(left, -1, -1):
            yield from rec(pos + 1, left - q, acc + ([(hosts[pos], q)] if q else []))

    yield from rec(0, c, [])


def enumerate_patterns(instance: Instance, restrict_to: Demand | None = None,
                       limit: int = DEFAULT_PATTERN_LIMIT) -> list[Pattern]:
    """All componentwise-maximal feasible patterns over the demanded types."""
    b = instance.demand if restrict_to is None else restrict_to
    rows = _rows_of(b)
    if not rows:
        return []
    row_set = set(rows)
    order = instance.order
    raw: list[Pattern] = []
    if instance.system.kind == "adapter":
        for counts in instance.adapter.iter_feasible(rows, limit=limit):
            raw.append(CoverSet(_normalize(counts), instance.adapter.cost(counts)))
        return _keep_maximal(raw)
    for G in instance.system.sets:
        choices = []
        for g, c in G.elements:
            hosts = sorted(order.down[g] & row_set)
            if hosts:
                choices.append((hosts, c))
        per_slot = []
        count = 1
        for hosts, c in choices:
            opts = list(_compositions(c, hosts, limit))
            per_slot.append(opts)
            count *= len(opts)
            if count > limit:
                raise CapacityError(f"more than {limit} patterns")
        for pick in itertools.product(*per_slot):
            counts: dict[int, int] = {}
            for part in pick:
                for t, q in part:
                    counts[t] = counts.get(t, 0) + q
            if counts:
                raw.append(CoverSet(_normalize(counts), instance.member(counts)[1]))
        if len(raw) > limit:
            raise CapacityError(f"more than {limit} patterns")
    return _keep_maximal(raw)


# --------------------------------------------------------------------------
# floors and residuals


def take_floors(x: FractionalSolution) -> tuple[list[tuple[Pattern, int]], list[tuple[Pattern, Fraction]]]:
    bought = []
    rest = []
    for p, w in x.weights:
        f = w.numerator // w.denominator
        if f:
            bought.append((p, f))
        rest.append((p, w - f))
    return bought, rest


def residual(b: Demand, x: FractionalSolution) -> dict[int, int]:
    covered: dict[int, int] = {}
    for p, f in take_floors(x)[0]:
        for i, c in p.elements:
            covered[i] = covered.get(i, 0) + f * c
    return {i: max(0, c - covered.get(i, 0)) for i, c in b.items()}
