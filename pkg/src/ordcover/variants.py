"""Bin-packing variants as ordered-replacement set systems.

Each adapter supplies a feasibility predicate, a cost rule, the replacement
order, pseudo sizes and a First-Fit chain cover.  Pricing over dual values
is an unbounded knapsack solved on the common denominator of the sizes.
"""

from __future__ import annotations

import math
from fractions import Fraction
from math import lcm
from typing import Iterable, Mapping, Sequence

from .approx import first_fit
from .model import Adapter, CoverSet, InputError, Instance, OrderRelation, SetSystem, _normalize
from .rational import fmt, to_fraction

DP_DENOMINATOR_LIMIT = 100_000


def _fractions(values: Iterable, name: str, lo=0, hi=1, lo_open=True) -> list[Fraction]:
    out = []
    for q, v in enumerate(values):
        v = to_fraction(v)
        if (v <= lo if lo_open else v < lo) or v > hi:
            bound = "(" if lo_open else "["
            raise InputError(f"{name}[{q}] = {v} outside {bound}{lo}, {hi}]")
        out.append(v)
    return out


def _dp_by_count(items: Sequence[tuple[int, Fraction, Fraction]], capacity: Fraction, kmax: int | None):
    """Best ``(value, counts)`` per cardinality for an unbounded knapsack.

    ``items`` are ``(id, size, value)`` with positive sizes.  Returns
    ``None`` when the common denominator is too large for a table.
    """
    if not items:
        return [(Fraction(0), {})]
    den = lcm(capacity.denominator, *(s.denominator for _, s, _ in items))
    if den > DP_DENOMINATOR_LIMIT:
        return None
    cap = int(capacity * den)
    weights = [int(s * den) for _, s, _ in items]
    top = cap // min(weights)
    if kmax is not None:
        top = min(top, kmax)
    NEG = None
    # layer[c][w]: best value of exactly c items with total weight w
    layers = [[NEG] * (cap + 1) for _ in range(top + 1)]
    back = [[None] * (cap + 1) for _ in range(top + 1)]
    layers[0][0] = Fraction(0)
    for c in range(top):
        cur, nxt, bk = layers[c], layers[c + 1], back[c + 1]
        for w in range(cap + 1):
            v = cur[w]
            if v is None:
                continue
            for q, wt in enumerate(weights):
                w2 = w + wt
                if w2 > cap:
                    continue
                v2 = v + items[q][2]
                if nxt[w2] is None or v2 > nxt[w2]:
                    nxt[w2] = v2
                    bk[w2] = (w, q)
    out = []
    for c in range(top + 1):
        best_w = None
        for w in range(cap + 1):
            v = layers[c][w]
            if v is not None and (best_w is None or v > layers[c][best_w]):
                best_w = w
        if best_w is None:
            out.append(None)
            continue
        counts: dict[int, int] = {}
        w, cc = best_w, c
        while cc:
            pw, q = back[cc][w]
            counts[items[q][0]] = counts.get(items[q][0], 0) + 1
            w, cc = pw, cc - 1
        out.append((layers[c][best_w], counts))
    return out


class _Packing(Adapter):
    """Items with sizes in (0, 1] packed into unit bins."""

    kind = "bin_packing"
    natural_sizes = True
    unit_cost = True

    def __init__(self, sizes, multiplicities=None):
        self.sizes = _fractions(sizes, "sizes")
        n = len(self.sizes)
        if multiplicities is None:
            multiplicities = [1] * n
        if len(multiplicities) != n or any(int(m) < 0 for m in multiplicities):
            raise InputError("multiplicities must be nonnegative, one per item")
        self.mult = [int(m) for m in multiplicities]
        self.size_of = {i + 1: s for i, s in enumerate(self.sizes)}

    # --- structure
    def item_ids(self) -> list[int]:
        return list(range(1, len(self.sizes) + 1))

    def order(self) -> OrderRelation:
        return OrderRelation.total(sorted(self.item_ids(), key=lambda i: (-self.size_of[i], i)))

    def load(self, counts: Mapping[int, int]) -> Fraction:
        return sum((self.size_of[i] * c for i, c in counts.items()), Fraction(0))

    def feasible(self, counts):
        return self.load(counts) <= 1

    def cost(self, counts):
        return Fraction(1) if any(counts.values()) else Fraction(0)

    def params(self) -> dict:
        return {"sizes": [fmt(s) for s in self.sizes], "multiplicities": list(self.mult)}

    # --- sizes and covers
    def pseudo_sizes(self):
        return dict(self.size_of)

    def ff_sizes(self) -> dict[int, Fraction]:
        return dict(self.size_of)

    def first_fit_cover(self, copies: Mapping[int, int]) -> tuple[list[CoverSet], dict[int, Fraction]]:
        a = self.ff_sizes()
        order = sorted(self.item_ids(), key=lambda i: (-a[i], i))
        seq = [i for i in order for _ in range(copies.get(i, 0))]
        bins = first_fit([a[i] for i in seq], Fraction(1))
        out = []
        for b in bins:
            counts: dict[int, int] = {}
            for q in b:
                counts[seq[q]] = counts.get(seq[q], 0) + 1
            if not self.feasible(counts):
                raise RuntimeError(f"First-Fit produced an infeasible bin {counts}")
            out.append(CoverSet(_normalize(counts), self.cost(counts)))
        return out, a

    def native_cover(self, copies):
        return self.first_fit_cover(copies)[0]

    # --- pricing
    def _count_table(self, values: Mapping[int, Fraction], capacity=Fraction(1), kmax=None, ids=None):
        ids = self.item_ids() if ids is None else ids
        items = [(i, self.size_of[i], values[i]) for i in ids if values.get(i, 0) > 0]
        return _dp_by_count(items, capacity, kmax)

    def _bin_price(self, duals, cost_of_count, kmax=None, capacity=Fraction(1), ids=None):
        table = self._count_table(duals, capacity, kmax, ids)
        if table is None:
            return None
        best = None
        for c, entry in enumerate(table):
            if entry is None or c == 0:
                continue
            val = entry[0] - cost_of_count(c)
            if best is None or val > best[0]:
                best = (val, entry[1])
        return best

    def price(self, duals):
        best = self._bin_price(duals, lambda c: Fraction(1))
        if best is None:
            return super().price(duals)
        if best[0] <= 0:
            return None
        return best[1], self.cost(best[1])

    def max_weight(self, values):
        table = self._count_table(values)
        if table is None:
            return super().max_weight(values)
        return max((e[0] for e in table if e is not None), default=Fraction(0))


class CardinalityBinPacking(_Packing):
    kind = "cardinality_bp"

    def __init__(self, sizes, k, multiplicities=None):
        super().__init__(sizes, multiplicities)
        self.k = int(k)
        if self.k < 1:
            raise InputError("k must be >= 1")

    def feasible(self, counts):
        return sum(counts.values()) <= self.k and self.load(counts) <= 1

    def max_card(self):
        return self.k

    def params(self):
        return {**super().params(), "k": self.k}

    def ff_sizes(self):
        floor = Fraction(1, self.k)
        return {i: max(s, floor) for i, s in self.size_of.items()}

    def pseudo_sizes(self):
        return self.ff_sizes()

    def price(self, duals):
        best = self._bin_price(duals, lambda c: Fraction(1), kmax=self.k)
        if best is None:
            return Adapter.price(self, duals)
        if best[0] <= 0:
            return None
        return best[1], Fraction(1)

    def max_weight(self, values):
        table = self._count_table(values, kmax=self.k)
        if table is None:
            return Adapter.max_weight(self, values)
        return max((e[0] for e in table if e is not None), default=Fraction(0))


class OpenEndBinPacking(_Packing):
    kind = "open_end_bp"

    def feasible(self, counts):
        present = [i for i, c in counts.items() if c]
        if not present:
            return True
        return self.load(counts) - min(self.size_of[i] for i in present) <= 1

    def _best(self, values, cost):
        best = None
        for j in self.item_ids():
            if values.get(j, 0) <= 0:
                continue
            s_j = self.size_of[j]
            ids = [i for i in self.item_ids() if self.size_of[i] >= s_j]
            table = self._count_table(values, Fraction(1), None, ids)
            if table is None:
                return "fallback"
            for entry in table:
                if entry is None:
                    continue
                counts = dict(entry[1])
                counts[j] = counts.get(j, 0) + 1
                val = entry[0] + values[j] - cost
                if best is None or val > best[0]:
                    best = (val, counts)
        return best

    def price(self, duals):
        best = self._best(duals, Fraction(1))
        if best == "fallback":
            return Adapter.price(self, duals)
        if best is None or best[0] <= 0:
            return None
        return best[1], Fraction(1)

    def max_weight(self, values):
        best = self._best(values, Fraction(0))
        if best == "fallback":
            return Adapter.max_weight(self, values)
        return Fraction(0) if best is None else best[0]


class GeneralCostBinPacking(_Packing):
    kind = "general_cost_bp"
    unit_cost = False

    def __init__(self, sizes, f, multiplicities=None):
        super().__init__(sizes, multiplicities)
        self.f = [to_fraction(v) for v in f]
        if not self.f or self.f[0] != 0:
            raise InputError("f must start with f(0) = 0")
        for c in range(1, len(self.f)):
            if not 0 <= self.f[c] <= 1:
                raise InputError(f"f({c}) = {self.f[c]} outside [0, 1]")
            if self.f[c] < self.f[c - 1]:
                raise InputError(f"f is not nondecreasing at {c}")
            if c >= 2 and self.f[c] - self.f[c - 1] > self.f[c - 1] - self.f[c - 2]:
                raise InputError(f"f is not concave at {c - 1}")

    def f_of(self, c: int) -> Fraction:
        return self.f[c] if c < len(self.f) else self.f[-1]

    def cost(self, counts):
        return self.f_of(sum(counts.values()))

    def params(self):
        return {**super().params(), "f": [fmt(v) for v in self.f]}

    def price(self, duals):
        best = self._bin_price(duals, self.f_of)
        if best is None:
            return Adapter.price(self, duals)
        if best[0] <= 0:
            return None
        return best[1], self.cost(best[1])


class VariableSizedBinPacking(_Packing):
    kind = "var_sized_bp"
    natural_sizes = False
    unit_cost = False

    def __init__(self, sizes, capacities, costs, multiplicities=None):
        super().__init__(sizes, multiplicities)
        self.capacities = _fractions(capacities, "capacities")
        self.costs = _fractions(costs, "costs")
        if len(self.capacities) != len(self.costs) or not self.capacities:
            raise InputError("need one cost per bin type and at least one type")
        if max(self.sizes) > max(self.capacities):
            raise InputError("an item is larger than every bin type")

    def feasible(self, counts):
        return self.load(counts) <= max(self.capacities)

    def cost(self, counts):
        if not any(counts.values()):
            return Fraction(0)
        load = self.load(counts)
        return min(c for a, c in zip(self.capacities, self.costs) if a >= load)

    def params(self):
        return {**super().params(), "capacities": [fmt(a) for a in self.capacities],
                "costs": [fmt(c) for c in self.costs]}

    def pseudo_sizes(self):
        return None

    def ff_sizes(self):
        top = max(self.capacities)
        return {i: s / top for i, s in self.size_of.items()}

    def native_cover(self, copies):
        return None

    def price(self, duals):
        best = None
        for a, c in zip(self.capacities, self.costs):
            got = self._bin_price(duals, lambda _: c, capacity=a)
            if got is None:
                return Adapter.price(self, duals)
            if best is None or got[0] > best[0]:
                best = got
        if best is None or best[0] <= 0:
            return None
        return best[1], self.cost(best[1])

    def max_weight(self, values):
        table = self._count_table(values, capacity=max(self.capacities))
        if table is None:
            return Adapter.max_weight(self, values)
        return max((e[0] for e in table if e is not None), default=Fraction(0))


def _geometric_round_up(value: Fraction, eps: Fraction, floor: Fraction) -> Fraction:
    """Smallest power of (1 + eps) that is >= max(value, floor), capped at 1."""
    v = max(value, floor)
    base = 1 + eps
    z = math.ceil(math.log(float(v)) / math.log(float(base)))
    while base ** z < v:
        z += 1
    while base ** (z - 1) >= v:
        z -= 1
    return min(Fraction(1), base ** z)


def default_eps(n: int) -> Fraction:
    n = max(n, 2)
    return Fraction(math.log2(n) ** 1.5 / math.sqrt(n)).limit_denominator(1000)


def _rounding_eps(eps, n: int) -> Fraction | None:
    """``None`` keeps values as given; ``"auto"`` picks :func:`default_eps`."""
    if eps is None:
        return None
    e = default_eps(n) if eps == "auto" else to_fraction(eps)
    if e <= 0:
        raise InputError("eps must be positive")
    return e


class BinPackingWithRejection(_Packing):
    kind = "bp_rejection"
    unit_cost = False

    def __init__(self, sizes, rejection_costs, multiplicities=None, eps=None):
        super().__init__(sizes, multiplicities)
        raw = _fractions(rejection_costs, "rejection_costs")
        if len(raw) != len(self.sizes):
            raise InputError("need one rejection cost per item")
        self.raw_costs = raw
        self.eps = _rounding_eps(eps, len(raw))
        if self.eps is not None:
            n = len(raw)
            self.rej = [_geometric_round_up(c, self.eps, Fraction(1, n)) for c in raw]
        else:
            self.rej = list(raw)
        self.rej_of = {i + 1: c for i, c in enumerate(self.rej)}

    @property
    def distinct_costs(self) -> int:
        return len(set(self.rej))

    def order(self):
        pairs = []
        ids = self.item_ids()
        key = {i: (-self.size_of[i], i) for i in ids}
        for i in ids:
            for j in ids:
                if i != j and self.rej_of[i] == self.rej_of[j] and key[j] > key[i]:
                    pairs.append((j, i))
        return OrderRelation.from_pairs(ids, pairs)

    def feasible(self, counts):
        total = sum(counts.values())
        return total <= 1 or self.load(counts) <= 1

    def cost(self, counts):
        present = [(i, c) for i, c in counts.items() if c]
        if not present:
            return Fraction(0)
        if len(present) == 1 and present[0][1] == 1:
            i = present[0][0]
            return min(Fraction(1), self.rej_of[i])
        return Fraction(1)

    def params(self):
        out = {**super().params(), "rejection_costs": [fmt(c) for c in self.raw_costs]}
        if self.eps is not None:
            out["eps"] = fmt(self.eps)
        return out

    def price(self, duals):
        best = self._bin_price(duals, lambda c: Fraction(1))
        if best is None:
            got = Adapter.price(self, duals)
            return got
        cands = []
        if best[0] > 0:
            cands.append((best[0], best[1]))
        for i in self.item_ids():
            v = duals.get(i, 0) - self.rej_of[i]
            if v > 0:
                cands.append((v, {i: 1}))
        if not cands:
            return None
        val, counts = max(cands, key=lambda vc: vc[0])
        return counts, self.cost(counts)

    def max_weight(self, values):
        out = super().max_weight(values)
        return max([out] + [values.get(i, Fraction(0)) for i in self.item_ids()])


class TrainDelivery(_Packing):
    kind = "train_delivery"
    unit_cost = False

    def __init__(self, sizes, positions, multiplicities=None, eps=None):
        super().__init__(sizes, multiplicities)
        raw = _fractions(positions, "positions")
        if len(raw) != len(self.sizes):
            raise InputError("need one position per item")
        self.raw_positions = raw
        self.eps = _rounding_eps(eps, len(raw))
        if self.eps is not None:
            n = len(raw)
            self.pos = [_geometric_round_up(p, self.eps, Fraction(1, n)) for p in raw]
        else:
            self.pos = list(raw)
        self.pos_of = {i + 1: p for i, p in enumerate(self.pos)}

    def order(self):
        ids = self.item_ids()
        key = {i: (-self.size_of[i], i) for i in ids}
        pairs = [(j, i) for i in ids for j in ids
                 if i != j and self.pos_of[i] == self.pos_of[j] and key[j] > key[i]]
        return OrderRelation.from_pairs(ids, pairs)

    def cost(self, counts):
        present = [self.pos_of[i] for i, c in counts.items() if c]
        return max(present) if present else Fraction(0)

    def params(self):
        out = {**super().params(), "positions": [fmt(p) for p in self.raw_positions]}
        if self.eps is not None:
            out["eps"] = fmt(self.eps)
        return out

    def price(self, duals):
        best = None
        for P in sorted(set(self.pos)):
            ids = [i for i in self.item_ids() if self.pos_of[i] <= P]
            got = self._bin_price(duals, lambda _: P, ids=ids)
            if got is None:
                return Adapter.price(self, duals)
            if best is None or got[0] > best[0]:
                best = got
        if best is None or best[0] <= 0:
            return None
        return best[1], self.cost(best[1])


class VectorPacking(Adapter):
    kind = "vector_packing"
    unit_cost = True

    def __init__(self, vectors, multiplicities=None):
        vecs = []
        for q, v in enumerate(vectors):
            row = _fractions(v, f"vectors[{q}]", lo=0, lo_open=False)
            if not any(row):
                raise InputError(f"vectors[{q}] is zero")
            vecs.append(row)
        if not vecs:
            raise InputError("need at least one vector")
        dims = {len(v) for v in vecs}
        if len(dims) != 1:
            raise InputError("vectors must share a dimension")
        self.vectors = vecs
        self.dim = dims.pop()
        n = len(vecs)
        self.mult = [1] * n if multiplicities is None else [int(m) for m in multiplicities]
        self.vec_of = {i + 1: v for i, v in enumerate(vecs)}

    def item_ids(self):
        return list(range(1, len(self.vectors) + 1))

    def order(self):
        ids = self.item_ids()
        pairs = []
        for i in ids:
            for j in ids:
                if i == j:
                    continue
                vi, vj = self.vec_of[i], self.vec_of[j]
                if all(a <= b for a, b in zip(vj, vi)) and (vj != vi or j > i):
                    pairs.append((j, i))
        return OrderRelation.from_pairs(ids, pairs)

    def feasible(self, counts):
        for d in range(self.dim):
            if sum((self.vec_of[i][d] * c for i, c in counts.items()), Fraction(0)) > 1:
                return False
        return True

    def cost(self, counts):
        return Fraction(1) if any(counts.values()) else Fraction(0)

    def params(self):
        return {"vectors": [[fmt(x) for x in v] for v in self.vectors], "multiplicities": list(self.mult)}


class PartitionHardness(Adapter):
    """Groups of PARTITION items; ``S(I, p)`` is feasible when ``sum a_I <= A``."""

    kind = "partition_hardness"
    unit_cost = True

    def __init__(self, a, groups):
        a = [int(x) for x in a]
        if len(a) < 2:
            raise InputError("need at least two PARTITION items")
        if any(x <= 0 for x in a):
            raise InputError("PARTITION sizes must be positive")
        if any(a[q] < a[q + 1] for q in range(len(a) - 1)):
            raise InputError("PARTITION sizes must be sorted nonincreasing")
        if sum(a) % 2:
            raise InputError("PARTITION total must be even")
        self.a = a
        self.groups = int(groups)
        if self.groups < 1:
            raise InputError("need at least one group")
        self.half = sum(a) // 2
        self.n = len(a)

    def ident(self, p: int, i: int) -> int:
        return (p - 1) * self.n + i

    def split(self, ident: int) -> tuple[int, int]:
        p, i = divmod(ident - 1, self.n)
        return p + 1, i + 1

    def copies(self, p: int) -> int:
        return self.n ** (2 * p)

    def item_ids(self):
        return [self.ident(p, i) for p in range(1, self.groups + 1) for i in range(1, self.n + 1)]

    def multiplicities(self):
        return [self.copies(self.split(t)[0]) for t in self.item_ids()]

    def order(self):
        return OrderRelation.total(self.item_ids())

    def _min_index_set(self, counts, p):
        """Cheapest ``I`` (by sum of a) whose ``S(I, p)`` dominates counts, or None."""
        per = self.copies(p)
        at = [0] * (self.n + 1)
        below = 0
        for t, c in counts.items():
            q, i = self.split(t)
            if q < p:
                return None
            if q == p:
                at[i] += c
            else:
                below += c
        chosen: set[int] = set()

        def take(upto):
            # a is nonincreasing, so the latest free index is the cheapest
            for j in range(upto, 0, -1):
                if j not in chosen:
                    chosen.add(j)
                    return True
            return False

        running = 0
        for i in range(1, self.n + 1):
            running += at[i]
            while len(chosen) < -(-running // per):
                if not take(i):
                    return None
        while len(chosen) < -(-(running + below) // per):
            if not take(self.n):
                return None
        return sorted(chosen)

    def feasible(self, counts):
        counts = {t: c for t, c in counts.items() if c}
        if not counts:
            return True
        for p in range(1, self.groups + 1):
            chosen = self._min_index_set(counts, p)
            if chosen is not None and sum(self.a[i - 1] for i in chosen) <= self.half:
                return True
        return False

    def cost(self, counts):
        return Fraction(1) if any(counts.values()) else Fraction(0)

    def params(self):
        return {"a": list(self.a), "groups": self.groups}

    def generator(self, index_set: Iterable[int], p: int) -> CoverSet:
        return CoverSet(_normalize({self.ident(p, i): self.copies(p) for i in index_set}), Fraction(1))

    def iter_feasible(self, ids=None, limit=None):
        import itertools

        produced = 0
        allowed = None if ids is None else set(ids)
        for p in range(1, self.groups + 1):
            for r in range(1, self.n + 1):
                for I in itertools.combinations(range(1, self.n + 1), r):
                    if sum(self.a[i - 1] for i in I) > self.half:
                        continue
                    S = self.generator(I, p).counts
                    if allowed is not None and not set(S) <= allowed:
                        continue
                    produced += 1
                    if limit is not None and produced > limit:
                        from .model import CapacityError
                        raise CapacityError(f"more than {limit} feasible sets")
                    yield S

    def _knap(self, values: Mapping[int, Fraction]):
        """Best ``(value, counts)`` over generators with per-slot best hosts."""
        order = self.item_ids()
        best = None
        for p in range(1, self.groups + 1):
            # best host for each slot type v_{p,i}: max value among items below it
            host = {}
            run = None
            for t in reversed(order):
                v = values.get(t, 0)
                if v > 0 and (run is None or v > run[0]):
                    run = (v, t)
                host[t] = run
            gains = []
            for i in range(1, self.n + 1):
                h = host[self.ident(p, i)]
                gains.append(Fraction(0) if h is None else h[0] * self.copies(p))
            # 0/1 knapsack over indices with weight a_i, capacity half
            table = {0: (Fraction(0), ())}
            for i in range(1, self.n + 1):
                if gains[i - 1] <= 0:
                    continue
                new = dict(table)
                for w, (v, I) in table.items():
                    w2 = w + self.a[i - 1]
                    if w2 <= self.half and (w2 not in new or v + gains[i - 1] > new[w2][0]):
                        new[w2] = (v + gains[i - 1], I + (i,))
                table = new
            v, I = max(table.values(), key=lambda e: e[0])
            if I and (best is None or v > best[0]):
                counts: dict[int, int] = {}
                for i in I:
                    t = host[self.ident(p, i)][1]
                    counts[t] = counts.get(t, 0) + self.copies(p)
                best = (v, counts)
        return best

    def price(self, duals):
        best = self._knap(duals)
        if best is None or best[0] <= 1:
            return None
        return best[1], Fraction(1)

    def max_weight(self, values):
        best = self._knap(values)
        return Fraction(0) if best is None else best[0]


VARIANTS = {
    cls.kind: cls
    for cls in (
        _Packing,
        CardinalityBinPacking,
        OpenEndBinPacking,
        GeneralCostBinPacking,
        VariableSizedBinPacking,
        BinPackingWithRejection,
        TrainDelivery,
        VectorPacking,
        PartitionHardness,
    )
}


def adapter_from_params(kind: str, params: Mapping) -> Adapter:
    try:
        cls = VARIANTS[kind]
    except KeyError:
        raise InputError(f"unknown variant {kind!r}") from None
    try:
        return cls(**params)
    except TypeError as exc:
        raise InputError(f"bad parameters for {kind}: {exc}") from None


def adapter_instance(adapter: Adapter) -> Instance:
    ids = adapter.item_ids()
    mult = adapter.multiplicities() if hasattr(adapter, "multiplicities") and callable(
        getattr(adapter, "multiplicities")) else adapter.mult
    return Instance(
        tuple(zip(ids, mult)),
        adapter.order(),
        SetSystem("adapter", adapter=adapter),
        adapter.max_card(),
        adapter.kind,
    )


def adapt_variant(kind: str, **params) -> Instance:
    """Build a variant instance; every one is checked by ``model.validate`` in the tests."""
    return adapter_instance(adapter_from_params(kind, params))
