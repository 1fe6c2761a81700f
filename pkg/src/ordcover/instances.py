"""Instance families: nested levels, disjoint unions, the log log family,
the PARTITION construction and random listed families."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Iterable, Sequence

from .model import CoverSet, InputError, Instance, OrderRelation, SetSystem, _normalize, dominates
from .variants import PartitionHardness, adapt_variant, adapter_instance

MAX_MULTIPLICITY = 10**40


def _guard(value: int, what: str) -> int:
    if value > MAX_MULTIPLICITY:
        raise InputError(f"{what} = {value} is too large")
    return value


def gen_nested_levels(m: int, base: int = 100) -> Instance:
    """Level l has ``3 base^l`` copies of one type and a generator of ``2 base^l`` of them."""
    if m < 1:
        raise InputError("m must be >= 1")
    if base < 3:
        raise InputError("base must be >= 3")
    _guard(3 * base**m, "level multiplicity")
    ids = list(range(1, m + 1))
    items = tuple((l, 3 * base**l) for l in ids)
    gens = tuple(CoverSet(((l, 2 * base**l),), Fraction(1)) for l in ids)
    return Instance(items, OrderRelation.total(ids), SetSystem("generators", gens), None, "nested-levels")


def _reindex(inst: Instance, offset: int) -> tuple[list, list, list]:
    items = [(i + offset, m) for i, m in inst.items]
    pairs = [(j + offset, i + offset) for j, i in inst.order.pairs]
    sets = [CoverSet(tuple((i + offset, c) for i, c in S.elements), S.cost) for S in inst.system.sets]
    return items, pairs, sets


def gen_disjoint_union(parts: Sequence[Instance]) -> Instance:
    """Union over disjoint copies of the ground sets; ids are shifted part by part."""
    parts = [p for p in parts if p.items]
    if not parts:
        return Instance((), OrderRelation.total(()), SetSystem("generators"), None, "disjoint-union")
    if len(parts) == 1:
        return parts[0]
    if any(p.system.kind == "adapter" for p in parts):
        raise InputError("disjoint unions of adapter instances are not supported")
    kind = "explicit" if all(p.system.kind == "explicit" for p in parts) else "generators"
    items, pairs, sets = [], [], []
    offset = 0
    for p in parts:
        it, pr, st = _reindex(p, offset)
        items += it
        pairs += pr
        sets += st
        offset += max(p.ids)
    ks = [p.k for p in parts if p.k is not None]
    order = OrderRelation.from_pairs([i for i, _ in items], pairs)
    return Instance(tuple(items), order, SetSystem(kind, tuple(sets)), max(ks) if ks else None, "disjoint-union")


def loglog_core(k: int) -> dict[int, list[int]]:
    """C_j = {i : <i, j> = 1 mod 2} over the nonzero vectors of the k-cube."""
    top = 2**k
    return {j: [i for i in range(1, top) if bin(i & j).count("1") % 2] for j in range(1, top)}


def gen_loglog(k: int) -> Instance:
    if k < 2:
        raise InputError("k must be >= 2")
    top = 2**k - 1
    _guard((2 * k) ** top, "multiplicity")
    ids = list(range(1, top + 1))
    mult = {i: (2 * k) ** i for i in ids}
    gens = tuple(CoverSet(tuple((i, mult[i]) for i in C), Fraction(1)) for j, C in loglog_core(k).items())
    items = tuple((i, mult[i]) for i in ids)
    return Instance(items, OrderRelation.total(ids), SetSystem("generators", gens), None, "loglog")


def gen_partition_hardness(a: Sequence[int], groups: int) -> Instance:
    inst = adapter_instance(PartitionHardness(a, groups))
    return inst


def partition_completeness_cover(instance: Instance, index_set: Iterable[int]) -> list[CoverSet]:
    """The ``2k`` generators ``S([n] - I, p), S(I, p)`` for a PARTITION certificate ``I``."""
    adapter = instance.adapter
    if not isinstance(adapter, PartitionHardness):
        raise InputError("not a PARTITION instance")
    I = sorted(set(int(i) for i in index_set))
    if not I or any(i < 1 or i > adapter.n for i in I):
        raise InputError("certificate indices out of range")
    if sum(adapter.a[i - 1] for i in I) != adapter.half:
        raise InputError("certificate does not split the total in half")
    rest = [i for i in range(1, adapter.n + 1) if i not in I]
    out = []
    for p in range(1, adapter.groups + 1):
        out.append(adapter.generator(rest, p))
        out.append(adapter.generator(I, p))
    return out


# --------------------------------------------------------------------------
# random families


def repair_costs(sets: Sequence[CoverSet], order: OrderRelation) -> list[CoverSet]:
    """Lower each listed cost to the cheapest listed set dominating it."""
    out = []
    for S in sets:
        w = min([S.cost] + [G.cost for G in sets if G.cost < S.cost and dominates(G, S, order)])
        out.append(S.with_cost(w))
    return out


def random_instance(rng: random.Random, n: int, k: int, sets: int | None = None, max_mult: int = 3,
                    unit_cost: bool = True, denominators: Sequence[int] = (1, 2, 3, 4)) -> Instance:
    """Random generator family over a total order ``1 > 2 > ... > n``.

    Item 1 always appears in some generator, so every item is coverable.
    """
    if n < 1 or k < 1:
        raise InputError("need n >= 1 and k >= 1")
    sets = sets if sets is not None else max(1, n // 2 + 1)
    ids = list(range(1, n + 1))
    gens = []
    for q in range(sets):
        size = rng.randint(1, k)
        elems = [rng.randint(1, n) for _ in range(size)]
        if q == 0:
            elems[0] = 1
        if unit_cost:
            cost = Fraction(1)
        else:
            den = rng.choice(list(denominators))
            cost = Fraction(rng.randint(1, den), den)
        gens.append(CoverSet(_normalize(elems), cost))
    order = OrderRelation.total(ids)
    gens = repair_costs(gens, order)
    items = tuple((i, rng.randint(0 if i > 1 else 1, max_mult)) for i in ids)
    return Instance(items, order, SetSystem("generators", tuple(gens)), k, "random")


def random_order(rng: random.Random, n: int, p: float = 0.3) -> OrderRelation:
    """Random partial order from a random DAG on a shuffled ranking."""
    ids = list(range(1, n + 1))
    perm = ids[:]
    rng.shuffle(perm)
    pairs = []
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < p:
                pairs.append((perm[b], perm[a]))
    return OrderRelation.from_pairs(ids, pairs)


def random_partial_instance(rng: random.Random, n: int, k: int, sets: int | None = None,
                            max_mult: int = 2) -> Instance:
    order = random_order(rng, n)
    maximal = [i for i in order.ground if len(order.up[i]) == 1]
    sets = sets if sets is not None else max(1, n // 2 + 1)
    gens = []
    for q in range(sets):
        elems = [rng.randint(1, n) for _ in range(rng.randint(1, k))]
        gens.append(CoverSet(_normalize(elems), Fraction(1)))
    # every maximal element hosts itself somewhere
    for i in maximal:
        if not any(i in G.counts for G in gens):
            gens.append(CoverSet(((i, 1),), Fraction(1)))
    items = tuple((i, rng.randint(0, max_mult)) for i in sorted(order.ground))
    return Instance(items, order, SetSystem("generators", tuple(gens)), k, "random-partial")


# --------------------------------------------------------------------------
# random variant parameters


def _rand_frac(rng: random.Random, lo: int, hi: int, den: int) -> Fraction:
    return Fraction(rng.randint(lo, hi), den)


def random_variant(rng: random.Random, kind: str, n: int | None = None) -> Instance:
    """A random small parameterization of one bin-packing variant."""
    n = n if n is not None else rng.randint(2, 6)
    den = rng.choice([4, 6, 8, 10, 12])
    sizes = [_rand_frac(rng, 1, den, den) for _ in range(n)]
    mult = [rng.randint(1, 3) for _ in range(n)]
    if kind == "bin_packing":
        return adapt_variant(kind, sizes=sizes, multiplicities=mult)
    if kind == "cardinality_bp":
        return adapt_variant(kind, sizes=sizes, k=rng.randint(1, 4), multiplicities=mult)
    if kind == "open_end_bp":
        return adapt_variant(kind, sizes=sizes, multiplicities=mult)
    if kind == "general_cost_bp":
        steps = sorted((Fraction(rng.randint(0, 4), 4) for _ in range(n + 1)), reverse=True)
        f = [Fraction(0)]
        for st in steps:
            f.append(min(Fraction(1), f[-1] + st))
        # concavity can be lost by the clamp only at the top, where increments are zero anyway
        return adapt_variant(kind, sizes=sizes, f=f, multiplicities=mult)
    if kind == "var_sized_bp":
        T = rng.randint(1, 3)
        caps = sorted({_rand_frac(rng, 1, den, den) for _ in range(T)} | {Fraction(1)})
        costs = sorted(_rand_frac(rng, 1, 4, 4) for _ in caps)
        sizes = [min(s, caps[-1]) for s in sizes]
        return adapt_variant(kind, sizes=sizes, capacities=caps, costs=costs, multiplicities=mult)
    if kind == "bp_rejection":
        pool = [Fraction(rng.randint(1, 4), 4) for _ in range(rng.randint(1, 3))]
        rej = [rng.choice(pool) for _ in range(n)]
        return adapt_variant(kind, sizes=sizes, rejection_costs=rej, multiplicities=mult)
    if kind == "train_delivery":
        pool = [Fraction(rng.randint(1, 4), 4) for _ in range(rng.randint(1, 3))]
        pos = [rng.choice(pool) for _ in range(n)]
        return adapt_variant(kind, sizes=sizes, positions=pos, multiplicities=mult)
    if kind == "vector_packing":
        dim = rng.randint(1, 3)
        vecs = [[_rand_frac(rng, 0, den, den) for _ in range(dim)] for _ in range(n)]
        for v in vecs:
            if not any(v):
                v[0] = Fraction(1, den)
        return adapt_variant(kind, vectors=vecs, multiplicities=mult)
    raise InputError(f"unknown variant {kind!r}")


APPENDIX_VARIANTS = (
    "cardinality_bp",
    "open_end_bp",
    "general_cost_bp",
    "var_sized_bp",
    "bp_rejection",
    "train_delivery",
    "vector_packing",
)
