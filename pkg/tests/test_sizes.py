import itertools
import random
from fractions import Fraction

import pytest

from ordcover.instances import random_instance, random_partial_instance, random_variant
from ordcover.model import CoverSet, InfeasibleError, Instance, OrderRelation, SetSystem
from ordcover.sizes import (
    alpha_bound,
    chain_certificate,
    compute_sizes,
    cover_chain,
    discard_tiny,
    pseudo_sizes,
    size_class,
)
from ordcover.variants import adapt_variant

from conftest import brute_covers, brute_member, brute_sizes, small_instance


def chain3():
    order = OrderRelation.total([1, 2, 3])
    return Instance(((1, 1), (2, 1), (3, 1)), order, SetSystem("generators", (CoverSet.of([1, 2]),)))


def test_compute_sizes_examples():
    s = compute_sizes(chain3())
    assert s.sizes == {1: 1, 2: Fraction(1, 2), 3: Fraction(1, 2)}
    one = Instance(((1, 1),), OrderRelation.total([1]), SetSystem("generators", (CoverSet.of([1]),)))
    assert compute_sizes(one).sizes == {1: 1}


def test_compute_sizes_unhosted_item():
    order = OrderRelation.total([1, 2])
    inst = Instance(((1, 1), (2, 1)), order, SetSystem("generators", (CoverSet.of([2]),)))
    with pytest.raises(InfeasibleError):
        compute_sizes(inst)


def test_natural_sizes_for_bin_packing():
    inst = adapt_variant("bin_packing", sizes=["3/5", "1/2", "1/10"])
    s = pseudo_sizes(inst)
    assert s.natural and s.sizes == {1: Fraction(3, 5), 2: Fraction(1, 2), 3: Fraction(1, 10)}


def test_size_class_boundaries():
    assert size_class(Fraction(1)) == 0
    assert size_class(Fraction(1, 2)) == 1
    assert size_class(Fraction(3, 4)) == 0
    assert size_class(Fraction(1, 3)) == 1
    assert size_class(Fraction(1, 4)) == 2


@pytest.mark.parametrize("seed", range(40))
def test_sizes_match_exhaustive_oracle(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 10)
    if seed % 3 == 0:
        inst = random_partial_instance(rng, min(n, 6), rng.randint(1, 3), sets=rng.randint(1, 4), max_mult=2)
    else:
        inst = random_instance(rng, n, rng.randint(1, 3), sets=rng.randint(1, 4), max_mult=2,
                               unit_cost=seed % 2 == 0)
    s = compute_sizes(inst)
    assert s.sizes == brute_sizes(inst)
    # property (i): monotone along the order
    for lo, hi in inst.order.pairs:
        assert s[hi] >= s[lo]
    # witnesses are members inside the up-set at the stored density
    for i, W in s.witnesses.items():
        ok, w = inst.member(W.counts)
        assert ok and w == W.cost
        assert set(W.counts) <= inst.order.up[i]
        assert W.cost / len(W) == s[i]


def test_cover_chain_examples():
    order = OrderRelation.total([1])
    inst = Instance(((1, 5),), order, SetSystem("generators", (CoverSet.of({1: 2}),)))
    s = compute_sizes(inst)
    cov = cover_chain({1: 5}, s, inst)
    assert len(cov) == 3 and sum(S.cost for S in cov) <= 2 * 5 * Fraction(1, 2) + 1
    assert cover_chain({1: 0}, s, inst) == []
    one = Instance(((1, 1),), order, SetSystem("generators", (CoverSet.of([1]),)))
    cov = cover_chain({1: 1}, compute_sizes(one), one)
    assert len(cov) == 1 and cov[0].cost <= 1


@pytest.mark.parametrize("seed", range(60))
def test_cover_chain_certificate(seed):
    rng = random.Random(seed)
    inst = random_instance(rng, rng.randint(1, 12), rng.randint(1, 5), max_mult=4, unit_cost=seed % 2 == 0)
    s = compute_sizes(inst)
    copies = inst.demand
    cov = cover_chain(copies, s, inst)
    for S in cov:
        assert brute_member(inst, S.counts) == (True, S.cost)
    assert brute_covers(inst, cov, copies)
    cost = sum((S.cost for S in cov), Fraction(0))
    total = sum((c * s[i] for i, c in copies.items()), Fraction(0))
    assert cost <= chain_certificate(copies, s) == 2 * total + s.log_term([i for i, c in copies.items() if c])


def test_discard_tiny_examples():
    inst = chain3()
    s = compute_sizes(inst)
    assert discard_tiny(inst, s) == (inst.demand, [], 0)
    # four elements, so the threshold is 1/16
    bp = adapt_variant("bin_packing", sizes=["1/2", "1/2", "1/2", "1/20"])
    s = pseudo_sizes(bp)
    b, cover, cost = discard_tiny(bp, s)
    assert b == {1: 1, 2: 1, 3: 1, 4: 0}
    assert cost <= 1 and brute_covers(bp, cover, {4: 1})
    tiny = adapt_variant("bin_packing", sizes=["1/100"] * 5)
    b, cover, cost = discard_tiny(tiny, pseudo_sizes(tiny))
    assert all(c == 0 for c in b.values()) and cost <= 1 and len(cover) == 1


@pytest.mark.parametrize("seed", range(30))
def test_discard_tiny_cost_at_most_one(seed):
    rng = random.Random(seed)
    kind = ["bin_packing", "cardinality_bp", "general_cost_bp", "bp_rejection"][seed % 4]
    inst = random_variant(rng, kind)
    s = pseudo_sizes(inst)
    b, cover, cost = discard_tiny(inst, s)
    assert cost <= 1
    removed = {i: c for i, c in inst.demand.items() if c and not b[i]}
    assert brute_covers(inst, cover, removed) if removed else cover == []


def test_alpha_examples():
    inst = chain3()
    s = compute_sizes(inst)
    assert alpha_bound(inst, s).alpha == Fraction(3, 2)
    one = Instance(((1, 1),), OrderRelation.total([1]), SetSystem("generators", (CoverSet.of([1], "3/4"),)), 1)
    assert alpha_bound(one, compute_sizes(one), "analytic").alpha == Fraction(3, 4)


@pytest.mark.parametrize("seed", range(20))
def test_cardinality_alpha_at_most_two(seed):
    rng = random.Random(seed)
    inst = random_variant(rng, "cardinality_bp")
    s = pseudo_sizes(inst)
    assert alpha_bound(inst, s).alpha <= 2


@pytest.mark.parametrize("seed", range(25))
def test_alpha_dominates_member_sizes(seed):
    inst = small_instance(seed, n_max=5, k_max=3)
    s = compute_sizes(inst)
    a = alpha_bound(inst, s).alpha
    kmax = max(len(G) for G in inst.system.sets)
    for r in range(1, kmax + 1):
        for pick in itertools.combinations_with_replacement(inst.ids, r):
            S = {}
            for x in pick:
                S[x] = S.get(x, 0) + 1
            if brute_member(inst, S)[0]:
                assert sum(s[i] for i in pick) <= a
    assert a <= alpha_bound(inst, s, "analytic").alpha
