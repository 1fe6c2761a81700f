import itertools
import random
from fractions import Fraction

import pytest

from ordcover.approx import exact_opt
from ordcover.instances import (
    APPENDIX_VARIANTS,
    gen_disjoint_union,
    gen_loglog,
    gen_nested_levels,
    gen_partition_hardness,
    loglog_core,
    partition_completeness_cover,
    random_instance,
    random_variant,
)
from ordcover.lp import solve_instance
from ordcover.model import InputError, check_prefix, validate
from ordcover.rounding import additive_round
from ordcover.sizes import chain_certificate, pseudo_sizes
from ordcover.variants import adapt_variant

from conftest import antichain_instance, brute_covers, brute_opt

F = Fraction


def test_nested_levels_examples():
    inst = gen_nested_levels(1)
    assert inst.items == ((1, 300),)
    assert [G.counts for G in inst.system.sets] == [{1: 200}]
    assert solve_instance(inst).objective == F(3, 2) and exact_opt(inst) == 2
    small = gen_nested_levels(1, base=3)
    assert small.items == ((1, 9),) and small.system.sets[0].counts == {1: 6}
    assert solve_instance(small).objective == F(3, 2) and exact_opt(small) == 2
    two = gen_nested_levels(2)
    assert exact_opt(two) - solve_instance(two).objective >= F(4, 10) * 2


def test_nested_levels_rejects_bad_params():
    with pytest.raises(InputError):
        gen_nested_levels(1, base=2)
    with pytest.raises(InputError):
        gen_nested_levels(0)
    with pytest.raises(InputError):
        gen_nested_levels(40)


def test_disjoint_union():
    parts = [gen_nested_levels(1, base=3), gen_nested_levels(2, base=3)]
    u = gen_disjoint_union(parts)
    assert u.d == 2 and len(u.ids) == 3
    assert solve_instance(u).objective == sum(solve_instance(p).objective for p in parts)
    assert exact_opt(u) == sum(exact_opt(p) for p in parts)
    assert validate(u).ok
    empty = gen_disjoint_union([])
    assert gen_disjoint_union([parts[0], empty]) is parts[0]
    three = gen_disjoint_union([gen_nested_levels(1)] * 3)
    assert three.d == 3


@pytest.mark.parametrize("seed", range(10))
def test_union_lp_separates(seed):
    rng = random.Random(seed)
    parts = [random_instance(rng, rng.randint(1, 4), rng.randint(1, 3), max_mult=2) for _ in range(2)]
    u = gen_disjoint_union(parts)
    assert solve_instance(u).objective == sum(solve_instance(p).objective for p in parts)
    assert brute_opt(u) == sum(brute_opt(p) for p in parts)


def test_loglog_core_k2():
    core = loglog_core(2)
    assert core == {1: [1, 3], 2: [2, 3], 3: [1, 2]}
    inst = antichain_instance(list(core.values()), {1: 1, 2: 1, 3: 1})
    assert solve_instance(inst).objective == F(3, 2)
    assert brute_opt(inst) == 2


def test_loglog_k3_gap():
    inst = gen_loglog(3)
    assert len(inst.ids) == 7 and len(inst.system.sets) == 7
    assert solve_instance(inst).objective <= 2
    gens = list(inst.system.sets)
    for r in (1, 2):
        for pick in itertools.combinations_with_replacement(gens, r):
            assert not check_prefix(pick, inst.demand, inst.order)
    n = inst.total_multiplicity
    assert n <= 2 * (2 * 3) ** (2**3)


def test_loglog_k2_shape():
    inst = gen_loglog(2)
    assert len(inst.ids) == 3 and len(inst.system.sets) == 3
    with pytest.raises(InputError):
        gen_loglog(1)


def test_partition_examples():
    inst = gen_partition_hardness([1, 1], 1)
    cov = partition_completeness_cover(inst, [1])
    assert len(cov) == 2 and brute_covers(inst, cov)
    for S in cov:
        assert inst.member(S.counts) == (True, 1)
    big = gen_partition_hardness([3, 2, 2, 1], 2)
    cov = partition_completeness_cover(big, [1, 4])
    assert len(cov) == 4 and brute_covers(big, cov)
    assert all(big.member(S.counts)[0] for S in cov)
    with pytest.raises(InputError):
        gen_partition_hardness([3, 1, 1], 1)
    with pytest.raises(InputError):
        partition_completeness_cover(big, [1, 2])


def test_adapter_examples():
    card = adapt_variant("cardinality_bp", sizes=["3/10"] * 3, k=2).adapter
    assert card.feasible({1: 1, 2: 1}) and not card.feasible({1: 1, 2: 1, 3: 1})
    oe = adapt_variant("open_end_bp", sizes=["7/10", "6/10"])
    assert oe.adapter.feasible({1: 1, 2: 1})
    assert not oe.adapter.feasible({1: 2, 2: 1})
    rej = adapt_variant("bp_rejection", sizes=["1/2", "1/3", "1/4", "1/5"],
                        rejection_costs=["1/2", "1/3", "1/3", "1/4"])
    assert rej.d == 3
    auto = adapt_variant("bp_rejection", sizes=["1/2", "1/3"], rejection_costs=["1/2", "1/3"], eps="auto")
    assert auto.adapter.eps > 0


@pytest.mark.parametrize("kind", APPENDIX_VARIANTS)
def test_variants_validate_and_certify(kind):
    rng = random.Random(APPENDIX_VARIANTS.index(kind))
    for _ in range(8):
        inst = random_variant(rng, kind)
        assert validate(inst).ok, validate(inst).violations
        s = pseudo_sizes(inst)
        for lo, hi in inst.order.pairs:
            assert s[hi] >= s[lo]
        cover, rep = additive_round(inst)
        assert brute_covers(inst, cover.sets)
        assert rep.cost - rep.opt_f <= rep.certificate_bound <= rep.bound
        ad = inst.adapter
        if s.natural and hasattr(ad, "first_fit_cover"):
            for chain in inst.chains:
                copies = {i: inst.demand[i] for i in chain}
                sets, a = ad.first_fit_cover(copies)
                assert brute_covers(inst, sets, copies)
                assert sum(S.cost for S in sets) <= 2 * sum(c * a[i] for i, c in copies.items()) + 1
                assert sum(S.cost for S in sets) <= chain_certificate(copies, s)


@pytest.mark.parametrize("seed", range(10))
def test_random_families_validate(seed):
    rng = random.Random(seed)
    assert validate(random_instance(rng, rng.randint(1, 10), rng.randint(1, 4))).ok
