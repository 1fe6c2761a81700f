import random
from fractions import Fraction

import pytest

from ordcover.instances import gen_nested_levels, random_instance, random_partial_instance
from ordcover.lp import residual, solve_instance
from ordcover.model import CoverSet, Instance, OrderRelation, SetSystem
from ordcover.rounding import additive_round, gap_bound, group_round
from ordcover.sizes import PseudoSizeVector, alpha_bound, compute_sizes

from conftest import brute_covers, brute_member, brute_opt, small_instance


def test_group_round_ten_copies():
    s = PseudoSizeVector({1: Fraction(1)}, None)
    # class 0 and alpha 1 gives groups of 4: 4 | 4 | 2
    out = group_round({1: 10}, [[1]], s, Fraction(1))
    assert out.group_size == {(0, 0): 4}
    assert out.rounded == {1: 4}
    assert out.discarded == ({1: 6},)


def test_group_round_small_class_all_discarded():
    s = PseudoSizeVector({1: Fraction(1), 2: Fraction(1)}, None)
    out = group_round({1: 3, 2: 4}, [[1, 2]], s, Fraction(1))
    assert out.rounded == {} and out.discarded == ({1: 3, 2: 4},)


def test_group_round_empty():
    s = PseudoSizeVector({1: Fraction(1)}, None)
    out = group_round({1: 0}, [[1]], s, Fraction(1))
    assert out.rounded == {} and out.support == 0 and out.discarded == ({},)


def test_group_round_moves_demand_to_group_head():
    s = PseudoSizeVector({i: Fraction(1) for i in range(1, 6)}, None)
    # 16 copies over a chain 1 > ... > 5, groups of 4
    b = {1: 3, 2: 3, 3: 3, 4: 3, 5: 4}
    out = group_round(b, [[1, 2, 3, 4, 5]], s, Fraction(1))
    # groups: [1,1,1,2] [2,2,3,3] [3,4,4,4] [5,5,5,5]
    assert out.rounded == {2: 4, 3: 4}
    assert out.discarded == ({1: 3, 2: 1, 5: 4},)


@pytest.mark.parametrize("seed", range(40))
def test_group_round_certificates(seed):
    rng = random.Random(seed)
    inst = random_instance(rng, rng.randint(1, 20), rng.randint(1, 4), max_mult=30)
    s = compute_sizes(inst)
    alpha = max(sum((c * s[g] for g, c in G.elements), Fraction(0)) for G in inst.system.sets)
    b = inst.demand
    out = group_round(b, inst.chains, s, alpha)
    # round-up: every prefix of the chain keeps at least the demand it had
    seq = inst.chains[0]
    run_b = run_r = 0
    kept_total = sum(out.rounded.values())
    dropped = sum(sum(d.values()) for d in out.discarded)
    assert kept_total + dropped == sum(b.values())
    for i in seq:
        run_b += b.get(i, 0)
        run_r += out.rounded.get(i, 0) + out.discarded[0].get(i, 0)
    assert run_b == run_r
    classes = s.log_term([i for i, c in b.items() if c]) if any(b.values()) else 0
    assert out.discarded_size[0] <= (8 * alpha + 2) * classes
    # every kept group weighs at least 2 alpha
    kept_size = sum((c * s[i] for i, c in out.rounded.items()), Fraction(0))
    assert 2 * alpha * out.support <= kept_size


def _check_run(inst):
    cover, rep = additive_round(inst)
    for S in cover.sets:
        ok, w = brute_member(inst, S.counts)
        assert ok and w <= S.cost
    assert brute_covers(inst, cover.sets)
    assert rep.cost == cover.cost >= rep.opt_f
    assert rep.audit_cost() == rep.cost
    assert rep.cost - rep.opt_f == rep.certificate_sum()
    assert rep.cost - rep.opt_f <= rep.certificate_bound <= rep.bound
    for it in rep.iterations:
        assert it.halved
        assert it.discard_cost <= it.discard_certificate
    return cover, rep


def test_additive_integral_lp():
    order = OrderRelation.total([1, 2])
    inst = Instance(((1, 2), (2, 2)), order, SetSystem("generators", (CoverSet.of([1, 2]),)))
    cover, rep = _check_run(inst)
    assert rep.opt_f == 2 and rep.cost == 2 and rep.additive_gap == 0
    assert len(rep.iterations) <= 1


def test_additive_nested_m1():
    cover, rep = _check_run(gen_nested_levels(1))
    assert rep.opt_f == Fraction(3, 2) and rep.cost == 2 and rep.additive_gap == Fraction(1, 2)


@pytest.mark.parametrize("seed", range(40))
def test_additive_random_total(seed):
    rng = random.Random(seed)
    inst = random_instance(rng, rng.randint(1, 30), rng.randint(1, 6), max_mult=rng.choice([2, 5, 20]),
                           unit_cost=seed % 3 != 0)
    _check_run(inst)


@pytest.mark.parametrize("seed", range(15))
def test_additive_random_partial(seed):
    rng = random.Random(seed)
    _check_run(random_partial_instance(rng, rng.randint(1, 8), rng.randint(1, 3), max_mult=3))


@pytest.mark.parametrize("seed", range(20))
def test_additive_sandwich_exhaustive(seed):
    inst = small_instance(seed, n_max=4, mult_max=3)
    _, rep = _check_run(inst)
    opt = brute_opt(inst)
    assert rep.opt_f <= opt <= rep.cost


@pytest.mark.parametrize("seed", range(15))
def test_lp_does_not_grow_under_roundup(seed):
    inst = small_instance(seed, n_max=5, mult_max=6, unit=True)
    x = solve_instance(inst)
    s = compute_sizes(inst)
    b1 = residual(inst.demand, x)
    out = group_round(b1, inst.chains, s, alpha_bound(inst, s).alpha)
    assert solve_instance(inst, out.rounded).objective <= solve_instance(inst, b1).objective


def test_gap_bound_examples():
    small = gap_bound(4, 1, 1)
    assert small > 0
    for n in (2, 4, 16, 100):
        assert gap_bound(n, 1, 3) <= gap_bound(n + 1, 1, 3)
        assert gap_bound(n, 1, 3) <= gap_bound(n, 2, 3)
        assert gap_bound(n, 1, 3) <= gap_bound(n, 1, 4)
        assert gap_bound(n, 2, 3, unit_cost=True) <= gap_bound(n + 1, 2, 3, unit_cost=True)
    # unit cost drops the log n factor from the class count
    assert gap_bound(10**6, 1, 4, unit_cost=True) < gap_bound(10**6, 1, 4)
    with pytest.raises(ValueError):
        gap_bound(1, 1, 1)


def test_report_json():
    _, rep = additive_round(gen_nested_levels(1))
    js = rep.to_json()
    assert js["opt_f"] == "3/2" and js["cost"] == "2/1" and js["additive_gap"] == "1/2"
