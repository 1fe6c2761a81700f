import itertools
import math
import random
from fractions import Fraction

import pytest

from ordcover.approx import (
    BudgetExhausted,
    TrialCapReached,
    dp_solve,
    dp_two_approx,
    dyadic_grouping,
    exact_opt,
    exact_search,
    first_fit,
    rand_lambda,
    rand_mult_round,
    rounded_demand,
)
from ordcover.instances import gen_nested_levels, random_instance
from ordcover.lp import solve_instance
from ordcover.model import CoverSet, InputError, Instance, OrderRelation, SetSystem
from ordcover.rounding import additive_round

from conftest import brute_covers, brute_member, brute_opt, brute_pattern_cover, small_instance

F = Fraction


def test_first_fit_examples():
    bins = first_fit([F(6, 10), F(5, 10), F(4, 10), F(3, 10)])
    assert bins == [[0, 2], [1, 3]]
    assert first_fit([]) == []
    assert first_fit([F(1, 3)]) == [[0]]
    with pytest.raises(InputError):
        first_fit([F(3, 2)])


@pytest.mark.parametrize("seed", range(50))
def test_first_fit_bound(seed):
    rng = random.Random(seed)
    sizes = [F(rng.randint(1, 12), 12) for _ in range(rng.randint(0, 40))]
    bins = first_fit(sizes)
    assert sorted(q for b in bins for q in b) == list(range(len(sizes)))
    loads = [sum(sizes[q] for q in b) for b in bins]
    assert all(x <= 1 for x in loads)
    assert sum(1 for x in loads if 2 * x < 1) <= 1
    assert len(bins) <= 2 * sum(sizes) + 1


def single_type(mult, cap):
    order = OrderRelation.total([1])
    return Instance(((1, mult),), order, SetSystem("generators", (CoverSet.of({1: cap}),)))


def test_dp_examples():
    res = dp_two_approx(single_type(5, 2))
    assert res.cover.cost == 3 and len(res.cover) == 3
    empty = Instance(((1, 0),), OrderRelation.total([1]), SetSystem("generators", (CoverSet.of([1]),)))
    assert dp_two_approx(empty).cover.cost == 0


def test_dyadic_grouping_shape():
    inst = single_type(10, 2)
    g = dyadic_grouping(inst)
    assert g.sizes == [1, 2, 4, 3]
    assert rounded_demand(g) == ([1], [10])
    order = OrderRelation.total([1, 2, 3])
    inst = Instance(((1, 1), (2, 2), (3, 5)), order, SetSystem("generators", (CoverSet.of([1, 2, 3]),)))
    g = dyadic_grouping(inst)
    assert g.representatives == [1, 2, 3, 3] and g.sizes == [1, 2, 4, 1]
    assert rounded_demand(g) == ([1, 2, 3], [1, 2, 5])
    assert len(g.groups) <= math.ceil(math.log2(8)) + 1


@pytest.mark.parametrize("seed", range(25))
def test_dp_table_matches_exhaustive(seed):
    rng = random.Random(seed)
    K = rng.randint(1, 3)
    pats = []
    for _ in range(rng.randint(1, 4)):
        v = tuple(rng.randint(0, 2) for _ in range(K))
        if any(v):
            pats.append((v, F(rng.randint(1, 4), 4)))
    for c in range(K):
        pats.append((tuple(int(q == c) for q in range(K)), F(1)))
    b = tuple(rng.randint(0, 3) for _ in range(K))
    table = dp_solve(b, pats)
    assert table.value(b) == brute_pattern_cover(b, pats)
    # reconstruction is consistent with the value
    chosen = table.reconstruct(b)
    assert sum((pats[q][1] for q in chosen), F(0)) == table.value(b)


def test_dp_state_cap():
    with pytest.raises(BudgetExhausted):
        dp_two_approx(gen_nested_levels(3), state_cap=1000)


@pytest.mark.parametrize("seed", range(30))
def test_dp_within_twice_opt(seed):
    inst = small_instance(seed, n_max=5, mult_max=2)
    res = dp_two_approx(inst)
    assert brute_covers(inst, res.cover.sets)
    for S in res.cover.sets:
        ok, w = brute_member(inst, S.counts)
        assert ok and w <= S.cost
    assert res.cover.cost <= 2 * brute_opt(inst)


def test_lambda_examples():
    assert rand_lambda(1) == pytest.approx(8 * math.log(4))
    assert abs(rand_lambda(1) - 11.09) < 0.01
    assert rand_lambda(2) == pytest.approx(8 * math.log(8))
    assert rand_lambda(10**6) > rand_lambda(1000)


@pytest.mark.parametrize("seed", range(10))
def test_rand_round_success_is_feasible(seed):
    rng = random.Random(seed)
    inst = random_instance(rng, rng.randint(1, 20), rng.randint(1, 5), max_mult=4)
    x = solve_instance(inst)
    res = rand_mult_round(inst, x, seed)
    assert brute_covers(inst, res.cover.sets)
    assert res.cover.cost <= 4 * res.lam * x.objective
    assert res.log[-1].success
    again = rand_mult_round(inst, x, seed)
    assert again.log == res.log and again.cover == res.cover


def test_rand_round_trial_cap():
    inst = single_type(5, 2)
    x = solve_instance(inst)
    with pytest.raises(TrialCapReached) as exc:
        rand_mult_round(inst, x, 0, trials=0)
    assert exc.value.log == ()


def test_rand_round_success_frequency():
    rng = random.Random(99)
    ok = total = 0
    for t in range(10):
        inst = random_instance(rng, rng.randint(4, 64), rng.randint(1, 6), max_mult=3)
        x = solve_instance(inst)
        res = rand_mult_round(inst, x, 1000 + t, trials=20, stop_on_success=False)
        ok += sum(tr.success for tr in res.log)
        total += len(res.log)
    assert total == 200 and ok / total >= 0.35


def test_exact_examples():
    assert exact_opt(gen_nested_levels(1)) == 2
    order = OrderRelation.total([1, 2])
    integral = Instance(((1, 2), (2, 2)), order, SetSystem("generators", (CoverSet.of([1, 2]),)))
    assert exact_opt(integral) == solve_instance(integral).objective == 2


def test_exact_nested_m2_grid():
    inst = gen_nested_levels(2)
    (m1, m2) = (3 * 100, 3 * 100**2)
    (c1, c2) = (2 * 100, 2 * 100**2)
    best = None
    for n1, n2 in itertools.product(range(5), repeat=2):
        # type 1 needs type-1 slots; type 2 can also use type-1 slots
        if c1 * n1 >= m1 and c1 * n1 + c2 * n2 >= m1 + m2:
            if best is None or n1 + n2 < best:
                best = n1 + n2
    assert best == 4
    assert exact_opt(inst) == best


def test_exact_budget():
    assert exact_search(gen_nested_levels(3), budget=1) is None
    assert exact_opt(gen_nested_levels(3), budget=1) is None


@pytest.mark.parametrize("seed", range(30))
def test_exact_sandwich(seed):
    inst = small_instance(seed, n_max=5, mult_max=3)
    opt = exact_opt(inst)
    assert opt == brute_opt(inst)
    assert solve_instance(inst).objective <= opt <= additive_round(inst)[0].cost
