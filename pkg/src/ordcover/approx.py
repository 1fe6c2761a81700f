"""Dynamic-programming 2-approximation, randomized multiplicative rounding,
First-Fit and an exact branch-and-bound oracle."""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Mapping, Sequence

from .model import (
    CapacityError,
    Cover,
    CoverSet,
    InfeasibleError,
    InputError,
    Instance,
    PrefixViolation,
    UnsupportedOrderError,
    _normalize,
    assignable,
    check_prefix,
    realize_cover,
)

DEFAULT_STATE_CAP = 10**6
DEFAULT_TRIAL_CAP = 64
DEFAULT_NODE_BUDGET = 20000


class BudgetExhausted(RuntimeError):
    """A search ran out of its node or state budget."""


class TrialCapReached(RuntimeError):
    def __init__(self, log):
        super().__init__(f"no successful trial in {len(log)} attempts")
        self.log = log


# --------------------------------------------------------------------------
# First-Fit


def first_fit(sizes: Sequence[Fraction], capacity: Fraction = Fraction(1)) -> list[list[int]]:
    """Bins as lists of item positions, scanning items in the given order."""
    capacity = Fraction(capacity)
    bins: list[list[int]] = []
    loads: list[Fraction] = []
    for q, s in enumerate(sizes):
        s = Fraction(s)
        if s > capacity:
            raise InputError(f"item {q} of size {s} exceeds capacity {capacity}")
        for b, load in enumerate(loads):
            if load + s <= capacity:
                bins[b].append(q)
                loads[b] += s
                break
        else:
            bins.append([q])
            loads.append(s)
    return bins


# --------------------------------------------------------------------------
# dyadic grouping


@dataclass(frozen=True)
class DyadicGrouping:
    """Copies sorted largest first, cut into groups of 1, 2, 4, ... copies."""

    groups: tuple[tuple[tuple[int, int], ...], ...]  # per group: (type, copies) runs

    @property
    def representatives(self) -> list[int]:
        return [g[0][0] for g in self.groups]

    @property
    def sizes(self) -> list[int]:
        return [sum(c for _, c in g) for g in self.groups]

    def group_of_copies(self) -> list[dict[int, int]]:
        return [dict(g) for g in self.groups]


def dyadic_grouping(instance: Instance, demand: Mapping[int, int] | None = None) -> DyadicGrouping:
    if not instance.order.total_order:
        raise UnsupportedOrderError("dyadic grouping needs a total order")
    demand = instance.demand if demand is None else demand
    runs = [[i, demand.get(i, 0)] for i in instance.order.sequence if demand.get(i, 0)]
    groups = []
    want = 1
    pos = 0
    while pos < len(runs):
        g = []
        need = want
        while need and pos < len(runs):
            t = min(need, runs[pos][1])
            g.append((runs[pos][0], t))
            runs[pos][1] -= t
            need -= t
            if not runs[pos][1]:
                pos += 1
        groups.append(tuple(g))
        want *= 2
    return DyadicGrouping(tuple(groups))


# --------------------------------------------------------------------------
# DP over representative patterns


def representative_patterns(instance: Instance, reps: Sequence[int], caps: Sequence[int],
                            limit: int = 200_000) -> list[tuple[tuple[int, ...], Fraction]]:
    """Maximal feasible count vectors over representative coordinates."""
    K = len(reps)
    found: list[tuple[tuple[int, ...], Fraction]] = []
    vec = [0] * K
    seen = 0

    def counts_of(v):
        out: dict[int, int] = {}
        for q, c in enumerate(v):
            if c:
                out[reps[q]] = out.get(reps[q], 0) + c
        return out

    def rec(q: int):
        nonlocal seen
        if q == K:
            if any(vec):
                ok, w = instance.member(counts_of(vec))
                if ok:
                    seen += 1
                    if seen > limit:
                        raise CapacityError(f"more than {limit} representative patterns")
                    found.append((tuple(vec), w))
            return
        for c in range(caps[q], -1, -1):
            vec[q] = c
            if c and not instance.member(counts_of(vec[: q + 1] + [0] * (K - q - 1)))[0]:
                continue
            rec(q + 1)
        vec[q] = 0

    rec(0)
    # keep only vectors not dominated by a cheaper-or-equal vector
    found.sort(key=lambda vw: (-sum(vw[0]), vw[0]))
    kept = []
    for v, w in found:
        if any(w2 <= w and v2 != v and all(a >= b for a, b in zip(v2, v)) for v2, w2 in kept):
            continue
        kept.append((v, w))
    kept.sort()
    return kept


@dataclass
class DPTable:
    patterns: list[tuple[tuple[int, ...], Fraction]]
    values: dict[tuple[int, ...], Fraction] = field(default_factory=dict)
    choice: dict[tuple[int, ...], int] = field(default_factory=dict)

    def value(self, b: tuple[int, ...]) -> Fraction:
        return self.values[b]

    def reconstruct(self, b: tuple[int, ...]) -> list[int]:
        out = []
        while any(b):
            q = self.choice[b]
            out.append(q)
            b = tuple(max(0, x - y) for x, y in zip(b, self.patterns[q][0]))
        return out


def dp_solve(b: Sequence[int], patterns, state_cap: int = DEFAULT_STATE_CAP) -> DPTable:
    """A(b') = min over patterns p touching the first nonzero coordinate of A((b' - p)+) + w(p)."""
    b = tuple(b)
    table = DPTable(list(patterns))
    states = 1
    for x in b:
        states *= x + 1
    if states > state_cap:
        raise BudgetExhausted(f"DP needs {states} states, cap is {state_cap}")
    by_first: dict[int, list[int]] = {}
    for q, (v, _) in enumerate(table.patterns):
        for c, x in enumerate(v):
            if x:
                by_first.setdefault(c, []).append(q)
    zero = tuple(0 for _ in b)
    table.values[zero] = Fraction(0)
    # states in increasing total order guarantee sub-states are done first
    for state in sorted(itertools.product(*(range(x + 1) for x in b)), key=sum):
        if state == zero:
            continue
        first = next(c for c, x in enumerate(state) if x)
        best = None
        for q in by_first.get(first, ()):
            v, w = table.patterns[q]
            sub = tuple(max(0, x - y) for x, y in zip(state, v))
            val = table.values.get(sub)
            if val is None:
                continue
            if best is None or val + w < best[0]:
                best = (val + w, q)
        if best is not None:
            table.values[state] = best[0]
            table.choice[state] = best[1]
    if b not in table.values:
        raise InfeasibleError(None, "a representative cannot be covered")
    return table


@dataclass(frozen=True)
class DPResult:
    cover: Cover
    grouping: DyadicGrouping
    table: DPTable
    value: Fraction


def rounded_demand(grouping: DyadicGrouping) -> tuple[list[int], list[int]]:
    """Representative types and their rounded demand; groups sharing a representative merge."""
    reps: list[int] = []
    sizes: list[int] = []
    for rep, sz in zip(grouping.representatives, grouping.sizes):
        if reps and reps[-1] == rep:
            sizes[-1] += sz
        else:
            reps.append(rep)
            sizes.append(sz)
    return reps, sizes


def dp_two_approx(instance: Instance, state_cap: int = DEFAULT_STATE_CAP) -> DPResult:
    """Round copies up to dyadic group representatives and solve the rounded instance exactly."""
    grouping = dyadic_grouping(instance)
    reps, sizes = rounded_demand(grouping)
    if not reps:
        return DPResult(Cover(()), grouping, DPTable([]), Fraction(0))
    states = 1
    for x in sizes:
        states *= x + 1
    if states > state_cap:
        raise BudgetExhausted(f"DP needs {states} states, cap is {state_cap}")
    patterns = representative_patterns(instance, reps, sizes)
    table = dp_solve(sizes, patterns, state_cap)
    chosen = table.reconstruct(tuple(sizes))
    gens = []
    for q in chosen:
        v, w = patterns[q]
        counts = {reps[c]: x for c, x in enumerate(v) if x}
        gens.append(CoverSet(_normalize(counts), w))
    real = realize_cover(gens, instance.demand, instance.order)
    return DPResult(Cover(real.sets), grouping, table, table.value(tuple(sizes)))


# --------------------------------------------------------------------------
# randomized multiplicative rounding


def rand_lambda(total: int) -> float:
    levels = math.log2(total) if total >= 1 else 0.0
    return max(8 * math.log(4 + 4 * levels), 4.0)


@dataclass(frozen=True)
class Trial:
    index: int
    events_ok: bool
    cost_ok: bool
    realized: bool
    cost: Fraction

    @property
    def success(self) -> bool:
        return self.events_ok and self.cost_ok and self.realized


@dataclass(frozen=True)
class RandRoundResult:
    cover: Cover | None
    log: tuple[Trial, ...]
    lam: Fraction


def _level_coverage(bought: Sequence[tuple[CoverSet, int]], groups: list[dict[int, int]],
                    demand: Mapping[int, int]) -> list[Fraction]:
    """Slots each group receives when a pattern's copies of a type spread evenly over its copies."""
    out = []
    for g in groups:
        tot = Fraction(0)
        for p, times in bought:
            if not times:
                continue
            pc = p.counts
            for t, c in g.items():
                if t in pc:
                    tot += Fraction(times * pc[t] * c, demand[t])
        out.append(tot)
    return out


def rand_mult_round(instance: Instance, x, seed: int, trials: int = DEFAULT_TRIAL_CAP,
                    opt_f: Fraction | None = None, stop_on_success: bool = True) -> RandRoundResult:
    """Buy ``floor(lam x_p)`` copies plus one with probability ``{lam x_p}``; retry until success.

    Raises :class:`TrialCapReached` when no trial succeeds.
    """
    if not instance.order.total_order:
        raise UnsupportedOrderError("multiplicative rounding needs a total order")
    demand = instance.demand
    lam = Fraction(rand_lambda(instance.total_multiplicity))
    opt_f = x.objective if opt_f is None else opt_f
    groups = dyadic_grouping(instance).group_of_copies()
    rng = random.Random(seed)
    log: list[Trial] = []
    found = None
    for t in range(trials):
        bought = []
        for p, w in x.weights:
            lw = lam * w
            base = lw.numerator // lw.denominator
            extra = 1 if rng.random() < float(lw - base) else 0
            bought.append((p, base + extra))
        cost = sum((p.cost * c for p, c in bought), Fraction(0))
        cov = _level_coverage(bought, groups, demand)
        events_ok = all(c >= 2 * sum(g.values()) for c, g in zip(cov, groups))
        cost_ok = cost <= 4 * lam * opt_f
        gens = [p for p, c in bought for _ in range(c)]
        realized = None
        if events_ok and cost_ok:
            try:
                realized = realize_cover(gens, demand, instance.order)
            except PrefixViolation:
                realized = None
        trial = Trial(t, events_ok, cost_ok, realized is not None, cost)
        log.append(trial)
        if trial.success and found is None:
            found = Cover(realized.sets)
            if stop_on_success:
                break
    if found is None:
        raise TrialCapReached(tuple(log))
    return RandRoundResult(found, tuple(log), lam)


# --------------------------------------------------------------------------
# exact optimum


def generator_view(instance: Instance, limit: int = 20000) -> list[CoverSet]:
    """Sets whose multisets suffice for an optimal cover."""
    if instance.system.kind != "adapter":
        return list(instance.system.sets)
    from .lp import enumerate_patterns

    return enumerate_patterns(instance, {i: 1 for i in instance.ids}, limit=limit)


def slot_rows(instance: Instance, demand: Mapping[int, int], up_limit: int = 1 << 14):
    """Hall rows: (up-set, demand inside it) that slot counts must meet."""
    order = instance.order
    ids = [i for i in instance.ids if demand.get(i, 0)]
    if order.total_order:
        rows = []
        prefix: set[int] = set()
        need = 0
        for i in order.sequence:
            prefix.add(i)
            if demand.get(i, 0):
                need += demand[i]
                rows.append((frozenset(prefix), need))
        return rows
    if 1 << len(ids) > up_limit:
        raise BudgetExhausted("too many up-sets for the exact oracle")
    seen: dict[frozenset, int] = {}
    up = order.up
    for r in range(1, len(ids) + 1):
        for X in itertools.combinations(ids, r):
            U = frozenset().union(*(up[i] for i in X))
            if U not in seen:
                seen[U] = sum(demand.get(i, 0) for i in U)
    return sorted(seen.items(), key=lambda ur: (len(ur[0]), sorted(ur[0])))


def slot_lp(instance: Instance, demand: Mapping[int, int] | None = None):
    """OPT_f through generator slot counts instead of patterns."""
    from .lp import solve_lp

    demand = instance.demand if demand is None else demand
    gens = generator_view(instance)
    rows = slot_rows(instance, demand)
    cols = [_slot_column(G, rows) for G in gens]
    return solve_lp(cols, {r: need for r, (_, need) in enumerate(rows)})


def _slot_column(G: CoverSet, rows) -> CoverSet:
    return CoverSet(tuple((r, sum(c for g, c in G.elements if g in U)) for r, (U, _) in enumerate(rows)
                          if any(g in U for g, _ in G.elements)), G.cost)


@dataclass(frozen=True)
class ExactResult:
    value: Fraction
    generators: tuple[CoverSet, ...]
    nodes: int


def exact_search(instance: Instance, budget: int = DEFAULT_NODE_BUDGET, incumbent=None) -> ExactResult | None:
    """Branch and bound over generator multiplicities; None when the budget runs out."""
    from .lp import solve_lp

    demand = instance.demand
    if not any(demand.values()):
        return ExactResult(Fraction(0), (), 0)
    gens = generator_view(instance)
    try:
        rows = slot_rows(instance, demand)
    except BudgetExhausted:
        return None
    cols = [_slot_column(G, rows) for G in gens]
    grid = lcm(*(G.cost.denominator for G in gens)) if gens else 1

    if incumbent is None:
        from .rounding import additive_round

        try:
            sol, _ = additive_round(instance)
        except InfeasibleError:
            return None
        incumbent = sol
    best_val = incumbent.cost
    best_pick: tuple[CoverSet, ...] | None = None
    if isinstance(incumbent, Cover):
        best_pick = incumbent.sets

    def floor_grid(v: Fraction) -> Fraction:
        # smallest achievable integral cost >= v
        q = v * grid
        return Fraction(-((-q.numerator) // q.denominator), grid)

    nodes = 0
    stack = [((0,) * len(gens), frozenset())]
    while stack:
        lb, banned = stack.pop()
        nodes += 1
        if nodes > budget:
            return None
        base = sum((gens[q].cost * c for q, c in enumerate(lb) if c), Fraction(0))
        need = {}
        for r, (U, want) in enumerate(rows):
            have = sum(dict(cols[q].elements).get(r, 0) * c for q, c in enumerate(lb) if c)
            if want > have:
                need[r] = want - have
        if not need:
            if base < best_val:
                best_val = base
                best_pick = tuple(gens[q] for q, c in enumerate(lb) for _ in range(c))
            continue
        usable = [(q, cols[q]) for q in range(len(gens)) if q not in banned]
        try:
            x = solve_lp([c for _, c in usable], need)
        except InfeasibleError:
            continue
        bound = floor_grid(base + x.objective)
        if bound >= best_val:
            continue
        weight = {}
        for p, w in x.weights:
            for q, c in usable:
                if c is p or (c.elements == p.elements and c.cost == p.cost):
                    weight[q] = weight.get(q, Fraction(0)) + w
                    break
        frac = [q for q, w in weight.items() if w.denominator != 1]
        if not frac:
            v = base + x.objective
            if v < best_val:
                best_val = v
                lb2 = list(lb)
                for q, w in weight.items():
                    lb2[q] += int(w)
                best_pick = tuple(gens[q] for q, c in enumerate(lb2) for _ in range(c))
            continue
        q = max(frac, key=lambda q: (weight[q], -q))
        more = list(lb)
        more[q] += 1
        # depth first: try "one more copy" after "forbid"
        stack.append((lb, banned | {q}))
        stack.append((tuple(more), banned))
    if best_pick is None:
        return None
    return ExactResult(best_val, best_pick, nodes)


def exact_opt(instance: Instance, budget: int = DEFAULT_NODE_BUDGET) -> Fraction | None:
    """Exact integral optimum, or None when the node budget is exhausted."""
    res = exact_search(instance, budget)
    return None if res is None else res.value


def generators_cover(instance: Instance, gens: Sequence[CoverSet], demand: Mapping[int, int] | None = None) -> bool:
    demand = instance.demand if demand is None else demand
    if instance.order.total_order:
        return check_prefix(gens, demand, instance.order)
    slots: dict[int, int] = {}
    for G in gens:
        for i, c in G.elements:
            slots[i] = slots.get(i, 0) + c
    return assignable({i: c for i, c in demand.items() if c}, slots, instance.order)
