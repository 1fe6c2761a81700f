"""Ground sets, replacement orders and set systems.

Sets are multisets throughout: a :class:`CoverSet` maps item ids to copy
counts.  A listed family (explicit or generators) is read as the family of
everything some listed set dominates, and the cost of a derived set is the
cheapest listed set dominating it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

import networkx as nx

from .rational import Rational, to_fraction


class InputError(ValueError):
    """Malformed instance data or parameters."""


class UnsupportedOrderError(InputError):
    """Operation needs a total order."""


class InfeasibleError(Exception):
    def __init__(self, item, message: str | None = None):
        self.item = item
        super().__init__(message or f"item {item!r} is not covered by any feasible set")


class PrefixViolation(Exception):
    """Raised by :func:`realize_cover` when the prefix slot condition fails."""

    def __init__(self, item: int, position: int, slots: int, demand: int):
        self.item = item
        self.position = position
        self.slots = slots
        self.demand = demand
        super().__init__(
            f"prefix ending at item {item} (position {position}) has {slots} slots "
            f"for {demand} demanded copies"
        )


# --------------------------------------------------------------------------
# orders


@dataclass(frozen=True)
class OrderRelation:
    """A partial order stored as its transitive closure.

    ``pairs`` holds every strict pair ``(j, i)`` with ``j`` below ``i``.
    """

    ground: tuple[int, ...]
    pairs: frozenset[tuple[int, int]]
    total_order: bool = False

    @classmethod
    def total(cls, sequence: Iterable[int]) -> "OrderRelation":
        """Total order from a sequence listed largest first."""
        seq = tuple(sequence)
        if len(set(seq)) != len(seq):
            raise InputError("total order sequence contains duplicates")
        pairs = frozenset((seq[b], seq[a]) for a in range(len(seq)) for b in range(a + 1, len(seq)))
        order = cls(tuple(sorted(seq)), pairs, True)
        order.__dict__["sequence"] = seq
        return order

    @classmethod
    def from_pairs(cls, ground: Iterable[int], pairs: Iterable[Sequence[int]]) -> "OrderRelation":
        """Close ``pairs`` (``(j, i)`` meaning j below i) transitively."""
        nodes = tuple(sorted(set(ground)))
        known = set(nodes)
        graph = nx.DiGraph()
        graph.add_nodes_from(nodes)
        for j, i in pairs:
            if j not in known or i not in known:
                raise InputError(f"order pair ({j}, {i}) uses an unknown item")
            if j != i:
                graph.add_edge(i, j)  # edge from larger to smaller
        if not nx.is_directed_acyclic_graph(graph):
            raise InputError("order pairs contain a cycle (not antisymmetric)")
        closure = frozenset(
            (j, i) for i in nodes for j in nx.descendants(graph, i)
        )
        n = len(nodes)
        is_total = len(closure) == n * (n - 1) // 2
        order = cls(nodes, closure, is_total)
        if is_total:
            above = {x: 0 for x in nodes}
            for j, _ in closure:
                above[j] += 1
            order.__dict__["sequence"] = tuple(sorted(nodes, key=lambda x: above[x]))
        return order

    @cached_property
    def sequence(self) -> tuple[int, ...]:
        if not self.total_order:
            raise UnsupportedOrderError("order is not total")
        above = {x: 0 for x in self.ground}
        for j, _ in self.pairs:
            above[j] += 1
        return tuple(sorted(self.ground, key=lambda x: above[x]))

    @cached_property
    def rank(self) -> dict[int, int]:
        return {x: r for r, x in enumerate(self.sequence)}

    @cached_property
    def up(self) -> dict[int, frozenset[int]]:
        """``up[j]`` is every ``i`` with j below-or-equal i."""
        acc: dict[int, set[int]] = {x: {x} for x in self.ground}
        for j, i in self.pairs:
            acc[j].add(i)
        return {x: frozenset(v) for x, v in acc.items()}

    @cached_property
    def down(self) -> dict[int, frozenset[int]]:
        acc: dict[int, set[int]] = {x: {x} for x in self.ground}
        for j, i in self.pairs:
            acc[i].add(j)
        return {x: frozenset(v) for x, v in acc.items()}

    def restrict(self, ids: Iterable[int]) -> "OrderRelation":
        keep = set(ids)
        if self.total_order:
            return OrderRelation.total(x for x in self.sequence if x in keep)
        pairs = frozenset((j, i) for j, i in self.pairs if j in keep and i in keep)
        return OrderRelation.from_pairs(keep, pairs)

    def __contains__(self, item: int) -> bool:
        return item in self.up


def leq(order: OrderRelation, j: int, i: int) -> bool:
    """True iff ``j`` is below or equal to ``i``."""
    for x in (j, i):
        if x not in order.up:
            raise InputError(f"unknown item id {x}")
    return i in order.up[j]


def chain_decompose(order: OrderRelation) -> list[list[int]]:
    """Minimum chain cover, each chain listed largest first.

    Computed from a maximum matching between "larger" and "smaller" copies of
    the ground set over the strict comparability pairs.
    """
    if order.total_order:
        return [list(order.sequence)] if order.ground else []
    # integer-tuple labels keep node hashing, and so the matching, stable across runs
    graph = nx.Graph()
    left = [(0, x) for x in order.ground]
    graph.add_nodes_from(left)
    graph.add_nodes_from((1, x) for x in order.ground)
    for j, i in sorted(order.pairs):
        graph.add_edge((0, i), (1, j))
    matching = nx.bipartite.hopcroft_karp_matching(graph, top_nodes=left)
    succ = {u[1]: v[1] for u, v in matching.items() if u[0] == 0}
    has_pred = set(succ.values())
    chains = []
    for start in order.ground:
        if start in has_pred:
            continue
        chain = [start]
        while chain[-1] in succ:
            chain.append(succ[chain[-1]])
        chains.append(chain)
    # a matching on the closure yields chains that are totally ordered
    chains.sort(key=lambda c: c[0])
    return chains


@dataclass(frozen=True)
class ItemType:
    id: int
    chain_id: int
    rank: int
    multiplicity: int


# --------------------------------------------------------------------------
# sets


def _normalize(elements: Mapping[int, int] | Iterable[int]) -> tuple[tuple[int, int], ...]:
    counts: dict[int, int] = {}
    if isinstance(elements, Mapping):
        for key, c in elements.items():
            c = int(c)
            if c < 0:
                raise InputError(f"negative count for item {key}")
            if c:
                counts[int(key)] = counts.get(int(key), 0) + c
    else:
        for key in elements:
            counts[int(key)] = counts.get(int(key), 0) + 1
    return tuple(sorted(counts.items()))


@dataclass(frozen=True)
class CoverSet:
    """A multiset of item ids with a cost in [0, 1]."""

    elements: tuple[tuple[int, int], ...]
    cost: Fraction = Fraction(1)

    @classmethod
    def of(cls, elements: Mapping[int, int] | Iterable[int], cost: Rational = 1) -> "CoverSet":
        c = to_fraction(cost)
        if not 0 <= c <= 1:
            raise InputError(f"set cost {c} outside [0, 1]")
        return cls(_normalize(elements), c)

    @cached_property
    def counts(self) -> dict[int, int]:
        return dict(self.elements)

    def __len__(self) -> int:
        return sum(c for _, c in self.elements)

    def with_cost(self, cost: Rational) -> "CoverSet":
        return CoverSet(self.elements, to_fraction(cost))

    def __str__(self) -> str:
        body = ", ".join(f"{i}x{c}" if c > 1 else str(i) for i, c in self.elements)
        return f"{{{body}}}@{self.cost}"


def _check_ids(order: OrderRelation, counts: Mapping[int, int]) -> None:
    for i in counts:
        if i not in order.up:
            raise InputError(f"unknown item id {i}")


def assignable(demand: Mapping[int, int], slots: Mapping[int, int], order: OrderRelation) -> bool:
    """Can every demanded copy take a distinct slot whose item is above or equal to it?"""
    need = sum(demand.values())
    if need == 0:
        return True
    if need > sum(slots.values()):
        return False
    if order.total_order:
        rank = order.rank
        events = sorted(
            [(rank[i], 0, c) for i, c in slots.items() if c]
            + [(rank[i], 1, c) for i, c in demand.items() if c]
        )
        balance = 0
        for _, kind, c in events:
            balance += c if kind == 0 else -c
            if balance < 0:
                return False
        return True
    graph = nx.DiGraph()
    for i, c in demand.items():
        if c:
            graph.add_edge("src", ("d", i), capacity=c)
            for j in order.up[i]:
                if slots.get(j):
                    graph.add_edge(("d", i), ("s", j), capacity=need)
    for j, c in slots.items():
        if c:
            graph.add_edge(("s", j), "snk", capacity=c)
    if "snk" not in graph:
        return False
    return nx.maximum_flow_value(graph, "src", "snk") == need


def dominates(big: CoverSet | Mapping[int, int], small: CoverSet | Mapping[int, int],
              order: OrderRelation) -> bool:
    """True iff each copy in ``small`` maps injectively to a copy in ``big`` above or equal to it."""
    b = big.counts if isinstance(big, CoverSet) else dict(big)
    s = small.counts if isinstance(small, CoverSet) else dict(small)
    _check_ids(order, b)
    _check_ids(order, s)
    return assignable(s, b, order)


# --------------------------------------------------------------------------
# set systems


class Adapter:
    """Set system given by a feasibility predicate and a cost rule.

    Subclasses live in :mod:`ordcover.variants`.  Counts are id -> copies.
    """

    kind = "adapter"
    #: whether :meth:`pseudo_sizes` returns native sizes
    natural_sizes = False
    unit_cost = False

    def item_ids(self) -> list[int]:
        raise NotImplementedError

    def order(self) -> OrderRelation:
        raise NotImplementedError

    def feasible(self, counts: Mapping[int, int]) -> bool:
        raise NotImplementedError

    def cost(self, counts: Mapping[int, int]) -> Fraction:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def pseudo_sizes(self) -> dict[int, Fraction] | None:
        return None

    def native_cover(self, copies: Mapping[int, int]) -> list[CoverSet] | None:
        return None

    def max_card(self) -> int | None:
        return None

    # generic search helpers; subclasses override with dynamic programs

    def iter_feasible(self, ids: Sequence[int] | None = None, limit: int | None = None) -> Iterator[dict[int, int]]:
        """Every nonempty feasible multiset over ``ids`` (feasibility is downward closed)."""
        ids = list(self.item_ids() if ids is None else ids)
        produced = 0
        current: dict[int, int] = {}

        def rec(pos: int) -> Iterator[dict[int, int]]:
            nonlocal produced
            for q in range(pos, len(ids)):
                t = ids[q]
                current[t] = current.get(t, 0) + 1
                if self.feasible(current):
                    produced += 1
                    if limit is not None and produced > limit:
                        raise CapacityError(f"more than {limit} feasible sets")
                    yield dict(current)
                    yield from rec(q)
                current[t] -= 1
                if not current[t]:
                    del current[t]

        yield from rec(0)

    def price(self, duals: Mapping[int, Fraction]) -> tuple[dict[int, int], Fraction] | None:
        """Feasible multiset maximizing ``duals . p - cost(p)`` when that is positive."""
        best, best_val = None, Fraction(0)
        ids = [t for t in self.item_ids() if duals.get(t, 0) > 0]
        for counts in self.iter_feasible(ids):
            val = sum(duals[t] * c for t, c in counts.items()) - self.cost(counts)
            if val > best_val:
                best, best_val = counts, val
        if best is None:
            return None
        return best, self.cost(best)

    def max_weight(self, values: Mapping[int, Fraction]) -> Fraction:
        ids = [t for t in self.item_ids() if values.get(t, 0) > 0]
        best = Fraction(0)
        for counts in self.iter_feasible(ids):
            best = max(best, sum(values[t] * c for t, c in counts.items()))
        return best


class CapacityError(RuntimeError):
    """Enumeration exceeded a configured limit."""


@dataclass(frozen=True)
class SetSystem:
    kind: str  # "explicit" | "generators" | "adapter"
    sets: tuple[CoverSet, ...] = ()
    adapter: Adapter | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("explicit", "generators", "adapter"):
            raise InputError(f"unknown system kind {self.kind!r}")
        if self.kind == "adapter" and self.adapter is None:
            raise InputError("adapter system needs an adapter")

    def __eq__(self, other):
        if not isinstance(other, SetSystem):
            return NotImplemented
        if self.kind != other.kind or self.sets != other.sets:
            return False
        if self.adapter is None or other.adapter is None:
            return self.adapter is other.adapter
        return self.adapter.kind == other.adapter.kind and self.adapter.params() == other.adapter.params()

    def __hash__(self):
        return hash((self.kind, self.sets))


def member(system: SetSystem, S: CoverSet | Mapping[int, int], order: OrderRelation) -> tuple[bool, Fraction | None]:
    """Membership in the generated family and the cost of ``S``."""
    counts = S.counts if isinstance(S, CoverSet) else {i: c for i, c in S.items() if c}
    if system.kind == "adapter":
        if not counts:
            return True, Fraction(0)
        if not system.adapter.feasible(counts):
            return False, None
        return True, system.adapter.cost(counts)
    best = None
    for G in system.sets:
        if (best is None or G.cost < best) and dominates(G, counts, order):
            best = G.cost
    if best is None:
        if not counts:
            return True, Fraction(0)
        return False, None
    return True, best


# --------------------------------------------------------------------------
# instances


@dataclass(frozen=True)
class Instance:
    items: tuple[tuple[int, int], ...]  # (id, multiplicity)
    order: OrderRelation
    system: SetSystem
    k: int | None = None
    family: str = ""

    def __post_init__(self):
        ids = [i for i, _ in self.items]
        if len(set(ids)) != len(ids):
            raise InputError("duplicate item ids")
        if set(ids) != set(self.order.ground):
            raise InputError("order ground set differs from item ids")
        for i, m in self.items:
            if m < 0:
                raise InputError(f"negative multiplicity for item {i}")

    @property
    def ids(self) -> list[int]:
        return [i for i, _ in self.items]

    @cached_property
    def demand(self) -> dict[int, int]:
        return {i: m for i, m in self.items}

    @property
    def n(self) -> int:
        return len(self.items)

    @property
    def total_multiplicity(self) -> int:
        return sum(m for _, m in self.items)

    @cached_property
    def chains(self) -> list[list[int]]:
        return chain_decompose(self.order)

    @property
    def d(self) -> int:
        return len(self.chains)

    @cached_property
    def item_types(self) -> list[ItemType]:
        out = []
        for cid, chain in enumerate(self.chains):
            for r, i in enumerate(chain):
                out.append(ItemType(i, cid, r, self.demand[i]))
        return sorted(out, key=lambda t: t.id)

    @property
    def adapter(self) -> Adapter | None:
        return self.system.adapter

    def member(self, S: CoverSet | Mapping[int, int]) -> tuple[bool, Fraction | None]:
        return member(self.system, S, self.order)

    def with_demand(self, demand: Mapping[int, int]) -> "Instance":
        items = tuple((i, int(demand.get(i, 0))) for i, _ in self.items)
        return Instance(items, self.order, self.system, self.k, self.family)

    def descending(self, ids: Iterable[int]) -> list[int]:
        """Sort ids largest first (total orders) or by chain then rank."""
        if self.order.total_order:
            rank = self.order.rank
            return sorted(ids, key=lambda i: rank[i])
        pos = {t.id: (t.chain_id, t.rank) for t in self.item_types}
        return sorted(ids, key=lambda i: pos[i])


# --------------------------------------------------------------------------
# validation


@dataclass
class Violation:
    kind: str  # closure | cost-monotonicity | cost-range | cardinality | order
    detail: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    truncated: bool = False

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, detail: str) -> None:
        self.violations.append(Violation(kind, detail))


def _swap(counts: Mapping[int, int], i: int, j: int) -> dict[int, int]:
    out = dict(counts)
    out[i] -= 1
    if not out[i]:
        del out[i]
    out[j] = out.get(j, 0) + 1
    return out


def validate(instance: Instance, sample_limit: int = 4096) -> ValidationReport:
    """Check order-respect, cost monotonicity, cost range and cardinality."""
    report = ValidationReport()
    order, system, k = instance.order, instance.system, instance.k
    if system.kind != "adapter":
        sets = system.sets
        for S in sets:
            _check_ids(order, S.counts)
            if not 0 <= S.cost <= 1:
                report.add("cost-range", f"{S} cost outside [0, 1]")
            if k is not None and len(S) > k:
                report.add("cardinality", f"{S} has {len(S)} > k={k} elements")
        if system.kind == "explicit":
            listed = {S.elements for S in sets}
            for S in sets:
                for i in S.counts:
                    for j in order.down[i]:
                        if j == i or j in S.counts:
                            continue
                        swapped = _normalize(_swap(S.counts, i, j))
                        if swapped not in listed:
                            report.add("closure", f"replacing {i} by {j} in {S} leaves the family")
        for A, B in itertools.permutations(sets, 2):
            if B.cost > A.cost and dominates(A, B, order):
                report.add("cost-monotonicity", f"{B} costs more than its dominator {A}")
        return report

    adapter = system.adapter
    try:
        family = list(adapter.iter_feasible(limit=sample_limit))
    except CapacityError:
        report.truncated = True
        family = []
        for counts in adapter.iter_feasible():
            family.append(counts)
            if len(family) >= sample_limit:
                break
    for counts in family:
        w = adapter.cost(counts)
        if not 0 <= w <= 1:
            report.add("cost-range", f"{counts} cost {w} outside [0, 1]")
        if k is not None and sum(counts.values()) > k:
            report.add("cardinality", f"{counts} exceeds k={k}")
        for i in list(counts):
            smaller = dict(counts)
            smaller[i] -= 1
            if not smaller[i]:
                del smaller[i]
            if smaller and adapter.cost(smaller) > w:
                report.add("cost-monotonicity", f"removing {i} from {counts} raises the cost")
            for j in order.down[i]:
                if j == i:
                    continue
                swapped = _swap(counts, i, j)
                if not adapter.feasible(swapped):
                    report.add("closure", f"replacing {i} by {j} in {counts} is infeasible")
                elif adapter.cost(swapped) > w:
                    report.add("cost-monotonicity", f"replacing {i} by {j} in {counts} raises the cost")
    return report


# --------------------------------------------------------------------------
# prefix condition and slot realization (total orders)


def _prefix_profile(generators: Sequence[CoverSet], demand: Mapping[int, int], order: OrderRelation):
    if not order.total_order:
        raise UnsupportedOrderError("prefix condition needs a total order")
    for G in generators:
        _check_ids(order, G.counts)
    _check_ids(order, demand)
    slots = {i: 0 for i in order.sequence}
    for G in generators:
        for i, c in G.elements:
            slots[i] += c
    return slots


def check_prefix(generators: Sequence[CoverSet], demand: Mapping[int, int], order: OrderRelation) -> bool:
    """For every prefix of the order: slots inside it >= demand inside it."""
    slots = _prefix_profile(generators, demand, order)
    have = need = 0
    for i in order.sequence:
        have += slots[i]
        need += demand.get(i, 0)
        if have < need:
            return False
    return True


@dataclass(frozen=True)
class Realization:
    """Slot assignment: ``(item, generator index, slot item, copies)`` runs."""

    assignment: tuple[tuple[int, int, int, int], ...]
    sets: tuple[CoverSet, ...]  # dominated sets actually used, one per generator

    @property
    def cost(self) -> Fraction:
        return sum((S.cost for S in self.sets), Fraction(0))


def realize_cover(generators: Sequence[CoverSet], demand: Mapping[int, int], order: OrderRelation) -> Realization:
    """Assign demanded copies, largest first, to the largest free slots.

    Raises :class:`PrefixViolation` naming the first prefix with too few slots.
    """
    _prefix_profile(generators, demand, order)
    rank = order.rank
    pool = sorted(
        ((rank[i], g, i, c) for g, G in enumerate(generators) for i, c in G.elements),
    )
    runs = []
    per_gen: list[dict[int, int]] = [dict() for _ in generators]
    p = 0
    left = pool[0][3] if pool else 0
    have = 0
    need = 0
    for pos, item in enumerate(order.sequence):
        c = demand.get(item, 0)
        need += c
        while c:
            if p >= len(pool) or pool[p][0] > rank[item]:
                slots_here = sum(q[3] for q in pool if q[0] <= rank[item])
                raise PrefixViolation(item, pos + 1, slots_here, need)
            _, g, slot_item, _ = pool[p]
            take = min(c, left)
            runs.append((item, g, slot_item, take))
            per_gen[g][item] = per_gen[g].get(item, 0) + take
            c -= take
            left -= take
            have += take
            if not left:
                p += 1
                left = pool[p][3] if p < len(pool) else 0
    sets = tuple(CoverSet(_normalize(per_gen[g]), G.cost) for g, G in enumerate(generators))
    return Realization(tuple(runs), sets)


def covers(sets: Iterable[CoverSet], demand: Mapping[int, int], order: OrderRelation) -> bool:
    """Do the slots of ``sets`` host every demanded copy (any order)?"""
    slots: dict[int, int] = {}
    for S in sets:
        for i, c in S.elements:
            slots[i] = slots.get(i, 0) + c
    return assignable({i: c for i, c in demand.items() if c}, slots, order)


@dataclass(frozen=True)
class Cover:
    """An integral solution: the sets bought, with repetition."""

    sets: tuple[CoverSet, ...]

    @property
    def cost(self) -> Fraction:
        return sum((S.cost for S in self.sets), Fraction(0))

    def __len__(self) -> int:
        return len(self.sets)

    def feasible_for(self, instance: "Instance", demand: Mapping[int, int] | None = None) -> bool:
        """Every set is a member and together they host the demand."""
        demand = instance.demand if demand is None else demand
        for S in self.sets:
            ok, w = instance.member(S)
            if not ok or w > S.cost:
                return False
        return covers(self.sets, demand, instance.order)
