"""Pseudo sizes, chain covers and the largest total set size.

For a listed family, ``size(i) = min_G w(G) / m(G, i)`` where ``m(G, i)``
counts the slots of generator ``G`` above or equal to ``i``: any feasible set
made of elements above ``i`` is dominated by some ``G`` and has at most
``m(G, i)`` elements, and filling those slots with copies of ``i`` attains the
ratio.  The witness of ``i`` is that filled set.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .model import CoverSet, InfeasibleError, InputError, Instance, _normalize
from .rational import floor_log2_inv, harmonic


@dataclass(frozen=True)
class PseudoSizeVector:
    sizes: dict[int, Fraction]
    witnesses: dict[int, CoverSet] | None = None
    natural: bool = False

    def __getitem__(self, i: int) -> Fraction:
        return self.sizes[i]

    @property
    def s_min(self) -> Fraction:
        return min(self.sizes.values())

    def log_term(self, ids=None) -> int:
        """Number of size classes, ``floor(log2(1/s_min)) + 1``."""
        vals = self.sizes.values() if ids is None else [self.sizes[i] for i in ids]
        vals = list(vals)
        if not vals:
            return 0
        return floor_log2_inv(min(vals)) + 1


@dataclass(frozen=True)
class AlphaBound:
    alpha: Fraction
    mode: str  # "exact" | "analytic"


def size_class(s: Fraction) -> int:
    """Index l with (1/2)**(l+1) < s <= (1/2)**l."""
    return floor_log2_inv(s)


def _max_fill(adapter, i: int, cap: int = 1 << 62) -> int:
    if not adapter.feasible({i: 1}):
        return 0
    hi = 1
    while hi < cap and adapter.feasible({i: hi * 2}):
        hi *= 2
    lo, hi = hi, min(hi * 2, cap)
    # lo feasible, hi infeasible or cap
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if adapter.feasible({i: mid}):
            lo = mid
        else:
            hi = mid
    return hi if adapter.feasible({i: hi}) else lo


def _adapter_fill_sizes(instance: Instance, scan_limit: int = 4096) -> tuple[dict, dict]:
    adapter = instance.adapter
    sizes, witnesses = {}, {}
    for i in instance.ids:
        top = _max_fill(adapter, i)
        if top == 0:
            raise InfeasibleError(i)
        if adapter.unit_cost or top > scan_limit:
            best_m = top
            best = adapter.cost({i: top}) / top
        else:
            best_m, best = None, None
            for m in range(1, top + 1):
                r = adapter.cost({i: m}) / m
                if best is None or r < best:
                    best_m, best = m, r
        if best <= 0:
            raise InputError(f"item {i} fits a zero-cost set; pseudo sizes must be positive")
        sizes[i] = best
        witnesses[i] = CoverSet(((i, best_m),), adapter.cost({i: best_m}))
    return sizes, witnesses


def compute_sizes(instance: Instance) -> PseudoSizeVector:
    """Order-monotone pseudo sizes with their witness sets."""
    if instance.system.kind == "adapter":
        sizes, witnesses = _adapter_fill_sizes(instance)
        return PseudoSizeVector(sizes, witnesses, False)
    order = instance.order
    sizes, witnesses = {}, {}
    for i in instance.ids:
        up = order.up[i]
        best = None
        for G in instance.system.sets:
            m = sum(c for g, c in G.elements if g in up)
            if m == 0:
                continue
            r = G.cost / m
            if best is None or r < best[0] or (r == best[0] and m < best[1]):
                best = (r, m)
        if best is None:
            raise InfeasibleError(i)
        if best[0] <= 0:
            raise InputError(f"item {i} fits a zero-cost set; pseudo sizes must be positive")
        sizes[i] = best[0]
        wit = {i: best[1]}
        witnesses[i] = CoverSet(_normalize(wit), instance.member(wit)[1])
    return PseudoSizeVector(sizes, witnesses, False)


def pseudo_sizes(instance: Instance) -> PseudoSizeVector:
    """Sizes used by the rounding: native ones where the variant prescribes them."""
    adapter = instance.adapter
    if adapter is not None and adapter.natural_sizes:
        return PseudoSizeVector(dict(adapter.pseudo_sizes()), None, True)
    return compute_sizes(instance)


# --------------------------------------------------------------------------
# chain covers


def chain_certificate(copies: Mapping[int, int], s: PseudoSizeVector) -> Fraction:
    """Cost bound: ``2 * total size + class count`` (or ``+1`` for native sizes)."""
    ids = [i for i, c in copies.items() if c]
    if not ids:
        return Fraction(0)
    total = sum((c * s[i] for i, c in copies.items() if c), Fraction(0))
    extra = 1 if s.natural else s.log_term(ids)
    return 2 * total + extra


def cover_chain(copies: Mapping[int, int], s: PseudoSizeVector, instance: Instance) -> list[CoverSet]:
    """Cover copies from one chain, class by class, with witness sets.

    Within a size class the largest uncovered element's witness is reused on
    the next ``|witness|`` largest uncovered copies.
    """
    if s.natural and instance.adapter is not None:
        native = instance.adapter.native_cover(copies)
        if native is not None:
            return native
    if s.witnesses is None:
        raise InputError("these pseudo sizes carry no witness sets")
    classes: dict[int, list[int]] = {}
    for i, c in copies.items():
        if c:
            classes.setdefault(size_class(s[i]), []).append(i)
    out: list[CoverSet] = []
    for ell in sorted(classes):
        runs = [[i, copies[i]] for i in instance.descending(classes[ell])]
        pos = 0
        while pos < len(runs):
            head, left = runs[pos]
            m = len(s.witnesses[head])
            if left >= m:
                q, rem = divmod(left, m)
                S = CoverSet(((head, m),), instance.member({head: m})[1])
                out.extend([S] * q)
                runs[pos][1] = rem
                if rem == 0:
                    pos += 1
                continue
            take: dict[int, int] = {}
            need = m
            while need and pos < len(runs):
                i, left = runs[pos]
                t = min(left, need)
                take[i] = take.get(i, 0) + t
                need -= t
                runs[pos][1] -= t
                if runs[pos][1] == 0:
                    pos += 1
            ok, cost = instance.member(take)
            if not ok:
                raise RuntimeError(f"chain cover produced an infeasible set {take}")
            out.append(CoverSet(_normalize(take), cost))
    return out


def discard_tiny(instance: Instance, s: PseudoSizeVector, demand: Mapping[int, int] | None = None):
    """Drop types with ``s_i < 1/n^2`` and cover them directly.

    ``n`` is the larger of the element count and the largest witness, which
    keeps every tiny witness below cost ``1/n``.  Returns the reduced demand,
    the cover and its cost.
    """
    b = dict(instance.demand if demand is None else demand)
    total = sum(b.values())
    n = total
    if s.witnesses:
        n = max([n] + [len(w) for w in s.witnesses.values()])
    if n == 0:
        return b, [], Fraction(0)
    thresh = Fraction(1, n * n)
    tiny = {i: c for i, c in b.items() if c and s[i] < thresh}
    if not tiny:
        return b, [], Fraction(0)
    cover: list[CoverSet] = []
    native = None
    if s.natural and instance.adapter is not None:
        native = instance.adapter.native_cover(tiny)
    if native is not None:
        cover = native
    else:
        for i in instance.descending(tiny):
            m = len(s.witnesses[i])
            left = tiny[i]
            while left:
                t = min(m, left)
                cover.append(CoverSet(((i, t),), instance.member({i: t})[1]))
                left -= t
    for i in tiny:
        b[i] = 0
    cost = sum((S.cost for S in cover), Fraction(0))
    return b, cover, cost


def alpha_bound(instance: Instance, s: PseudoSizeVector, mode: str = "exact") -> AlphaBound:
    """Largest total pseudo size of a feasible set."""
    if mode == "analytic":
        k = instance.k
        if k is None:
            k = max((len(G) for G in instance.system.sets), default=1) if instance.system.sets else 1
        if instance.system.kind == "adapter":
            top = Fraction(1)
        else:
            top = max((G.cost for G in instance.system.sets), default=Fraction(1))
        return AlphaBound(instance.d * harmonic(k) * top, "analytic")
    if mode != "exact":
        raise InputError(f"unknown alpha mode {mode!r}")
    if instance.system.kind == "adapter":
        return AlphaBound(instance.adapter.max_weight(s.sizes), "exact")
    best = max(
        (sum((c * s[g] for g, c in G.elements), Fraction(0)) for G in instance.system.sets),
        default=Fraction(0),
    )
    return AlphaBound(best, "exact")
