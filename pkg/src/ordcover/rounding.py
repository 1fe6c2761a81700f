"""Additive-gap rounding: solve, buy floors, group the residual, repeat.

Every iteration moves the residual demand onto few item types by grouping
each size class of each chain, discarding the two end groups (covered
directly, chain by chain) and rounding every other group up to its largest
element.  The final single-type demand is covered by rounding up the LP.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .lp import FractionalSolution, residual, solve_instance, support, take_floors
from .lp import size as demand_size
from .model import Cover, CoverSet, Instance, covers, realize_cover
from .rational import ceil_frac, ceil_log2, floor_log2_inv, fmt, harmonic
from .sizes import (
    AlphaBound,
    PseudoSizeVector,
    alpha_bound,
    chain_certificate,
    cover_chain,
    discard_tiny,
    pseudo_sizes,
    size_class,
)


@dataclass(frozen=True)
class GroupingOutcome:
    rounded: dict[int, int]
    discarded: tuple[dict[int, int], ...]  # per chain
    group_size: dict[tuple[int, int], int]  # (chain, class) -> g
    discarded_size: tuple[Fraction, ...]

    @property
    def support(self) -> int:
        return support(self.rounded)


def group_round(b: Mapping[int, int], chains: Sequence[Sequence[int]], s: PseudoSizeVector,
                alpha: Fraction) -> GroupingOutcome:
    rounded: dict[int, int] = {}
    discarded = []
    gsize: dict[tuple[int, int], int] = {}
    dsize = []
    for mu, chain in enumerate(chains):
        classes: dict[int, list[int]] = {}
        for i in chain:
            if b.get(i, 0):
                classes.setdefault(size_class(s[i]), []).append(i)
        drop: dict[int, int] = {}
        for ell, members in sorted(classes.items()):
            g = ceil_frac(4 * 2**ell * Fraction(alpha))
            g = max(g, 1)
            gsize[(mu, ell)] = g
            copies = [(i, b[i]) for i in members]  # chain order is largest first
            total = sum(c for _, c in copies)
            groups = -(-total // g)
            # walk the copies, cutting every g of them
            pos = 0
            for i, c in copies:
                left = c
                while left:
                    q = pos // g
                    room = g - pos % g
                    t = min(left, room)
                    if q == 0 or q == groups - 1:
                        drop[i] = drop.get(i, 0) + t
                    else:
                        head = _group_head(copies, q * g)
                        rounded[head] = rounded.get(head, 0) + t
                    left -= t
                    pos += t
        discarded.append(drop)
        dsize.append(sum((c * s[i] for i, c in drop.items()), Fraction(0)))
    return GroupingOutcome(rounded, tuple(discarded), gsize, tuple(dsize))


def _group_head(copies, start: int) -> int:
    pos = 0
    for i, c in copies:
        if pos + c > start:
            return i
        pos += c
    raise AssertionError("group start past the end")


@dataclass(frozen=True)
class Iteration:
    support_before: int
    support_after: int
    floors_cost: Fraction
    discard_cost: Fraction
    discard_certificate: Fraction
    lp_shift: Fraction
    residual_size: Fraction

    @property
    def halved(self) -> bool:
        return 2 * self.support_after <= self.support_before

    def to_json(self) -> dict:
        return {
            "support_before": self.support_before,
            "support_after": self.support_after,
            "floors_cost": fmt(self.floors_cost),
            "discard_cost": fmt(self.discard_cost),
            "discard_certificate": fmt(self.discard_certificate),
            "lp_shift": fmt(self.lp_shift),
            "residual_size": fmt(self.residual_size),
        }


@dataclass
class GapReport:
    opt_f: Fraction
    cost: Fraction
    algorithm: str = "additive"
    exact_opt: Fraction | None = None
    iterations: tuple[Iteration, ...] = ()
    tiny_cost: Fraction = Fraction(0)
    tiny_lp_drop: Fraction = Fraction(0)
    final_cost: Fraction = Fraction(0)
    final_excess: Fraction = Fraction(0)
    certificate_bound: Fraction | None = None
    bound: Fraction | None = None
    alpha: AlphaBound | None = None
    s_min: Fraction | None = None
    extra: dict = field(default_factory=dict)

    @property
    def additive_gap(self) -> Fraction:
        top = self.cost if self.exact_opt is None else self.exact_opt
        return top - self.opt_f

    @property
    def ratio(self) -> Fraction | None:
        top = self.cost if self.exact_opt is None else self.exact_opt
        return None if self.opt_f == 0 else top / self.opt_f

    def certificate_terms(self) -> list[tuple[str, Fraction]]:
        terms = [("tiny_cost", self.tiny_cost), ("tiny_lp_drop", self.tiny_lp_drop)]
        for t, it in enumerate(self.iterations):
            terms.append((f"discard_cost[{t}]", it.discard_cost))
            terms.append((f"lp_shift[{t}]", it.lp_shift))
        terms.append(("final_excess", self.final_excess))
        return terms

    def certificate_sum(self) -> Fraction:
        return sum((v for _, v in self.certificate_terms()), Fraction(0))

    def audit_cost(self) -> Fraction:
        """Cost rebuilt from the purchase terms alone."""
        return (self.tiny_cost + sum((it.floors_cost + it.discard_cost for it in self.iterations), Fraction(0))
                + self.final_cost)

    def to_json(self) -> dict:
        out = {
            "algorithm": self.algorithm,
            "opt_f": fmt(self.opt_f),
            "cost": fmt(self.cost),
            "exact_opt": None if self.exact_opt is None else fmt(self.exact_opt),
            "additive_gap": fmt(self.additive_gap),
            "ratio": None if self.ratio is None else fmt(self.ratio),
            "gap_approx": float(self.additive_gap),
            "iterations": [it.to_json() for it in self.iterations],
            "tiny_cost": fmt(self.tiny_cost),
            "tiny_lp_drop": fmt(self.tiny_lp_drop),
            "final_cost": fmt(self.final_cost),
            "final_excess": fmt(self.final_excess),
            "certificate_sum": fmt(self.certificate_sum()),
        }
        if self.certificate_bound is not None:
            out["certificate_bound"] = fmt(self.certificate_bound)
        if self.bound is not None:
            out["bound"] = fmt(self.bound)
        if self.alpha is not None:
            out["alpha"] = fmt(self.alpha.alpha)
            out["alpha_mode"] = self.alpha.mode
        if self.s_min is not None:
            out["s_min"] = fmt(self.s_min)
        out.update(self.extra)
        return out


def _ceil_cover(x: FractionalSolution) -> list[CoverSet]:
    out = []
    for p, w in x.weights:
        out.extend([p] * ceil_frac(w))
    return out


def additive_round(instance: Instance, alpha_mode: str = "exact") -> tuple[Cover, GapReport]:
    """Integral cover with an audited breakdown of ``cost - OPT_f``."""
    demand0 = instance.demand
    x0 = solve_instance(instance)
    opt_f = x0.objective
    s = pseudo_sizes(instance)
    b, bought, tiny_cost = discard_tiny(instance, s)
    bought = list(bought)
    al = alpha_bound(instance, s, alpha_mode)
    chains = instance.chains
    x = solve_instance(instance, b) if b != demand0 else x0
    V = x.objective
    tiny_drop = V - opt_f
    iterations = []
    cap = 2 * ceil_log2(max(2, support(b))) + 4
    while support(b) > 1:
        if len(iterations) > cap:
            raise RuntimeError("support stopped shrinking")
        floors, _ = take_floors(x)
        F = Fraction(0)
        for p, f in floors:
            bought.extend([p] * f)
            F += p.cost * f
        b_res = residual(b, x)
        outcome = group_round(b_res, chains, s, al.alpha)
        D = Fraction(0)
        cert = Fraction(0)
        for drop in outcome.discarded:
            if any(drop.values()):
                part = cover_chain(drop, s, instance)
                bought.extend(part)
                D += sum((S.cost for S in part), Fraction(0))
                cert += chain_certificate(drop, s)
        x_next = solve_instance(instance, outcome.rounded)
        iterations.append(Iteration(support(b), outcome.support, F, D, cert,
                                    x_next.objective - (V - F), demand_size(b_res, s.sizes)))
        b, x, V = outcome.rounded, x_next, x_next.objective
    final = _ceil_cover(x)
    bought.extend(final)
    final_cost = sum((S.cost for S in final), Fraction(0))

    if instance.order.total_order:
        cover = Cover(realize_cover(bought, demand0, instance.order).sets)
    else:
        if not covers(bought, demand0, instance.order):
            raise AssertionError("rounded cover misses demand")
        cover = Cover(tuple(bought))
    report = GapReport(
        opt_f=opt_f,
        cost=cover.cost,
        iterations=tuple(iterations),
        tiny_cost=tiny_cost,
        tiny_lp_drop=tiny_drop,
        final_cost=final_cost,
        final_excess=final_cost - V,
        alpha=al,
        s_min=s.s_min if s.sizes else None,
    )
    report.certificate_bound = min(tiny_cost, Fraction(1)) + sum(
        (it.discard_certificate for it in iterations), Fraction(0)) + (1 if final else 0)
    kept = [s[i] for i, c in demand0.items() if c and s[i] >= Fraction(1, max(2, _tiny_n(instance, s)) ** 2)]
    report.bound = gap_bound(max(2, _tiny_n(instance, s)), instance.d, _k_of(instance),
                             unit_cost=_unit_cost(instance), alpha=al.alpha,
                             s_min=min(kept) if kept else None)
    return cover, report


def _tiny_n(instance: Instance, s: PseudoSizeVector) -> int:
    n = instance.total_multiplicity
    if s.witnesses:
        n = max([n] + [len(w) for w in s.witnesses.values()])
    return n


def _k_of(instance: Instance) -> int:
    if instance.k is not None:
        return instance.k
    if instance.system.sets:
        return max(len(G) for G in instance.system.sets)
    return max(1, instance.total_multiplicity)


def _unit_cost(instance: Instance) -> bool:
    if instance.system.kind == "adapter":
        return bool(instance.adapter.unit_cost)
    return all(G.cost == 1 for G in instance.system.sets)


def gap_bound(n: int, d: int, k: int, unit_cost: bool = False, alpha: Fraction | None = None,
              s_min: Fraction | None = None) -> Fraction:
    """Certificate-level bound on ``cost - OPT_f`` for the additive rounding.

    Per iteration and chain the two end groups of every size class hold at
    most ``8 alpha + 2`` size; covering them costs twice that plus one per
    class.  There are at most ``ceil(log2 n)`` iterations, then one unit each
    for tiny items and the final rounding.
    """
    if n < 2 or d < 1 or k < 1:
        raise ValueError("need n >= 2, d >= 1, k >= 1")
    if alpha is None:
        alpha = d * harmonic(k)
    if s_min is None:
        s_min = Fraction(1, k) if unit_cost else Fraction(1, n * n)
    classes = floor_log2_inv(s_min) + 1
    per_chain = 2 * (8 * alpha + 2) * classes + classes
    return ceil_log2(n) * d * per_chain + 2
