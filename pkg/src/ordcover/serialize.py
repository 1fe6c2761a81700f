"""JSON reading and writing for instances and solutions."""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any

from .model import Cover, CoverSet, InputError, Instance, OrderRelation, SetSystem, _normalize
from .rational import fmt, to_fraction


class ParseError(InputError):
    """Malformed instance file; the message names the offending field."""


def _rational(value: Any, where: str) -> Fraction:
    try:
        return to_fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"{where}: {exc}") from None


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{where}: expected an integer, got {value!r}")
    return value


def _get(obj: dict, key: str, where: str):
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    if key not in obj:
        raise ParseError(f"{where}.{key}: missing")
    return obj[key]


def set_to_json(S: CoverSet) -> dict:
    return {"elements": {str(i): c for i, c in S.elements}, "cost": fmt(S.cost)}


def set_from_json(obj: Any, where: str) -> CoverSet:
    elems = _get(obj, "elements", where)
    if not isinstance(elems, dict):
        raise ParseError(f"{where}.elements: expected an object of id -> count")
    counts = {}
    for key, c in elems.items():
        try:
            i = int(key)
        except ValueError:
            raise ParseError(f"{where}.elements: bad id {key!r}") from None
        counts[i] = _int(c, f"{where}.elements[{key}]")
    cost = _rational(obj.get("cost", "1/1"), f"{where}.cost")
    if not 0 <= cost <= 1:
        raise ParseError(f"{where}.cost: {cost} outside [0, 1]")
    try:
        return CoverSet(_normalize(counts), cost)
    except InputError as exc:
        raise ParseError(f"{where}: {exc}") from None


def instance_to_json(inst: Instance) -> dict:
    if inst.order.total_order:
        order = {"kind": "total", "sequence": list(inst.order.sequence)}
    else:
        order = {"kind": "pairs", "pairs": [list(p) for p in sorted(inst.order.pairs)]}
    system: dict[str, Any] = {"kind": inst.system.kind}
    if inst.system.kind == "adapter":
        system["adapter"] = {"kind": inst.adapter.kind, "params": inst.adapter.params()}
    else:
        system["sets"] = [set_to_json(S) for S in inst.system.sets]
    return {
        "items": [{"id": i, "multiplicity": m} for i, m in inst.items],
        "order": order,
        "system": system,
        "k": inst.k,
        "family": inst.family,
    }


def instance_from_json(obj: Any) -> Instance:
    from .variants import adapter_from_params

    items_raw = _get(obj, "items", "instance")
    if not isinstance(items_raw, list):
        raise ParseError("instance.items: expected a list")
    items = []
    for q, it in enumerate(items_raw):
        where = f"items[{q}]"
        items.append((_int(_get(it, "id", where), f"{where}.id"),
                      _int(_get(it, "multiplicity", where), f"{where}.multiplicity")))
    ids = [i for i, _ in items]
    order_raw = _get(obj, "order", "instance")
    kind = _get(order_raw, "kind", "order")
    try:
        if kind == "total" and "sequence" in order_raw:
            order = OrderRelation.total(_int(x, "order.sequence") for x in order_raw["sequence"])
        elif kind in ("total", "pairs"):
            pairs = []
            for q, p in enumerate(order_raw.get("pairs", [])):
                if not isinstance(p, list) or len(p) != 2:
                    raise ParseError(f"order.pairs[{q}]: expected [j, i]")
                pairs.append((_int(p[0], f"order.pairs[{q}][0]"), _int(p[1], f"order.pairs[{q}][1]")))
            order = OrderRelation.from_pairs(ids, pairs)
            if kind == "total" and not order.total_order:
                raise ParseError("order: kind is total but the pairs leave items incomparable")
        else:
            raise ParseError(f"order.kind: unknown kind {kind!r}")
    except ParseError:
        raise
    except InputError as exc:
        raise ParseError(f"order: {exc}") from None
    sys_raw = _get(obj, "system", "instance")
    skind = _get(sys_raw, "kind", "system")
    if skind == "adapter":
        ad = _get(sys_raw, "adapter", "system")
        try:
            adapter = adapter_from_params(_get(ad, "kind", "system.adapter"), _get(ad, "params", "system.adapter"))
        except ParseError:
            raise
        except (InputError, TypeError, ValueError) as exc:
            raise ParseError(f"system.adapter: {exc}") from None
        system = SetSystem("adapter", adapter=adapter)
    elif skind in ("explicit", "generators"):
        sets_raw = _get(sys_raw, "sets", "system")
        if not isinstance(sets_raw, list):
            raise ParseError("system.sets: expected a list")
        system = SetSystem(skind, tuple(set_from_json(S, f"system.sets[{q}]") for q, S in enumerate(sets_raw)))
        known = set(ids)
        for q, S in enumerate(system.sets):
            for i in S.counts:
                if i not in known:
                    raise ParseError(f"system.sets[{q}]: unknown item id {i}")
    else:
        raise ParseError(f"system.kind: unknown kind {skind!r}")
    k = obj.get("k")
    if k is not None:
        k = _int(k, "k")
    try:
        return Instance(tuple(items), order, system, k, str(obj.get("family", "")))
    except InputError as exc:
        raise ParseError(f"instance: {exc}") from None


def dumps(inst: Instance) -> str:
    return json.dumps(instance_to_json(inst), indent=1, sort_keys=True) + "\n"


def loads(text: str) -> Instance:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return instance_from_json(obj)


def load(path) -> Instance:
    with open(path) as fh:
        return loads(fh.read())


def cover_to_json(cover: Cover) -> dict:
    return {"sets": [set_to_json(S) for S in cover.sets], "cost": fmt(cover.cost), "count": len(cover.sets)}
