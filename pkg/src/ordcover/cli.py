"""Command line: gen, solve, gap and bench."""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
import time
from fractions import Fraction

from . import instances as fam
from .approx import (
    DEFAULT_NODE_BUDGET,
    DEFAULT_STATE_CAP,
    DEFAULT_TRIAL_CAP,
    BudgetExhausted,
    TrialCapReached,
    dp_two_approx,
    exact_search,
    rand_mult_round,
)
from .lp import solve_instance
from .model import Cover, InfeasibleError, InputError, Instance, UnsupportedOrderError
from .rational import fmt
from .rounding import GapReport, additive_round
from .serialize import ParseError, cover_to_json, dumps, load
from .variants import VARIANTS, adapt_variant

EXIT_OK, EXIT_PARSE, EXIT_INFEASIBLE, EXIT_BUDGET, EXIT_TRIALS = 0, 2, 3, 4, 5

ALGORITHMS = ("additive", "dp2", "randround", "firstfit", "exact")

BENCH_FIELDS = [
    "instance_id", "family", "n", "d", "k", "opt_f", "algorithm", "cost", "exact_opt",
    "additive_gap", "ratio", "certificate_bound", "seed", "iterations", "runtime_ms",
    "status", "gap_approx",
]


# --------------------------------------------------------------------------
# generation


def build_family(family: str, args) -> Instance:
    params = dict(json.loads(args.params)) if getattr(args, "params", None) else {}
    for key in ("m", "base", "k", "d", "eps", "n"):
        val = getattr(args, key, None)
        if val is not None:
            params.setdefault(key, val)
    if family == "nested-levels":
        return fam.gen_nested_levels(int(params.get("m", 1)), int(params.get("base", 100)))
    if family == "disjoint-union":
        part = fam.gen_nested_levels(int(params.get("m", 1)), int(params.get("base", 100)))
        return fam.gen_disjoint_union([part] * int(params.get("d", 2)))
    if family == "loglog":
        return fam.gen_loglog(int(params.get("k", 2)))
    if family == "partition-hardness":
        if "a" not in params:
            raise InputError("partition-hardness needs params {\"a\": [...]}")
        return fam.gen_partition_hardness(params["a"], int(params.get("groups", params.get("k", 1))))
    if family == "random":
        rng = random.Random(int(params.get("seed", getattr(args, "seed", 0) or 0)))
        return fam.random_instance(rng, int(params.get("n", 8)), int(params.get("k", 3)),
                                   unit_cost=bool(params.get("unit_cost", True)))
    if family in VARIANTS:
        generic = {"seed", "n", "k", "eps", "m", "base", "d"}
        if set(params) <= generic and not getattr(args, "params", None):
            rng = random.Random(int(getattr(args, "seed", 0) or 0))
            return fam.random_variant(rng, family)
        for key in ("m", "base", "d", "n"):
            params.pop(key, None)
        return adapt_variant(family, **params)
    raise InputError(f"unknown family {family!r}")


# --------------------------------------------------------------------------
# solving


def _plain_report(instance: Instance, cover: Cover, algorithm: str, opt_f: Fraction, **extra) -> GapReport:
    return GapReport(opt_f=opt_f, cost=cover.cost, algorithm=algorithm, extra=extra)


def run_algorithm(instance: Instance, alg: str, seed: int = 0, trials: int = DEFAULT_TRIAL_CAP,
                  node_budget: int = DEFAULT_NODE_BUDGET, state_cap: int = DEFAULT_STATE_CAP):
    """Returns ``(cover, report)``; raises the library's error types on failure."""
    if alg == "additive":
        return additive_round(instance)
    x = solve_instance(instance)
    if alg == "dp2":
        res = dp_two_approx(instance, state_cap)
        return res.cover, _plain_report(instance, res.cover, alg, x.objective, dp_value=fmt(res.value))
    if alg == "randround":
        res = rand_mult_round(instance, x, seed, trials)
        log = [{"trial": t.index, "events_ok": t.events_ok, "cost_ok": t.cost_ok,
                "realized": t.realized, "cost": fmt(t.cost)} for t in res.log]
        return res.cover, _plain_report(instance, res.cover, alg, x.objective, lam=fmt(res.lam), trials=log)
    if alg == "firstfit":
        adapter = instance.adapter
        if adapter is None or not hasattr(adapter, "first_fit_cover"):
            raise InputError("firstfit needs a one-dimensional bin-packing variant")
        sets, sizes = adapter.first_fit_cover(instance.demand)
        cover = Cover(tuple(sets))
        bound = 2 * sum((sizes[i] * c for i, c in instance.demand.items()), Fraction(0)) + 1
        return cover, _plain_report(instance, cover, alg, x.objective, first_fit_bound=fmt(bound))
    if alg == "exact":
        res = exact_search(instance, node_budget)
        if res is None:
            raise BudgetExhausted(f"node budget {node_budget} exhausted")
        cover = Cover(res.generators)
        rep = _plain_report(instance, cover, alg, x.objective, nodes=res.nodes)
        rep.exact_opt = res.value
        return cover, rep
    raise InputError(f"unknown algorithm {alg!r}")


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def cmd_gen(args) -> int:
    inst = build_family(args.family, args)
    text = dumps(inst)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_solve(args, with_exact: bool = False) -> int:
    inst = load(args.instance)
    cover, report = run_algorithm(inst, args.alg, args.seed, args.trials, args.node_budget, args.state_cap)
    if with_exact and report.exact_opt is None:
        res = exact_search(inst, args.node_budget)
        if res is not None:
            report.exact_opt = res.value
        else:
            report.extra["exact_status"] = "budget"
    _emit({"solution": cover_to_json(cover), "report": report.to_json()})
    return EXIT_OK


# --------------------------------------------------------------------------
# benchmarking


def paper_suite() -> list[tuple[str, Instance]]:
    suite = [(f"nested-levels-m{m}", fam.gen_nested_levels(m)) for m in (1, 2, 3)]
    suite += [(f"loglog-k{k}", fam.gen_loglog(k)) for k in (2, 3)]
    smoke = {
        "cardinality_bp": dict(sizes=["3/10", "3/10", "3/10"], k=2, multiplicities=[2, 1, 3]),
        "open_end_bp": dict(sizes=["7/10", "3/5", "1/5"], multiplicities=[2, 2, 1]),
        "general_cost_bp": dict(sizes=["1/2", "1/3", "1/4"], f=["0", "1/2", "3/4", "1", "1"],
                                multiplicities=[1, 2, 3]),
        "var_sized_bp": dict(sizes=["1/2", "1/3", "1/4"], capacities=["1/2", "1"], costs=["1/2", "1"],
                             multiplicities=[2, 2, 2]),
        "bp_rejection": dict(sizes=["3/5", "1/2", "1/4", "1/5"], rejection_costs=["1/4", "1/2", "1/4", "1"],
                             multiplicities=[1, 2, 2, 1]),
        "train_delivery": dict(sizes=["1/2", "1/3", "1/4"], positions=["1/2", "1", "1/2"],
                               multiplicities=[2, 2, 2]),
        "vector_packing": dict(vectors=[["1/2", "1/4"], ["1/4", "1/2"], ["1/4", "1/4"]],
                               multiplicities=[2, 1, 2]),
    }
    suite += [(f"{kind}-smoke", adapt_variant(kind, **params)) for kind, params in smoke.items()]
    return suite


def random_suite(seed: int, t: int) -> list[tuple[str, Instance]]:
    rng = random.Random(seed * 1_000_003 + t)
    n, k = rng.randint(3, 10), rng.randint(2, 4)
    return [(f"random-{seed}-{t}", fam.random_instance(rng, n, k, max_mult=2, unit_cost=rng.random() < 0.5))]


def _bench_algorithms(inst: Instance) -> list[str]:
    algs = ["additive", "exact"]
    if inst.order.total_order:
        algs += ["dp2", "randround"]
    if inst.adapter is not None and hasattr(inst.adapter, "first_fit_cover"):
        algs.append("firstfit")
    return algs


def bench_rows(suite: str, trials: int, seed: int, node_budget: int = DEFAULT_NODE_BUDGET,
               state_cap: int = DEFAULT_STATE_CAP, timing: bool = False) -> list[dict]:
    rows = []
    for t in range(trials):
        run_seed = seed + t
        cases = paper_suite() if suite == "paper" else random_suite(seed, t)
        for name, inst in cases:
            opt_f = solve_instance(inst).objective
            exact = exact_search(inst, node_budget)
            for alg in _bench_algorithms(inst):
                row = {f: "" for f in BENCH_FIELDS}
                row.update(instance_id=name, family=inst.family, n=inst.n, d=inst.d,
                           k="" if inst.k is None else inst.k, opt_f=fmt(opt_f), algorithm=alg,
                           seed=run_seed, status="ok")
                if exact is not None:
                    row["exact_opt"] = fmt(exact.value)
                start = time.perf_counter()
                try:
                    if alg == "exact":
                        if exact is None:
                            raise BudgetExhausted("node budget exhausted")
                        cover, report = Cover(exact.generators), None
                    else:
                        cover, report = run_algorithm(inst, alg, run_seed, DEFAULT_TRIAL_CAP, node_budget, state_cap)
                except BudgetExhausted:
                    row["status"] = "budget"
                except TrialCapReached:
                    row["status"] = "trial-cap"
                except InfeasibleError:
                    row["status"] = "infeasible"
                except UnsupportedOrderError:
                    row["status"] = "unsupported"
                else:
                    cost = cover.cost
                    top = exact.value if exact is not None else cost
                    gap = top - opt_f
                    row.update(cost=fmt(cost), additive_gap=fmt(gap),
                               ratio="" if opt_f == 0 else fmt(top / opt_f), gap_approx=f"{float(gap):.6f}")
                    if report is not None:
                        row["iterations"] = len(report.iterations) if alg == "additive" else ""
                        if report.certificate_bound is not None:
                            row["certificate_bound"] = fmt(report.certificate_bound)
                if timing:
                    row["runtime_ms"] = f"{(time.perf_counter() - start) * 1000:.1f}"
                rows.append(row)
    rows.sort(key=lambda r: (r["family"], r["instance_id"], r["seed"], r["algorithm"]))
    return rows


def write_csv(rows: list[dict], fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=BENCH_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


def cmd_bench(args) -> int:
    rows = bench_rows(args.suite, args.trials, args.seed, args.node_budget, args.state_cap, args.timing)
    buf = io.StringIO()
    write_csv(rows, buf)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ordcover", description="Set cover with ordered replacement.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate an instance file")
    gen.add_argument("--family", required=True,
                     help="nested-levels, disjoint-union, loglog, partition-hardness, random or a variant kind")
    gen.add_argument("--m", type=int)
    gen.add_argument("--base", type=int)
    gen.add_argument("--k", type=int)
    gen.add_argument("--d", type=int)
    gen.add_argument("--n", type=int)
    gen.add_argument("--eps")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--params", help="JSON object of family parameters")
    gen.add_argument("--output")

    for name in ("solve", "gap"):
        p = sub.add_parser(name, help="solve an instance" if name == "solve" else "solve and attach the exact optimum")
        p.add_argument("instance")
        p.add_argument("--alg", choices=ALGORITHMS, default="additive")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trials", type=int, default=DEFAULT_TRIAL_CAP)
        p.add_argument("--node-budget", type=int, default=DEFAULT_NODE_BUDGET)
        p.add_argument("--state-cap", type=int, default=DEFAULT_STATE_CAP)

    bench = sub.add_parser("bench", help="run a benchmark suite and write CSV")
    bench.add_argument("--suite", choices=("paper", "random"), default="paper")
    bench.add_argument("--trials", type=int, default=1)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--node-budget", type=int, default=DEFAULT_NODE_BUDGET)
    bench.add_argument("--state-cap", type=int, default=DEFAULT_STATE_CAP)
    bench.add_argument("--csv")
    bench.add_argument("--timing", action="store_true", help="fill the runtime column (output is then not byte-stable)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            return cmd_gen(args)
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "gap":
            return cmd_solve(args, with_exact=True)
        if args.command == "bench":
            return cmd_bench(args)
    except (ParseError, InputError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except BudgetExhausted as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except TrialCapReached as exc:
        print(f"trial cap reached: {exc}", file=sys.stderr)
        return EXIT_TRIALS
    return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
