"""Compare search operators on one network across evaluation budgets.

Runs the EO1 and EO2 baselines, the oracle-guided preset with a ground-truth
knowledge oracle and with a random oracle, plus hill climbing, and writes
one row per (method, budget, seed) with directed and skeleton F1 and SHD.

    python3 scripts/operator_comparison.py --network asia --seeds 30 --out operator_comparison.csv
"""
import argparse
import csv
import statistics
import sys

from causalga.bif import load_network
from causalga.constraints import Constraint, ConstraintSet
from causalga.metrics import edge_f1, shd
from causalga.oracles import KnowledgeOracle, OracleContext, RandomOracle
from causalga.sampling import forward_sample
from causalga.scoring import Scorer
from causalga.search import PRESETS, GaConfig, hill_climb, run_search


def methods(truth):
    knowledge = ConstraintSet(tuple(Constraint(a, b, "required") for a, b in sorted(truth.named_edges())))
    return {
        "eo1": lambda s, b, seed, ctx: run_search(GaConfig(**PRESETS["eo1"], budget=b, seed=seed), s),
        "eo2": lambda s, b, seed, ctx: run_search(GaConfig(**PRESETS["eo2"], budget=b, seed=seed), s),
        "oracle_knowledge": lambda s, b, seed, ctx: run_search(GaConfig(**PRESETS["oracle"], budget=b, seed=seed),
                                                               s, KnowledgeOracle(knowledge), ctx),
        "oracle_random": lambda s, b, seed, ctx: run_search(GaConfig(**PRESETS["oracle"], budget=b, seed=seed),
                                                            s, RandomOracle(seed), ctx),
        "hill_climb": lambda s, b, seed, ctx: hill_climb(s, b, seed),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--network", default="asia")
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--budgets", type=int, nargs="+", default=[200, 400, 600])
    ap.add_argument("--seeds", type=int, default=30)
    ap.add_argument("--score", default="bic", choices=["bic", "bdeu", "mdl"])
    ap.add_argument("--out", default="operator_comparison.csv")
    args = ap.parse_args(argv)

    net = load_network(args.network)
    truth = net.graph
    table = methods(truth)
    rows = []
    for seed in range(args.seeds):
        ds = forward_sample(net, args.samples, seed)
        scorer = Scorer(ds, args.score)
        ctx = OracleContext(ds.names)
        for budget in args.budgets:
            for name, run in table.items():
                res = run(scorer, budget, seed, ctx)
                f = edge_f1(res.best_graph, truth)
                rows.append({"method": name, "budget": budget, "seed": seed, "best_score": res.best_score,
                             "evaluations": res.evaluations_used, "shd": shd(res.best_graph, truth),
                             "f1_directed": f.f1, "f1_skeleton": f.skeleton_f1})
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    for budget in args.budgets:
        for name in table:
            sel = [r for r in rows if r["method"] == name and r["budget"] == budget]
            print(f"budget {budget:4d} {name:17s} F1 {statistics.fmean(r['f1_directed'] for r in sel):.3f} "
                  f"SHD {statistics.fmean(r['shd'] for r in sel):.2f}")
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    sys.exit(main())
