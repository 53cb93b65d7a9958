"""``causalga`` command line.

Subcommands: sample, learn, audit, citest, metrics.  Each reads one config
document (``--config``, YAML or JSON) that is validated before any work
starts; a few flags override config fields.

Exit codes:

    0  success
    1  unexpected internal error
    2  usage error or invalid config
    3  input file not found
    4  malformed input file (BIF, ragged CSV, graph, knowledge/prior file)
    5  unknown variable name
    6  unusable data (empty, constant or degenerate columns)
    7  graph error (cycle, mismatched node sets)
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import experiments as ex
from .bif import BifError
from .constraints import ConstraintParseError
from .data import DataError, RaggedRow
from .graph import GraphError, GraphParseError, UnknownVariable

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_NOT_FOUND = 3
EXIT_PARSE = 4
EXIT_UNKNOWN_VARIABLE = 5
EXIT_DATA = 6
EXIT_GRAPH = 7

log = logging.getLogger("causalga")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="causalga", description="Score-based causal structure learning.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", required=p.prog.split()[-1] != "metrics", help="YAML/JSON config file")
        p.add_argument("--seed", type=int, help="overrides base_seed")
        if out:
            p.add_argument("--out", default="out", help="output directory (default: out)")
        return p

    common(sub.add_parser("sample", help="draw a dataset from a network or synthetic mechanism"))
    for name, text in (("learn", "run structure search repetitions"),
                       ("audit", "sweep prior weights of the soft-constraint score (audit mode)")):
        p = common(sub.add_parser(name, help=text))
        p.add_argument("--budget", type=int, help="overrides search.budget")
        p.add_argument("--repetitions", type=int, help="overrides repetitions")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for repetitions")
    common(sub.add_parser("citest", help="G2 / prior-adjusted G2 tests and mutual information"))
    p = common(sub.add_parser("metrics", help="SHD and edge F1 of a graph against a reference"), out=False)
    p.add_argument("graph", nargs="?", help="graph file (overrides config 'graph')")
    p.add_argument("reference", nargs="?", help="graph, BIF file or network:NAME (overrides 'reference')")
    return parser


def _config(args) -> dict:
    if args.config:
        cfg = ex.load_config(args.config)
    else:
        cfg = ex.validate_config({})
    if args.seed is not None:
        cfg["base_seed"] = args.seed
    if getattr(args, "budget", None) is not None:
        cfg.setdefault("search", {})["budget"] = args.budget
    if getattr(args, "repetitions", None) is not None:
        cfg["repetitions"] = args.repetitions
    if args.command == "metrics":
        if args.graph:
            cfg["graph"] = args.graph
            cfg["_base"] = "."
        if args.reference:
            cfg["reference"] = args.reference
        if "graph" not in cfg or "reference" not in cfg:
            raise ex.ConfigError("metrics needs a graph and a reference")
    elif "data" not in cfg:
        raise ex.ConfigError(f"{args.command} needs a 'data' section")
    if args.command == "audit" and ("priors" not in cfg or "weights" not in cfg):
        raise ex.ConfigError("audit needs 'priors' and 'weights'")
    ex.check_paths(cfg)
    return cfg


def run(args) -> int:
    cfg = _config(args)
    if args.command == "sample":
        for path, rows, cols in ex.cmd_sample(cfg, args.out):
            print(f"wrote {rows} rows x {cols} columns to {path}")
    elif args.command == "learn":
        outcomes = ex.cmd_learn(cfg, args.out, args.jobs)
        summary = ex.summarize(outcomes)
        line = f"{len(outcomes)} repetitions; mean best score {summary['best_score']['mean']:.4f}"
        if summary["shd"]:
            line += f"; mean SHD {summary['shd']['mean']:.3f}; mean F1 {summary['f1_directed']['mean']:.3f}"
        print(line)
        print(f"results in {args.out}/results.csv")
    elif args.command == "audit":
        print("AUDIT MODE: soft-constraint prior score; results are diagnostics, not learned structure")
        for row in ex.cmd_audit(cfg, args.out, args.jobs):
            print(f"{row['label']} weight={row['weight_factor']}: wrong={row['wrong_prior_proportion']:.3f} "
                  f"rejected_wrong={row['rejected_wrong_prior_proportion']:.3f} "
                  f"SHD={row['mean_shd']:.2f} F1={row['mean_f1']:.3f}")
        print(f"results in {args.out}/audit_summary.csv")
    elif args.command == "citest":
        rows = ex.cmd_citest(cfg, args.out)
        for r in rows:
            cond = f" | {r['z']}" if r["z"] else ""
            if r["test"] == "mutual_information":
                print(f"MI({r['x']}; {r['y']}) = {r['statistic']:.6f} nats")
            else:
                flag = "" if r["reliable"] else " (unreliable: forced independent)"
                print(f"{r['test']} {r['x']} _||_ {r['y']}{cond} p={r['p']}: G2={r['statistic']:.4f} "
                      f"dof={r['dof']} p_value={r['p_value']:.4g} -> {r['decision']}{flag}")
        counts = ex.rejection_counts(rows)
        if counts:
            print("rejections by prior shift: " + ", ".join(f"p={p}: {c}" for p, c in counts.items()))
    elif args.command == "metrics":
        print(json.dumps(ex.cmd_metrics(cfg), indent=2))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except ex.ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except UnknownVariable as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_UNKNOWN_VARIABLE
    except (BifError, ConstraintParseError, GraphParseError, RaggedRow) as e:
        print(f"error: malformed input: {e}", file=sys.stderr)
        return EXIT_PARSE
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except GraphError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_GRAPH
    except Exception as e:  # noqa: BLE001
        log.exception("internal error")
        print(f"error: internal: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
