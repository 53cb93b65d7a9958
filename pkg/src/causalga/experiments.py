"""Experiment configs and runners behind the command-line interface.

A config is one JSON/YAML document validated against
``schemas/config.schema.json`` before any work starts.  Repetition ``k`` uses
seed ``base_seed + k`` for both data sampling and search.
"""
from __future__ import annotations

import csv
import io
import json
import os
import statistics
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

import jsonschema
import yaml

from .bif import load_network, read_bif_file
from .constraints import ConstraintSet, read_constraints, synthesize_priors
from .data import CategoricalDataset, read_csv_dataset
from .graph import Dag, UnknownVariable, format_graph, parse_graph
from .independence import g2_prior_adjusted, g2_test, mutual_information
from .metrics import edge_f1, prior_audit_stats, shd
from .oracles import (CIInitOracle, KnowledgeOracle, LLMConfig, LLMOracle, MIInitOracle, NullOracle,
                      OracleContext, RandomOracle)
from .sampling import SyntheticSpec, discretize_quantile, forward_sample, make_rng, sample_synthetic
from .scoring import AuditScorer, ScoreHyper, Scorer
from .search import PRESETS, GaConfig, SearchResult, hill_climb, random_search, run_search

RESULTS_VERSION = "causalga-results v1"
RESULT_COLUMNS = ["rep", "seed", "best_score", "evaluations", "shd", "f1_directed", "f1_skeleton", "wallclock"]


class ConfigError(ValueError):
    pass


def load_schema() -> dict:
    return json.loads((resources.files("causalga") / "schemas" / "config.schema.json").read_text())


def load_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    base = Path(path).resolve().parent
    return validate_config(doc, base)


def validate_config(doc, base_dir=None) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    try:
        jsonschema.validate(doc, load_schema())
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {e.message}") from None
    doc = dict(doc)
    doc["_base"] = str(base_dir) if base_dir else os.getcwd()
    return doc


def resolve(cfg: dict, path: str) -> Path:
    p = Path(path)
    return p if p.is_absolute() else Path(cfg.get("_base", ".")) / p


def check_paths(cfg: dict):
    """All referenced input files must exist (raises FileNotFoundError)."""
    refs = []
    data = cfg.get("data", {})
    for key in ("bif", "csv"):
        if key in data:
            refs.append(data[key])
    if isinstance(cfg.get("truth"), str):
        refs.append(cfg["truth"])
    oracle = cfg.get("oracle", {})
    if oracle.get("path"):
        refs.append(oracle["path"])
    pri = cfg.get("priors", {})
    refs += list(pri.get("files", {}).values())
    for key in ("graph", "reference"):
        if isinstance(cfg.get(key), str) and not cfg[key].startswith("network:"):
            refs.append(cfg[key])
    for r in refs:
        if not resolve(cfg, r).exists():
            raise FileNotFoundError(f"input not found: {r}")


def write_atomic(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


# Data ------------------------------------------------------------------------------

def load_source_net(cfg: dict):
    data = cfg.get("data", {})
    if "network" in data:
        return load_network(data["network"])
    if "bif" in data:
        return read_bif_file(resolve(cfg, data["bif"]))
    return None


def synthetic_spec(data: dict, n_default: int = 100) -> SyntheticSpec:
    syn = dict(data["synthetic"])
    syn.setdefault("n", data.get("samples", n_default))
    names = {f.name for f in fields(SyntheticSpec)}
    unknown = set(syn) - names
    if unknown:
        raise ConfigError(f"unknown synthetic fields {sorted(unknown)}")
    return SyntheticSpec(**syn)


def make_dataset(cfg: dict, seed: int, net=None) -> CategoricalDataset:
    data = cfg["data"]
    if "csv" in data:
        return read_csv_dataset(resolve(cfg, data["csv"]).read_text(encoding="utf-8"))
    if "synthetic" in data:
        table = sample_synthetic(synthetic_spec(data), seed)
        return discretize_quantile(table, data.get("bins", 3))
    net = net or load_source_net(cfg)
    return forward_sample(net, data.get("samples", 1000), seed)


def load_truth(cfg: dict, net=None) -> Dag | None:
    truth = cfg.get("truth")
    if truth is None:
        if net is not None:
            return net.graph
        if "synthetic" in cfg.get("data", {}):
            spec = synthetic_spec(cfg["data"])
            return Dag.from_edges(("X", "Y", "Z"), spec.edges())
        return None
    return load_graph_ref(cfg, truth)


def load_graph_ref(cfg: dict, ref: str) -> Dag:
    if ref.startswith("network:"):
        return load_network(ref.split(":", 1)[1]).graph
    path = resolve(cfg, ref)
    if path.name.endswith((".bif", ".bif.gz")):
        return read_bif_file(path).graph
    return parse_graph(path.read_text(encoding="utf-8"))


# Search pieces -----------------------------------------------------------------------

def make_scorer(cfg: dict, ds: CategoricalDataset) -> Scorer:
    sc = cfg.get("score", {})
    hyper = ScoreHyper(ess=sc.get("ess", 1.0), max_indegree=sc.get("max_indegree", 4))
    return Scorer(ds, sc.get("family", "bic"), hyper)


def check_names(cs: ConstraintSet, names):
    """A knowledge or prior file naming a variable absent from the data is an
    input error, not something to ignore silently."""
    unknown = sorted(cs.names() - set(names))
    if unknown:
        raise UnknownVariable(unknown[0])


def make_oracle(cfg: dict, ds: CategoricalDataset, seed: int):
    oc = cfg.get("oracle", {"kind": "none"})
    kind = oc.get("kind", "none")
    if kind == "none":
        return NullOracle()
    if kind == "random":
        return RandomOracle(oc.get("seed", seed))
    if kind == "knowledge":
        knowledge = read_constraints(resolve(cfg, oc["path"]))
        check_names(knowledge, ds.names)
        return KnowledgeOracle(knowledge, label=oc["path"])
    if kind == "ci":
        return CIInitOracle(ds, oc.get("alpha", 0.05))
    if kind == "mi":
        return MIInitOracle(ds, oc.get("quantile", 0.5))
    if kind == "llm":
        llm = dict(oc["llm"])
        if "cache_dir" in llm:
            llm["cache_dir"] = str(resolve(cfg, llm["cache_dir"]))
        return LLMOracle(LLMConfig(**llm), make_context(cfg, ds))
    raise ConfigError(f"unknown oracle kind {kind!r}")


def make_context(cfg: dict, ds: CategoricalDataset) -> OracleContext:
    ctx = cfg.get("oracle", {}).get("context", {})
    return OracleContext(ds.names, ctx.get("descriptions", {}), ctx.get("background", ""))


def ga_config(cfg: dict, seed: int) -> GaConfig:
    s = dict(cfg.get("search", {}))
    s.pop("algorithm", None)
    preset = s.pop("preset", None)
    params = dict(PRESETS[preset]) if preset else {}
    params.update(s)
    params["seed"] = seed
    return GaConfig(**params)


def run_one(cfg: dict, scorer: Scorer, oracle, ds, seed: int) -> SearchResult:
    algorithm = cfg.get("search", {}).get("algorithm", "ga")
    budget = cfg.get("search", {}).get("budget", 600)
    if algorithm == "hill_climb":
        return hill_climb(scorer, budget, seed)
    if algorithm == "random":
        return random_search(scorer, budget, seed)
    return run_search(ga_config(cfg, seed), scorer, oracle, make_context(cfg, ds))


# learn -------------------------------------------------------------------------------

@dataclass
class RepOutcome:
    rep: int
    seed: int
    result: SearchResult
    shd: int | None
    f1_directed: float | None
    f1_skeleton: float | None
    wallclock: float


def learn_rep(cfg: dict, rep: int) -> RepOutcome:
    seed = cfg.get("base_seed", 0) + rep
    t0 = time.perf_counter()
    net = load_source_net(cfg)
    ds = make_dataset(cfg, seed, net)
    scorer = make_scorer(cfg, ds)
    oracle = make_oracle(cfg, ds, seed)
    result = run_one(cfg, scorer, oracle, ds, seed)
    truth = load_truth(cfg, net)
    s = f1d = f1s = None
    if truth is not None:
        s = shd(result.best_graph, truth)
        scores = edge_f1(result.best_graph, truth)
        f1d, f1s = scores.f1, scores.skeleton_f1
    return RepOutcome(rep, seed, result, s, f1d, f1s, time.perf_counter() - t0)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def results_csv(outcomes: list[RepOutcome], wallclock: bool) -> str:
    buf = io.StringIO()
    buf.write(f"# {RESULTS_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for o in outcomes:
        w.writerow([o.rep, o.seed, _fmt(o.result.best_score), o.result.evaluations_used, _fmt(o.shd),
                    _fmt(o.f1_directed), _fmt(o.f1_skeleton), _fmt(round(o.wallclock, 6)) if wallclock else ""])
    return buf.getvalue()


def history_csv(result: SearchResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["generation", "best", "mean", "evaluations"])
    for h in result.history:
        w.writerow([h.generation, repr(h.best), repr(h.mean), h.evaluations])
    return buf.getvalue()


def _stats(values):
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    return {"mean": statistics.fmean(vals), "std": statistics.stdev(vals) if len(vals) > 1 else 0.0}


def summarize(outcomes: list[RepOutcome]) -> dict:
    return {
        "repetitions": len(outcomes),
        "best_score": _stats([o.result.best_score for o in outcomes]),
        "evaluations": _stats([o.result.evaluations_used for o in outcomes]),
        "shd": _stats([o.shd for o in outcomes]),
        "f1_directed": _stats([o.f1_directed for o in outcomes]),
        "f1_skeleton": _stats([o.f1_skeleton for o in outcomes]),
        "provenance": outcomes[0].result.provenance if outcomes else None,
    }


def _map(fn, cfg, reps, jobs):
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, [cfg] * len(reps), reps))
    return [fn(cfg, r) for r in reps]


def cmd_learn(cfg: dict, out_dir, jobs: int = 1) -> list[RepOutcome]:
    reps = list(range(cfg.get("repetitions", 30)))
    outcomes = _map(learn_rep, cfg, reps, jobs)
    out = Path(out_dir)
    write_atomic(out / "results.csv", results_csv(outcomes, cfg.get("record_wallclock", False)))
    write_atomic(out / "summary.json", json.dumps(summarize(outcomes), indent=2, sort_keys=True) + "\n")
    for o in outcomes:
        write_atomic(out / "history" / f"rep_{o.rep:03d}.csv", history_csv(o.result))
        write_atomic(out / "graphs" / f"rep_{o.rep:03d}.graph", format_graph(o.result.best_graph))
    return outcomes


# audit --------------------------------------------------------------------------------

AUDIT_COLUMNS = ["label", "weight_factor", "weight", "rep", "seed", "n_constraints", "n_wrong",
                 "wrong_prior_proportion", "rejected_wrong_prior_proportion", "shd", "f1_directed",
                 "audit_score", "data_score", "empty_graph_score"]


def _priors_for(cfg: dict, rep_seed: int, truth: Dag) -> dict[str, ConstraintSet]:
    pri = cfg["priors"]
    if "files" in pri:
        out = {label: read_constraints(resolve(cfg, path)) for label, path in pri["files"].items()}
        for cs in out.values():
            check_names(cs, truth.node_names)
        return out
    gen = pri["generate"]
    rng = make_rng(rep_seed, 11)
    return {gen.get("label", "generated"): synthesize_priors(truth, gen.get("wrong_fraction", 0.3), rng)}


def audit_rep(cfg: dict, rep: int) -> list[dict]:
    seed = cfg.get("base_seed", 0) + rep
    net = load_source_net(cfg)
    truth = load_truth(cfg, net)
    if truth is None:
        raise ConfigError("audit needs a ground-truth network")
    ds = make_dataset(cfg, seed, net)
    base = make_scorer(cfg, ds)
    empty = base.total(Dag.empty(ds.names))
    unit = cfg.get("weight_unit", "absolute")
    rows = []
    for label, priors in _priors_for(cfg, seed, truth).items():
        for factor in cfg["weights"]:
            w = factor * abs(empty) if unit == "empty_score" else factor
            scorer = AuditScorer(base, priors.with_weight(w))
            oracle = make_oracle(cfg, ds, seed)
            result = run_one(cfg, scorer, oracle, ds, seed)
            stats = prior_audit_stats(priors, result.best_graph, truth)
            rows.append({
                "label": label, "weight_factor": factor, "weight": w, "rep": rep, "seed": seed,
                "n_constraints": stats.n_constraints, "n_wrong": stats.n_wrong,
                "wrong_prior_proportion": stats.wrong_prior_proportion,
                "rejected_wrong_prior_proportion": stats.rejected_wrong_prior_proportion,
                "shd": shd(result.best_graph, truth), "f1_directed": edge_f1(result.best_graph, truth).f1,
                "audit_score": result.best_score, "data_score": base.total(result.best_graph),
                "empty_graph_score": empty,
            })
    return rows


def summarize_audit(rows: list[dict]) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["label"], r["weight_factor"]), []).append(r)
    out = []
    for (label, factor), rs in groups.items():
        out.append({
            "label": label, "weight_factor": factor,
            "mean_weight": statistics.fmean(r["weight"] for r in rs),
            "wrong_prior_proportion": statistics.fmean(r["wrong_prior_proportion"] for r in rs),
            "rejected_wrong_prior_proportion": statistics.fmean(r["rejected_wrong_prior_proportion"] for r in rs),
            "mean_shd": statistics.fmean(r["shd"] for r in rs),
            "mean_f1": statistics.fmean(r["f1_directed"] for r in rs),
            "repetitions": len(rs),
        })
    return out


def _rows_csv(rows: list[dict], columns: list[str], comment: str) -> str:
    buf = io.StringIO()
    buf.write(f"# {comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def cmd_audit(cfg: dict, out_dir, jobs: int = 1) -> list[dict]:
    reps = list(range(cfg.get("repetitions", 30)))
    rows = [r for chunk in _map(audit_rep, cfg, reps, jobs) for r in chunk]
    summary = summarize_audit(rows)
    out = Path(out_dir)
    note = "AUDIT MODE: data score + soft-constraint prior term; not a sound structure score"
    write_atomic(out / "audit_runs.csv", _rows_csv(rows, AUDIT_COLUMNS, f"{RESULTS_VERSION}; {note}"))
    cols = ["label", "weight_factor", "mean_weight", "wrong_prior_proportion",
            "rejected_wrong_prior_proportion", "mean_shd", "mean_f1", "repetitions"]
    write_atomic(out / "audit_summary.csv", _rows_csv(summary, cols, f"{RESULTS_VERSION}; {note}"))
    return summary


# citest ---------------------------------------------------------------------------------

CITEST_COLUMNS = ["test", "x", "y", "z", "alpha", "p", "statistic", "dof", "p_value", "decision", "reliable"]


def cmd_citest(cfg: dict, out_dir=None, seed: int | None = None) -> list[dict]:
    seed = cfg.get("base_seed", 0) if seed is None else seed
    ds = make_dataset(cfg, seed)
    rows = []
    for t in cfg.get("tests", []):
        z = t.get("z", [])
        alpha = t.get("alpha", 0.05)
        shifts = t.get("p")
        if shifts is None:
            res = [("g2", 0.0, g2_test(ds, t["x"], t["y"], z, alpha))]
        else:
            shifts = shifts if isinstance(shifts, list) else [shifts]
            res = [("g2_prior_adjusted[AUDIT]", float(p), g2_prior_adjusted(ds, t["x"], t["y"], z, alpha, p))
                   for p in shifts]
        for name, p, r in res:
            rows.append({"test": name, "x": t["x"], "y": t["y"], "z": " ".join(z), "alpha": alpha, "p": p,
                         "statistic": r.statistic, "dof": r.dof, "p_value": r.p_value,
                         "decision": "independent" if r.independent else "dependent", "reliable": r.reliable})
    for x, y in cfg.get("mutual_information", []):
        mi = mutual_information(ds, x, y)
        rows.append({"test": "mutual_information", "x": x, "y": y, "z": "", "alpha": "", "p": "",
                     "statistic": mi, "dof": "", "p_value": "", "decision": "", "reliable": ""})
    if out_dir is not None:
        write_atomic(Path(out_dir) / "citest.csv", _rows_csv(rows, CITEST_COLUMNS, RESULTS_VERSION))
    return rows


def rejection_counts(rows: list[dict]) -> dict[float, int]:
    """Number of 'dependent' decisions per prior shift among adjusted tests."""
    counts: dict[float, int] = {}
    for r in rows:
        if r["test"].startswith("g2_prior_adjusted"):
            counts[r["p"]] = counts.get(r["p"], 0) + (r["decision"] == "dependent")
    return dict(sorted(counts.items()))


# sample -----------------------------------------------------------------------------------

def cmd_sample(cfg: dict, out_dir, seed: int | None = None) -> list[tuple[Path, int, int]]:
    seed = cfg.get("base_seed", 0) if seed is None else seed
    data = cfg["data"]
    out = Path(out_dir)
    written = []
    if "synthetic" in data:
        spec = synthetic_spec(data)
        table = sample_synthetic(spec, seed)
        write_atomic(out / "synthetic.csv", table.to_csv())
        written.append((out / "synthetic.csv", spec.n, len(table.names)))
        if data.get("bins"):
            from .data import write_csv_dataset

            ds = discretize_quantile(table, data["bins"])
            write_atomic(out / "discretized.csv", write_csv_dataset(ds))
            written.append((out / "discretized.csv", ds.n_samples, ds.n_vars))
        return written
    from .data import write_csv_dataset

    net = load_source_net(cfg)
    if net is None:
        raise ConfigError("sample needs a network, bif or synthetic data source")
    ds = forward_sample(net, data.get("samples", 1000), seed)
    name = data.get("network") or Path(data["bif"]).name.split(".")[0]
    path = out / f"{name}_{ds.n_samples}.csv"
    write_atomic(path, write_csv_dataset(ds))
    written.append((path, ds.n_samples, ds.n_vars))
    return written


# metrics -----------------------------------------------------------------------------------

def cmd_metrics(cfg: dict) -> dict:
    g = load_graph_ref(cfg, cfg["graph"])
    ref = load_graph_ref(cfg, cfg["reference"])
    scores = edge_f1(g, ref)
    return {"shd": shd(g, ref), "precision": scores.precision, "recall": scores.recall, "f1_directed": scores.f1,
            "skeleton_precision": scores.skeleton_precision, "skeleton_recall": scores.skeleton_recall,
            "f1_skeleton": scores.skeleton_f1, **{k: getattr(scores.confusion, k) for k in
                                                  ("tp", "fp", "fn", "tp_skel", "fp_skel", "fn_skel")}}


__all__ = ["cmd_learn", "cmd_audit", "cmd_citest", "cmd_sample", "cmd_metrics", "load_config", "validate_config",
           "check_paths", "write_atomic", "ConfigError", "RESULT_COLUMNS", "RESULTS_VERSION", "rejection_counts"]
