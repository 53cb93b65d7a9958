"""Prior edge beliefs: required/forbidden constraints with weights, plus
optional pair plausibilities.  One file format serves both the audit-mode
score term and the knowledge oracle.

Accepted layouts (JSON or YAML document)::

    {"default_weight": 1.0,
     "constraints":   [{"from": "A", "to": "B", "kind": "required", "weight": 2.0}],
     "plausibilities": [{"from": "A", "to": "B", "plausibility": 0.9}]}

or JSON lines, one record per line (a record with ``kind`` is a constraint,
one with ``plausibility`` a plausibility, ``{"default_weight": w}`` sets the
default).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable

import yaml

KINDS = ("required", "forbidden")


class ConstraintParseError(ValueError):
    pass


@dataclass(frozen=True)
class Constraint:
    source: str
    target: str
    kind: str
    weight: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConstraintParseError(f"constraint kind must be one of {KINDS}, got {self.kind!r}")
        if self.source == self.target:
            raise ConstraintParseError("constraint endpoints must differ")
        if self.weight is not None and not self.weight >= 0:
            raise ConstraintParseError("constraint weight must be >= 0")


@dataclass(frozen=True)
class PairPlausibility:
    source: str
    target: str
    plausibility: float

    def __post_init__(self):
        if not 0.0 <= self.plausibility <= 1.0:
            raise ValueError(f"plausibility {self.plausibility} outside [0, 1]")
        if self.source == self.target:
            raise ValueError("plausibility endpoints must differ")


@dataclass(frozen=True)
class ConstraintSet:
    constraints: tuple[Constraint, ...] = ()
    default_weight: float = 1.0
    plausibilities: tuple[PairPlausibility, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "plausibilities", tuple(self.plausibilities))
        keys = [(c.source, c.target, c.kind) for c in self.constraints]
        if len(set(keys)) != len(keys):
            raise ConstraintParseError("duplicate (from, to, kind) constraint")
        if self.default_weight < 0:
            raise ConstraintParseError("default weight must be >= 0")

    def weight_of(self, c: Constraint) -> float:
        return self.default_weight if c.weight is None else c.weight

    def names(self) -> set[str]:
        out = set()
        for c in self.constraints:
            out |= {c.source, c.target}
        for p in self.plausibilities:
            out |= {p.source, p.target}
        return out

    def required(self) -> list[tuple[str, str]]:
        return [(c.source, c.target) for c in self.constraints if c.kind == "required"]

    def forbidden(self) -> list[tuple[str, str]]:
        return [(c.source, c.target) for c in self.constraints if c.kind == "forbidden"]

    def with_weight(self, weight: float) -> "ConstraintSet":
        """Copy with every constraint weighted ``weight``."""
        return replace(self, constraints=tuple(replace(c, weight=weight) for c in self.constraints),
                       default_weight=weight)

    def __len__(self):
        return len(self.constraints)

    def to_dict(self) -> dict:
        doc = {"default_weight": self.default_weight, "constraints": [], "plausibilities": []}
        for c in self.constraints:
            rec = {"from": c.source, "to": c.target, "kind": c.kind}
            if c.weight is not None:
                rec["weight"] = c.weight
            doc["constraints"].append(rec)
        for p in self.plausibilities:
            doc["plausibilities"].append({"from": p.source, "to": p.target, "plausibility": p.plausibility})
        return doc


def _records(doc) -> Iterable[dict]:
    if isinstance(doc, list):
        return doc
    if not isinstance(doc, dict):
        raise ConstraintParseError("expected a mapping or a list of records")
    return [*doc.get("constraints", []), *doc.get("plausibilities", [])]


def parse_constraints(text: str) -> ConstraintSet:
    text = text.strip()
    if not text:
        return ConstraintSet()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError:
        doc = None
    if not isinstance(doc, (dict, list)):
        # JSON lines
        try:
            doc = [json.loads(line) for line in text.splitlines() if line.strip()]
        except json.JSONDecodeError as e:
            raise ConstraintParseError(f"unreadable knowledge file: {e}") from None
    default_weight = 1.0
    if isinstance(doc, dict) and "from" in doc:
        doc = [doc]  # single-record JSON lines file
    if isinstance(doc, dict):
        default_weight = doc.get("default_weight", 1.0)
        unknown = set(doc) - {"default_weight", "constraints", "plausibilities", "description"}
        if unknown:
            raise ConstraintParseError(f"unknown top-level keys {sorted(unknown)}")
    constraints, plaus = [], []
    for rec in _records(doc):
        if not isinstance(rec, dict):
            raise ConstraintParseError(f"record {rec!r} is not a mapping")
        if set(rec) == {"default_weight"}:
            default_weight = rec["default_weight"]
            continue
        try:
            src, dst = str(rec["from"]), str(rec["to"])
            if "kind" in rec:
                w = rec.get("weight")
                constraints.append(Constraint(src, dst, str(rec["kind"]), None if w is None else float(w)))
            elif "plausibility" in rec:
                plaus.append(PairPlausibility(src, dst, float(rec["plausibility"])))
            else:
                raise ConstraintParseError(f"record {rec!r} has neither 'kind' nor 'plausibility'")
        except KeyError as e:
            raise ConstraintParseError(f"record {rec!r} lacks field {e}") from None
        except (TypeError, ValueError) as e:
            raise ConstraintParseError(str(e)) from None
    return ConstraintSet(tuple(constraints), float(default_weight), tuple(plaus))


def read_constraints(path) -> ConstraintSet:
    with open(path, encoding="utf-8") as fh:
        return parse_constraints(fh.read())


def write_constraints(cs: ConstraintSet) -> str:
    return json.dumps(cs.to_dict(), indent=2) + "\n"


def synthesize_priors(truth, wrong_fraction: float, rng, n_constraints: int | None = None) -> ConstraintSet:
    """Required-edge priors about ``truth``, a ``wrong_fraction`` share of them
    wrong.

    Correct priors are true edges; wrong ones are ordered pairs that are not
    edges of the truth, chosen so the full prior set stays acyclic (hence
    satisfiable).  ``n_constraints`` defaults to the number of true edges.
    """
    import numpy as np

    from .graph import is_acyclic

    names = truth.node_names
    true_edges = truth.edges()
    m = len(true_edges) if n_constraints is None else n_constraints
    n_wrong = int(round(wrong_fraction * m))
    n_right = min(m - n_wrong, len(true_edges))
    picks = rng.permutation(len(true_edges))[:n_right]
    chosen = [true_edges[k] for k in sorted(picks)]
    adj = np.zeros((truth.n, truth.n), dtype=bool)
    for i, j in chosen:
        adj[i, j] = True
    candidates = [(i, j) for i in range(truth.n) for j in range(truth.n)
                  if i != j and not truth.has_edge(i, j)]
    wrong = []
    for k in rng.permutation(len(candidates)):
        if len(wrong) == n_wrong:
            break
        i, j = candidates[k]
        if adj[i, j]:
            continue
        adj[i, j] = True
        if is_acyclic(adj):
            wrong.append((i, j))
        else:
            adj[i, j] = False
    cons = [Constraint(names[i], names[j], "required") for i, j in chosen + wrong]
    return ConstraintSet(tuple(cons))
