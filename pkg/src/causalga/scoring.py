"""Decomposable structure scores over discrete data.

Every family is reported on a single "larger is better" axis, in nats:

* ``bic``  : sum_jk N_ijk ln(N_ijk / N_ij) - (r_i - 1) q_i ln(N) / 2
* ``bdeu`` : log Dirichlet marginal likelihood with uniform prior
             alpha_ijk = ess / (r_i q_i)
* ``mdl``  : minus the description length  -ll + (r_i - 1) q_i ln(N) / 2
             + |pa_i| ln(n), i.e. data code plus parameter code plus the cost
             of naming each parent among ``n`` variables.  Description
             lengths are conventionally in bits; multiply by 1/ln 2 to convert.

Parent configurations never seen in the data contribute zero.  Families with
more parents than ``max_indegree`` score ``-inf``.

The audit-mode composite (data score plus a soft-constraint prior term) lives
at the bottom of this module and is only there to study its failure modes.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from .constraints import ConstraintSet
from .data import CategoricalDataset, EmptyDataset, UnknownVariable
from .graph import Dag

FAMILIES = ("bic", "bdeu", "mdl")


class LocalScoreKey(NamedTuple):
    child: int
    parents: tuple[int, ...]

    @classmethod
    def of(cls, child, parents) -> "LocalScoreKey":
        ps = tuple(sorted(int(p) for p in parents))
        if int(child) in ps:
            raise ValueError("a node cannot be its own parent")
        return cls(int(child), ps)


@dataclass(frozen=True)
class ScoreHyper:
    ess: float = 1.0
    max_indegree: int = 4


def family_counts(ds: CategoricalDataset, child: int, parents) -> np.ndarray:
    """Counts ``N_jk`` for the parent configurations that occur in the data,
    ordered by configuration index; shape ``(observed_q, r_child)``."""
    data = ds.data
    r = ds.cardinalities[child]
    codes = np.zeros(ds.n_samples, dtype=np.int64)
    q = 1
    for p in parents:
        rp = ds.cardinalities[p]
        codes = codes * rp + data[:, p]
        q *= rp
    keys = codes * r + data[:, child]
    if q * r <= 1 << 20:
        counts = np.bincount(keys, minlength=q * r).reshape(q, r)
        return counts[counts.sum(axis=1) > 0]
    uniq, cnt = np.unique(keys, return_counts=True)
    cfg, inverse = np.unique(uniq // r, return_inverse=True)
    counts = np.zeros((len(cfg), r), dtype=np.int64)
    counts[inverse, uniq % r] = cnt
    return counts


def _loglik(counts: np.ndarray) -> float:
    nj = counts.sum(axis=1, keepdims=True)
    nz = counts > 0
    njk = counts[nz].astype(float)
    return float(np.sum(njk * (np.log(njk) - np.log(np.broadcast_to(nj, counts.shape)[nz]))))


def local_score(family: str, ds: CategoricalDataset, key: LocalScoreKey,
                hyper: ScoreHyper = ScoreHyper()) -> float:
    """Local score of ``key.child`` given ``key.parents``."""
    if family not in FAMILIES:
        raise ValueError(f"unknown score family {family!r}")
    N = ds.n_samples
    if N == 0:
        raise EmptyDataset("cannot score an empty dataset")
    child, parents = key
    for v in (child, *parents):
        if not 0 <= v < ds.n_vars:
            raise UnknownVariable(v)
    if len(parents) > hyper.max_indegree:
        return -math.inf
    counts = family_counts(ds, child, parents)
    r = ds.cardinalities[child]
    q = math.prod(ds.cardinalities[p] for p in parents)
    if family == "bdeu":
        a_j = hyper.ess / q
        a_jk = hyper.ess / (q * r)
        nj = counts.sum(axis=1)
        return float(np.sum(gammaln(a_j) - gammaln(a_j + nj))
                     + np.sum(gammaln(a_jk + counts) - gammaln(a_jk)))
    penalty = 0.5 * (r - 1) * q * math.log(N)
    ll = _loglik(counts)
    if family == "bic":
        return ll - penalty
    return -(-ll + penalty + len(parents) * math.log(ds.n_vars))


class ScoreCache:
    """Thread-safe memo of local scores for one (dataset, family, hyper)."""

    def __init__(self):
        self._data: dict[LocalScoreKey, float] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key):
        val = self._data.get(key)
        if val is None:
            self.misses += 1
        else:
            self.hits += 1
        return val

    def put(self, key, value):
        with self._lock:
            self._data[key] = value

    def __len__(self):
        return len(self._data)


def total_score(family: str, ds: CategoricalDataset, g: Dag, hyper: ScoreHyper = ScoreHyper(),
                cache: ScoreCache | None = None) -> float:
    """Sum of local scores over nodes in index order."""
    if g.node_names != ds.names:
        raise ValueError("graph nodes do not match dataset columns")
    total = 0.0
    for i in range(g.n):
        key = LocalScoreKey(i, g.parents(i))
        val = cache.get(key) if cache is not None else None
        if val is None:
            val = local_score(family, ds, key, hyper)
            if cache is not None:
                cache.put(key, val)
        total += val
    return total


class Scorer:
    """Data score bound to one dataset; the only judge of graph quality.

    Holds nothing but the data, the family, its hyperparameters and a local
    score cache, so its values cannot depend on how a graph was proposed.
    """

    audit = False

    def __init__(self, ds: CategoricalDataset, family: str = "bic", hyper: ScoreHyper | None = None,
                 use_cache: bool = True):
        if family not in FAMILIES:
            raise ValueError(f"unknown score family {family!r}")
        if ds.n_samples == 0:
            raise EmptyDataset("cannot score an empty dataset")
        self.ds = ds
        self.family = family
        self.hyper = hyper or ScoreHyper()
        self.cache = ScoreCache() if use_cache else None

    @property
    def names(self):
        return self.ds.names

    @property
    def max_indegree(self) -> int:
        return self.hyper.max_indegree

    def local(self, child: int, parents) -> float:
        key = LocalScoreKey.of(child, parents)
        if self.cache is None:
            return local_score(self.family, self.ds, key, self.hyper)
        val = self.cache.get(key)
        if val is None:
            val = local_score(self.family, self.ds, key, self.hyper)
            self.cache.put(key, val)
        return val

    def total(self, g: Dag) -> float:
        return total_score(self.family, self.ds, g, self.hyper, self.cache)

    def removal_gain(self, adjacency: np.ndarray, i: int, j: int) -> float:
        """Score change from deleting ``i -> j`` (acyclicity not required)."""
        parents = tuple(int(p) for p in np.flatnonzero(adjacency[:, j]))
        return self.local(j, tuple(p for p in parents if p != i)) - self.local(j, parents)

    def describe(self) -> str:
        extra = f", ess={self.hyper.ess}" if self.family == "bdeu" else ""
        return f"{self.family}(max_indegree={self.hyper.max_indegree}{extra})"


# Audit mode ------------------------------------------------------------------

def soft_constraint_term(g: Dag, constraints: ConstraintSet) -> float:
    """AUDIT MODE prior term: +w for each satisfied constraint, -w for each
    violated one (required edge present / forbidden edge absent satisfies)."""
    total = 0.0
    for c in constraints.constraints:
        try:
            present = g.has_edge(g.index(c.source), g.index(c.target))
        except KeyError:
            raise UnknownVariable(c.source if c.source not in g.node_names else c.target) from None
        ok = present if c.kind == "required" else not present
        w = constraints.weight_of(c)
        total += w if ok else -w
    return total


class AuditScorer(Scorer):
    """AUDIT MODE: data score plus soft-constraint prior term.

    The raw sum mixes a log-likelihood-scale quantity with an arbitrary prior
    scale and is not decomposable for general prior terms; it exists only to
    measure how such composites treat wrong priors.
    """

    audit = True

    def __init__(self, base: Scorer, constraints: ConstraintSet):
        self.base = base
        self.ds = base.ds
        self.family = base.family
        self.hyper = base.hyper
        self.cache = base.cache
        self.constraints = constraints
        idx = {x: i for i, x in enumerate(base.ds.names)}
        for name in constraints.names():
            if name not in idx:
                raise UnknownVariable(name)
        self._by_child: dict[int, list[tuple[int, bool, float]]] = {}
        for c in constraints.constraints:
            self._by_child.setdefault(idx[c.target], []).append(
                (idx[c.source], c.kind == "required", constraints.weight_of(c)))

    def _edge_term(self, child: int, parents) -> float:
        ps = set(parents)
        total = 0.0
        for src, required, w in self._by_child.get(child, ()):
            ok = (src in ps) == required
            total += w if ok else -w
        return total

    def local(self, child, parents) -> float:
        return self.base.local(child, parents) + self._edge_term(child, parents)

    def total(self, g: Dag) -> float:
        return self.base.total(g) + soft_constraint_term(g, self.constraints)

    def removal_gain(self, adjacency, i, j) -> float:
        parents = tuple(int(p) for p in np.flatnonzero(adjacency[:, j]))
        rest = tuple(p for p in parents if p != i)
        return (self.base.removal_gain(adjacency, i, j)
                + self._edge_term(j, rest) - self._edge_term(j, parents))

    def describe(self) -> str:
        return f"AUDIT[{self.base.describe()} + soft_constraints(n={len(self.constraints)})]"


def audit_score(family: str, ds: CategoricalDataset, g: Dag, constraints: ConstraintSet,
                hyper: ScoreHyper = ScoreHyper()) -> float:
    """AUDIT MODE: ``total_score + soft_constraint_term`` (unsound; see module doc)."""
    return total_score(family, ds, g, hyper) + soft_constraint_term(g, constraints)
