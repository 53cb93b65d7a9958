"""Structure-recovery metrics and prior-audit statistics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintSet
from .data import UnknownVariable
from .graph import Dag, NodeSetMismatch


def _check(g: Dag, truth: Dag):
    if g.node_names != truth.node_names:
        if set(g.node_names) != set(truth.node_names):
            raise NodeSetMismatch("graphs are over different variables")
        # align g to truth's node order
        perm = [g.index(x) for x in truth.node_names]
        return g.adjacency[np.ix_(perm, perm)], truth.adjacency
    return g.adjacency, truth.adjacency


def shd(g: Dag, truth: Dag) -> int:
    """Structural Hamming distance: number of unordered node pairs whose
    edge status differs (missing, extra, or reversed; a reversal counts 1)."""
    a, b = _check(g, truth)
    n = a.shape[0]
    iu = np.triu_indices(n, 1)
    # encode each pair as (i->j, j->i)
    sa = a[iu] * 1 + a.T[iu] * 2
    sb = b[iu] * 1 + b.T[iu] * 2
    return int(np.count_nonzero(sa != sb))


@dataclass(frozen=True)
class EdgeConfusion:
    tp: int
    fp: int
    fn: int
    tp_skel: int
    fp_skel: int
    fn_skel: int


@dataclass(frozen=True)
class EdgeScores:
    precision: float
    recall: float
    f1: float
    skeleton_precision: float
    skeleton_recall: float
    skeleton_f1: float
    confusion: EdgeConfusion


def edge_confusion(g: Dag, truth: Dag) -> EdgeConfusion:
    a, b = _check(g, truth)
    tp = int(np.count_nonzero(a & b))
    fp = int(np.count_nonzero(a & ~b))
    fn = int(np.count_nonzero(~a & b))
    sa, sb = a | a.T, b | b.T
    iu = np.triu_indices(a.shape[0], 1)
    sa, sb = sa[iu], sb[iu]
    return EdgeConfusion(tp, fp, fn, int(np.count_nonzero(sa & sb)),
                         int(np.count_nonzero(sa & ~sb)), int(np.count_nonzero(~sa & sb)))


def _prf(tp, fp, fn):
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def edge_f1(g: Dag, truth: Dag) -> EdgeScores:
    """Directed and skeleton precision/recall/F1.

    precision 0/0 := 0, recall 0/0 := 1 (empty truth), F1 := 0 when
    precision + recall = 0.
    """
    c = edge_confusion(g, truth)
    p, r, f = _prf(c.tp, c.fp, c.fn)
    sp, sr, sf = _prf(c.tp_skel, c.fp_skel, c.fn_skel)
    return EdgeScores(p, r, f, sp, sr, sf, c)


@dataclass(frozen=True)
class PriorAudit:
    n_constraints: int
    n_wrong: int
    n_rejected: int
    wrong_prior_proportion: float
    rejected_wrong_prior_proportion: float


def prior_audit_stats(constraints: ConstraintSet, learned: Dag, truth: Dag) -> PriorAudit:
    """A prior is wrong when the truth disagrees with it (required edge absent
    from the truth, forbidden edge present).  A wrong prior is rejected when
    the learned graph does not comply with it."""
    wrong = rejected = 0
    for c in constraints.constraints:
        for g in (learned, truth):
            for name in (c.source, c.target):
                if name not in g.node_names:
                    raise UnknownVariable(name)
        in_truth = truth.has_edge(truth.index(c.source), truth.index(c.target))
        in_learned = learned.has_edge(learned.index(c.source), learned.index(c.target))
        required = c.kind == "required"
        if in_truth != required:
            wrong += 1
            if in_learned != required:
                rejected += 1
    total = len(constraints.constraints)
    return PriorAudit(total, wrong, rejected,
                      wrong / total if total else 0.0,
                      rejected / wrong if wrong else 0.0)
