"""Slow, independent reference computations used as test oracles.

Nothing here imports the package's algorithms; everything works on plain
Python lists and dicts so a shared bug cannot make both sides agree.
Run ``python3 tests/reference.py`` to regenerate the frozen values in
``tests/data``.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
from collections import Counter
from pathlib import Path

DATA_DIR = Path(__file__).parent / "data"


# Graphs ----------------------------------------------------------------------

def closure(adj):
    """Floyd-Warshall transitive closure on a list-of-lists 0/1 matrix."""
    n = len(adj)
    reach = [[bool(adj[i][j]) for j in range(n)] for i in range(n)]
    for k in range(n):
        for i in range(n):
            if reach[i][k]:
                for j in range(n):
                    if reach[k][j]:
                        reach[i][j] = True
    return reach


def has_cycle(adj) -> bool:
    reach = closure(adj)
    return any(reach[i][i] for i in range(len(adj)))


def all_dags(n):
    """Every DAG on ``n`` labelled nodes as a list-of-lists matrix."""
    slots = [(i, j) for i in range(n) for j in range(n) if i != j]
    out = []
    for bits in itertools.product((0, 1), repeat=len(slots)):
        adj = [[0] * n for _ in range(n)]
        for (i, j), b in zip(slots, bits):
            adj[i][j] = b
        if not has_cycle(adj):
            out.append(adj)
    return out


def parent_lists(adj):
    n = len(adj)
    return [[i for i in range(n) if adj[i][j]] for j in range(n)]


# Scores ----------------------------------------------------------------------

def bic_by_rows(rows, cards, adj):
    """MLE log-likelihood accumulated row by row, minus the BIC penalty."""
    N = len(rows)
    pa = parent_lists(adj)
    total = 0.0
    for v, ps in enumerate(pa):
        joint = Counter((tuple(r[p] for p in ps), r[v]) for r in rows)
        marg = Counter(tuple(r[p] for p in ps) for r in rows)
        for r in rows:
            cfg = tuple(r[p] for p in ps)
            total += math.log(joint[(cfg, r[v])] / marg[cfg])
        q = 1
        for p in ps:
            q *= cards[p]
        total -= (cards[v] - 1) * q / 2 * math.log(N)
    return total


def mdl_local_by_rows(rows, cards, child, parents):
    """Description length of one family in nats, negated so larger is better:
    -(-loglik + params/2 * ln N + |parents| * ln n_vars)."""
    N = len(rows)
    joint = Counter((tuple(r[p] for p in parents), r[child]) for r in rows)
    marg = Counter(tuple(r[p] for p in parents) for r in rows)
    ll = sum(math.log(joint[(tuple(r[p] for p in parents), r[child])] / marg[tuple(r[p] for p in parents)])
             for r in rows)
    q = 1
    for p in parents:
        q *= cards[p]
    return -(-ll + (cards[child] - 1) * q / 2 * math.log(N) + len(parents) * math.log(len(cards)))


def bdeu_by_urn(rows, cards, adj, ess=1.0):
    """Log marginal likelihood as a product of sequential Polya-urn
    predictive probabilities (exchangeability form of the Dirichlet integral)."""
    pa = parent_lists(adj)
    total = 0.0
    for v, ps in enumerate(pa):
        q = 1
        for p in ps:
            q *= cards[p]
        a_jk = ess / (q * cards[v])
        a_j = ess / q
        seen_jk, seen_j = Counter(), Counter()
        for r in rows:
            cfg = tuple(r[p] for p in ps)
            total += math.log((seen_jk[(cfg, r[v])] + a_jk) / (seen_j[cfg] + a_j))
            seen_jk[(cfg, r[v])] += 1
            seen_j[cfg] += 1
    return total


# Metrics ----------------------------------------------------------------------

def pair_status(adj, i, j):
    if adj[i][j]:
        return "fwd"
    if adj[j][i]:
        return "back"
    return "none"


def shd_pairs(a, b):
    n = len(a)
    return sum(pair_status(a, i, j) != pair_status(b, i, j) for i in range(n) for j in range(i + 1, n))


def f1_pairs(g, truth):
    n = len(g)
    tp = sum(g[i][j] and truth[i][j] for i in range(n) for j in range(n))
    fp = sum(g[i][j] and not truth[i][j] for i in range(n) for j in range(n))
    fn = sum(truth[i][j] and not g[i][j] for i in range(n) for j in range(n))
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 1.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return tp, fp, fn, prec, rec, f1


# Tests ----------------------------------------------------------------------------

def g2_by_counts(rows, x, y, z):
    nxyz = Counter((r[x], r[y], tuple(r[k] for k in z)) for r in rows)
    nxz = Counter((r[x], tuple(r[k] for k in z)) for r in rows)
    nyz = Counter((r[y], tuple(r[k] for k in z)) for r in rows)
    nz = Counter(tuple(r[k] for k in z) for r in rows)
    return 2 * sum(c * math.log(c * nz[cz] / (nxz[(a, cz)] * nyz[(b, cz)])) for (a, b, cz), c in nxyz.items())


def mi_by_counts(rows, x, y):
    N = len(rows)
    pxy = Counter((r[x], r[y]) for r in rows)
    px = Counter(r[x] for r in rows)
    py = Counter(r[y] for r in rows)
    return sum(c / N * math.log(c * N / (px[a] * py[b])) for (a, b), c in pxy.items())


# Networks ---------------------------------------------------------------------

def exact_marginals(names, parents, states, table):
    """Marginals by summing the full joint.

    ``parents[v]`` lists parent names, ``table[v]`` maps a tuple of parent
    states (in ``parents[v]`` order) to a dict state -> probability.
    """
    out = {v: Counter() for v in names}
    for combo in itertools.product(*(states[v] for v in names)):
        assign = dict(zip(names, combo))
        p = 1.0
        for v in names:
            p *= table[v][tuple(assign[u] for u in parents[v])][assign[v]]
        for v in names:
            out[v][assign[v]] += p
    return out


# Frozen values -------------------------------------------------------------------

def three_binary_rows():
    with open(DATA_DIR / "three_binary_n50.csv", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[int(v) for v in row] for row in reader]
    return header, rows


def freeze():
    header, rows = three_binary_rows()
    cards = [2, 2, 2]
    records = []
    for adj in all_dags(3):
        edges = [[header[i], header[j]] for i in range(3) for j in range(3) if adj[i][j]]
        records.append({"edges": edges, "bic": bic_by_rows(rows, cards, adj),
                        "bdeu": bdeu_by_urn(rows, cards, adj, 1.0)})
    (DATA_DIR / "three_binary_scores.json").write_text(json.dumps(records, indent=1) + "\n")
    print(f"froze {len(records)} DAG scores")


if __name__ == "__main__":
    freeze()
