"""Discrete datasets, Bayesian networks with CPTs, and the CSV dialect."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import Dag, UnknownVariable  # noqa: F401  (re-exported)


class DataError(ValueError):
    pass


class RaggedRow(DataError):
    pass


class EmptyDataset(DataError):
    pass


class ConstantColumn(DataError):
    pass


class CategoricalDataset:
    """N records over discrete variables, stored as category indices.

    ``data`` is an ``(N, n)`` integer array; ``labels[i][k]`` is the label of
    category ``k`` of variable ``i``.
    """

    def __init__(self, names: Sequence[str], labels: Sequence[Sequence[str]], data):
        self.names = tuple(str(x) for x in names)
        self.labels = tuple(tuple(str(v) for v in lab) for lab in labels)
        arr = np.array(data, dtype=np.int64, copy=True)
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, len(self.names))
        if arr.ndim != 2 or arr.shape[1] != len(self.names):
            raise RaggedRow(f"data shape {arr.shape} does not match {len(self.names)} variables")
        if len(self.labels) != len(self.names):
            raise DataError("one label list per variable required")
        if len(set(self.names)) != len(self.names):
            raise DataError("variable names must be unique")
        for i, lab in enumerate(self.labels):
            if len(lab) < 2:
                raise ConstantColumn(f"variable {self.names[i]!r} has fewer than 2 categories")
            if len(set(lab)) != len(lab):
                raise DataError(f"duplicate labels for variable {self.names[i]!r}")
        if arr.size:
            card = np.array([len(lab) for lab in self.labels])
            if (arr < 0).any() or (arr >= card).any():
                raise DataError("category index out of range")
        arr.setflags(write=False)
        self.data = arr
        self._index = {name: i for i, name in enumerate(self.names)}

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(len(lab) for lab in self.labels)

    def index(self, var) -> int:
        if isinstance(var, (int, np.integer)):
            if not 0 <= var < self.n_vars:
                raise UnknownVariable(var)
            return int(var)
        try:
            return self._index[var]
        except KeyError:
            raise UnknownVariable(var) from None

    def column(self, var) -> np.ndarray:
        return self.data[:, self.index(var)]

    def __repr__(self):
        return f"CategoricalDataset({self.n_samples} rows x {self.n_vars} vars)"


def read_csv_dataset(text: str) -> CategoricalDataset:
    """Parse the comma-separated dialect; labels are indexed in sorted order."""
    lines = [ln for ln in text.replace("\r\n", "\n").split("\n") if ln.strip()]
    if not lines:
        raise EmptyDataset("no header row")
    header = [h.strip() for h in lines[0].split(",")]
    rows = []
    for lineno, line in enumerate(lines[1:], 2):
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != len(header):
            raise RaggedRow(f"line {lineno}: {len(fields)} fields under {len(header)}-column header")
        rows.append(fields)
    if not rows:
        raise EmptyDataset("no data rows")
    columns = list(zip(*rows))
    labels = []
    data = np.empty((len(rows), len(header)), dtype=np.int64)
    for i, col in enumerate(columns):
        cats = sorted(set(col))
        if len(cats) < 2:
            raise ConstantColumn(f"column {header[i]!r} takes a single value")
        lookup = {c: k for k, c in enumerate(cats)}
        data[:, i] = [lookup[v] for v in col]
        labels.append(cats)
    return CategoricalDataset(header, labels, data)


def write_csv_dataset(ds: CategoricalDataset) -> str:
    out = [",".join(ds.names)]
    label_arrays = [np.array(lab, dtype=object) for lab in ds.labels]
    cols = [label_arrays[i][ds.data[:, i]] for i in range(ds.n_vars)]
    for row in zip(*cols):
        out.append(",".join(row))
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class BayesNet:
    """A DAG with one conditional probability table per node.

    ``cpts[i]`` has shape ``(q_i, r_i)``; row ``j`` is the distribution of
    node ``i`` under parent configuration ``j``.  Configurations enumerate the
    parents sorted by node index in mixed-radix order, the first (smallest
    index) parent being the most significant digit.
    """

    graph: Dag
    states: tuple[tuple[str, ...], ...]
    cpts: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        g = self.graph
        if len(self.states) != g.n or len(self.cpts) != g.n:
            raise DataError("states/cpts must have one entry per node")
        cpts = []
        for i in range(g.n):
            r = len(self.states[i])
            if r < 2:
                raise DataError(f"node {g.node_names[i]!r} needs at least 2 states")
            q = int(np.prod([len(self.states[p]) for p in g.parents(i)], dtype=np.int64))
            t = np.array(self.cpts[i], dtype=float)
            if t.shape != (q, r):
                raise DataError(f"CPT of {g.node_names[i]!r} has shape {t.shape}, expected {(q, r)}")
            if (t < 0).any() or (t > 1).any():
                raise DataError(f"CPT of {g.node_names[i]!r} has entries outside [0, 1]")
            if np.abs(t.sum(axis=1) - 1.0).max(initial=0.0) > 1e-9:
                raise DataError(f"CPT rows of {g.node_names[i]!r} do not sum to 1")
            t.setflags(write=False)
            cpts.append(t)
        object.__setattr__(self, "cpts", tuple(cpts))
        object.__setattr__(self, "states", tuple(tuple(s) for s in self.states))

    @property
    def names(self) -> tuple[str, ...]:
        return self.graph.node_names

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.states)


def edges_of(net: BayesNet) -> set[tuple[str, str]]:
    return net.graph.named_edges()
