"""Directed acyclic graphs over named variables and the structural algorithms
used by the rest of the package.

Adjacency is a dense boolean matrix: ``adj[i, j]`` is true iff ``i -> j``.
Every tie is broken towards the smallest node index.
"""
from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class GraphError(ValueError):
    pass


class CycleError(GraphError):
    """Raised when a graph that must be acyclic is not."""


class OpInvalid(GraphError):
    pass


class CycleCreated(GraphError):
    pass


class GraphParseError(GraphError):
    pass


class UnknownVariable(KeyError):
    def __str__(self):
        return f"unknown variable {self.args[0]!r}"


class NodeSetMismatch(GraphError):
    pass


def _as_adjacency(adjacency) -> np.ndarray:
    adj = np.asarray(adjacency, dtype=bool)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise GraphError(f"adjacency must be square, got shape {adj.shape}")
    return adj


def is_acyclic(adjacency) -> bool:
    """Kahn's algorithm; True iff the digraph has no directed cycle."""
    adj = _as_adjacency(adjacency)
    indeg = adj.sum(axis=0).astype(int)
    stack = [i for i in range(adj.shape[0]) if indeg[i] == 0]
    seen = 0
    while stack:
        i = stack.pop()
        seen += 1
        for j in np.flatnonzero(adj[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                stack.append(int(j))
    return seen == adj.shape[0]


def find_cycle(adjacency) -> list[tuple[int, int]]:
    """Return the edges of one simple directed cycle, or ``[]`` if acyclic.

    Depth-first search started from the smallest index, visiting children in
    index order, so the returned cycle is deterministic.
    """
    adj = _as_adjacency(adjacency)
    n = adj.shape[0]
    color = [0] * n  # 0 new, 1 on stack, 2 done
    children = [np.flatnonzero(adj[i]).tolist() for i in range(n)]
    for root in range(n):
        if color[root]:
            continue
        path = [root]
        iters = [iter(children[root])]
        color[root] = 1
        while path:
            nxt = next(iters[-1], None)
            if nxt is None:
                color[path.pop()] = 2
                iters.pop()
                continue
            if color[nxt] == 1:
                start = path.index(nxt)
                cyc = path[start:] + [nxt]
                return [(cyc[k], cyc[k + 1]) for k in range(len(cyc) - 1)]
            if color[nxt] == 0:
                color[nxt] = 1
                path.append(nxt)
                iters.append(iter(children[nxt]))
    return []


class EdgeKind(enum.Enum):
    ADD = "add"
    REMOVE = "remove"
    REVERSE = "reverse"


@dataclass(frozen=True)
class EdgeOp:
    kind: EdgeKind
    source: int
    target: int

    def __post_init__(self):
        if not isinstance(self.kind, EdgeKind):
            object.__setattr__(self, "kind", EdgeKind(str(self.kind).lower()))
        if self.source == self.target:
            raise OpInvalid("edge operation endpoints must differ")
        if self.source < 0 or self.target < 0:
            raise OpInvalid("negative node index")

    def __str__(self):
        return f"{self.kind.value}({self.source}->{self.target})"


class Dag:
    """Immutable DAG over an ordered tuple of unique variable names."""

    __slots__ = ("_names", "_adj", "_key", "_index")

    def __init__(self, node_names: Sequence[str], adjacency=None):
        names = tuple(str(x) for x in node_names)
        if not names:
            raise GraphError("a graph needs at least one node")
        if len(set(names)) != len(names):
            raise GraphError("node names must be unique")
        n = len(names)
        if adjacency is None:
            adj = np.zeros((n, n), dtype=bool)
        else:
            adj = np.array(adjacency, dtype=bool, copy=True)
        if adj.shape != (n, n):
            raise GraphError(f"adjacency shape {adj.shape} does not match {n} nodes")
        if adj.diagonal().any():
            raise GraphError("self-loops are not allowed")
        if not is_acyclic(adj):
            raise CycleError("graph contains a directed cycle")
        adj.setflags(write=False)
        self._names = names
        self._adj = adj
        self._key = None
        self._index = None

    @classmethod
    def from_edges(cls, node_names: Sequence[str], edges: Iterable[tuple]) -> "Dag":
        """Build from ``(u, v)`` pairs given as names or indices."""
        names = tuple(node_names)
        index = {name: i for i, name in enumerate(names)}
        adj = np.zeros((len(names), len(names)), dtype=bool)
        for u, v in edges:
            u = index[u] if isinstance(u, str) else int(u)
            v = index[v] if isinstance(v, str) else int(v)
            adj[u, v] = True
        return cls(names, adj)

    @classmethod
    def empty(cls, node_names: Sequence[str]) -> "Dag":
        return cls(node_names)

    @property
    def node_names(self) -> tuple[str, ...]:
        return self._names

    @property
    def adjacency(self) -> np.ndarray:
        return self._adj

    @property
    def n(self) -> int:
        return len(self._names)

    def index(self, name: str) -> int:
        if self._index is None:
            self._index = {x: i for i, x in enumerate(self._names)}
        try:
            return self._index[name]
        except KeyError:
            raise UnknownVariable(name) from None

    def parents(self, i: int) -> tuple[int, ...]:
        return tuple(int(p) for p in np.flatnonzero(self._adj[:, i]))

    def children(self, i: int) -> tuple[int, ...]:
        return tuple(int(c) for c in np.flatnonzero(self._adj[i]))

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self._adj[i, j])

    def edges(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self._adj))]

    def named_edges(self) -> set[tuple[str, str]]:
        return {(self._names[i], self._names[j]) for i, j in self.edges()}

    def num_edges(self) -> int:
        return int(self._adj.sum())

    def in_degrees(self) -> np.ndarray:
        return self._adj.sum(axis=0)

    def key(self) -> bytes:
        """Hashable fingerprint of the edge set (node names excluded)."""
        if self._key is None:
            self._key = np.packbits(self._adj).tobytes()
        return self._key

    def with_adjacency(self, adjacency) -> "Dag":
        return Dag(self._names, adjacency)

    def __eq__(self, other):
        if not isinstance(other, Dag):
            return NotImplemented
        return self._names == other._names and np.array_equal(self._adj, other._adj)

    def __hash__(self):
        return hash((self._names, self.key()))

    def __repr__(self):
        edges = ", ".join(f"{self._names[i]}->{self._names[j]}" for i, j in self.edges())
        return f"Dag([{edges}], n={self.n})"


def apply_edge_op(g: Dag, op: EdgeOp) -> Dag:
    """Return a new graph with ``op`` applied; ``g`` is left untouched.

    Raises OpInvalid for adding an existing edge or removing/reversing a
    missing one, and CycleCreated if the result would be cyclic.
    """
    n = g.n
    i, j = op.source, op.target
    if i >= n or j >= n:
        raise OpInvalid(f"{op} out of range for {n} nodes")
    adj = g.adjacency.copy()
    if op.kind is EdgeKind.ADD:
        if adj[i, j]:
            raise OpInvalid(f"{op}: edge already present")
        adj[i, j] = True
    elif op.kind is EdgeKind.REMOVE:
        if not adj[i, j]:
            raise OpInvalid(f"{op}: edge absent")
        adj[i, j] = False
    else:
        if not adj[i, j]:
            raise OpInvalid(f"{op}: edge absent")
        adj[i, j] = False
        adj[j, i] = True
    if op.kind is not EdgeKind.REMOVE and not is_acyclic(adj):
        raise CycleCreated(f"{op} would create a cycle")
    return Dag(g.node_names, adj)


def topological_order(g: Dag) -> list[int]:
    """Kahn's algorithm, always emitting the smallest available index."""
    adj = g.adjacency
    indeg = adj.sum(axis=0).astype(int)
    heap = [i for i in range(g.n) if indeg[i] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        i = heapq.heappop(heap)
        order.append(i)
        for j in np.flatnonzero(adj[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(heap, int(j))
    return order


def reachability(adjacency) -> np.ndarray:
    """Transitive closure by Floyd-Warshall (``reach[i, j]``: path i ~> j)."""
    reach = _as_adjacency(adjacency).copy()
    for k in range(reach.shape[0]):
        reach |= np.outer(reach[:, k], reach[k])
    return reach


# Graph interchange format ---------------------------------------------------
#
#   [nodes]
#   A
#   B
#   [edges]
#   A -> B

def format_graph(g: Dag) -> str:
    lines = ["[nodes]", *g.node_names, "[edges]"]
    lines += [f"{g.node_names[i]} -> {g.node_names[j]}" for i, j in g.edges()]
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> Dag:
    section = None
    names: list[str] = []
    edges: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line in ("[nodes]", "[edges]"):
            section = line
        elif section == "[nodes]":
            names.append(line)
        elif section == "[edges]":
            parts = [p.strip() for p in line.split("->")]
            if len(parts) != 2 or not all(parts):
                raise GraphParseError(f"line {lineno}: expected 'from -> to', got {raw!r}")
            edges.append((parts[0], parts[1]))
        else:
            raise GraphParseError(f"line {lineno}: content before [nodes] header")
    unknown = {x for e in edges for x in e} - set(names)
    if unknown:
        raise GraphParseError(f"edges reference undeclared nodes: {sorted(unknown)}")
    return Dag.from_edges(names, edges)
