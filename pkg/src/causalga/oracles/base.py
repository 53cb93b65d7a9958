"""The suggestion-oracle interface.

An oracle only proposes.  None of its methods sees a score, a likelihood or
the search's acceptance decisions, and none returns one; every method may
return ``None`` and the engine then falls back to the classical operator.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..constraints import PairPlausibility
from ..graph import Dag, EdgeKind, EdgeOp

log = logging.getLogger(__name__)

MUTATION_GOALS = ("refine", "diversify")


@dataclass(frozen=True)
class OracleContext:
    """What an oracle may know about the problem: names and prose only."""

    names: tuple[str, ...]
    descriptions: Mapping[str, str] = field(default_factory=dict)
    background: str = ""

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        unknown = set(self.descriptions) - set(self.names)
        if unknown:
            raise ValueError(f"descriptions for unknown variables {sorted(unknown)}")


class SuggestionOracle:
    """Base class; the defaults make a null oracle that never suggests."""

    name = "null"

    def pair_plausibilities(self, context: OracleContext) -> list[PairPlausibility] | None:
        return None

    def propose_mutation(self, g: Dag, goal: str = "refine") -> EdgeOp | None:
        return None

    def propose_crossover(self, a: Dag, b: Dag) -> list[int | None] | None:
        """Per node, 0 to inherit its parent set from ``a``, 1 from ``b``,
        ``None`` for no preference."""
        return None

    def propose_cycle_break(self, names: Sequence[str], adjacency: np.ndarray,
                            cycle: Sequence[tuple[int, int]]) -> tuple[int, int] | None:
        return None

    def identity(self) -> str:
        return self.name


class NullOracle(SuggestionOracle):
    pass


class RandomOracle(SuggestionOracle):
    """Uninformed proposals from its own seeded stream."""

    name = "random"

    def __init__(self, seed: int = 0):
        from ..sampling import make_rng

        self.seed = seed
        self._rng = make_rng(seed, 7)

    def pair_plausibilities(self, context):
        out = []
        for i, a in enumerate(context.names):
            for j, b in enumerate(context.names):
                if i != j:
                    out.append(PairPlausibility(a, b, float(self._rng.random())))
        return out

    def propose_mutation(self, g, goal="refine"):
        if g.n < 2:
            return None
        i, j = (int(x) for x in self._rng.choice(g.n, size=2, replace=False))
        if g.has_edge(i, j):
            kind = EdgeKind.REMOVE if self._rng.random() < 0.5 else EdgeKind.REVERSE
        else:
            kind = EdgeKind.ADD
        return EdgeOp(kind, i, j)

    def propose_crossover(self, a, b):
        return [int(x) for x in self._rng.integers(0, 2, size=a.n)]

    def propose_cycle_break(self, names, adjacency, cycle):
        return tuple(cycle[int(self._rng.integers(len(cycle)))])

    def identity(self):
        return f"random(seed={self.seed})"


def call_safely(fn, *args, **kwargs):
    """Invoke an oracle method; any exception degrades to ``None``."""
    try:
        return fn(*args, **kwargs)
    except Exception as exc:  # oracles are untrusted
        log.warning("oracle call %s failed: %s", getattr(fn, "__name__", fn), exc)
        return None
