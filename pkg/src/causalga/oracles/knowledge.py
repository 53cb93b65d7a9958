from __future__ import annotations

from ..constraints import ConstraintSet, PairPlausibility, read_constraints
from ..graph import CycleCreated, Dag, EdgeKind, EdgeOp, OpInvalid, apply_edge_op
from .base import SuggestionOracle

DEFAULT_PLAUSIBILITY = 0.5


class KnowledgeOracle(SuggestionOracle):
    """Deterministic oracle driven by a knowledge file.

    Plausibility of an ordered pair: the file's plausibility record if any,
    else 1.0 for a required edge, 0.0 for a forbidden one, else 0.5.
    """

    name = "knowledge"

    def __init__(self, knowledge: ConstraintSet, label: str = ""):
        self.knowledge = knowledge
        self.label = label
        self._listed: dict[tuple[str, str], float] = {}
        for c in knowledge.constraints:
            self._listed.setdefault((c.source, c.target), 1.0 if c.kind == "required" else 0.0)
        for p in knowledge.plausibilities:
            self._listed[(p.source, p.target)] = p.plausibility

    @classmethod
    def from_file(cls, path) -> "KnowledgeOracle":
        return cls(read_constraints(path), label=str(path))

    def plausibility(self, a: str, b: str) -> float:
        return self._listed.get((a, b), DEFAULT_PLAUSIBILITY)

    def pair_plausibilities(self, context):
        """File records verbatim, then every other ordered pair of the context
        at its derived plausibility."""
        out = list(self.knowledge.plausibilities)
        seen = {(p.source, p.target) for p in out}
        for a in context.names:
            for b in context.names:
                if a != b and (a, b) not in seen:
                    out.append(PairPlausibility(a, b, self.plausibility(a, b)))
        return out

    def _try(self, g: Dag, op: EdgeOp) -> EdgeOp | None:
        try:
            apply_edge_op(g, op)
        except (OpInvalid, CycleCreated):
            return None
        return op

    def propose_mutation(self, g, goal="refine"):
        names = g.node_names
        for a, b in self.knowledge.required():
            if a not in names or b not in names:
                continue
            i, j = g.index(a), g.index(b)
            if g.has_edge(i, j):
                continue
            op = self._try(g, EdgeOp(EdgeKind.REVERSE, j, i) if g.has_edge(j, i) else EdgeOp(EdgeKind.ADD, i, j))
            if op is not None:
                return op
        for a, b in self.knowledge.forbidden():
            if a in names and b in names and g.has_edge(g.index(a), g.index(b)):
                return EdgeOp(EdgeKind.REMOVE, g.index(a), g.index(b))
        return None

    def _agreement(self, g: Dag, child: int) -> int:
        names = g.node_names
        score = 0
        for c in self.knowledge.constraints:
            if c.target != names[child] or c.source not in names:
                continue
            present = g.has_edge(g.index(c.source), child)
            score += 1 if present == (c.kind == "required") else -1
        return score

    def propose_crossover(self, a, b):
        if not self.knowledge.constraints:
            return None
        choice = []
        for v in range(a.n):
            sa, sb = self._agreement(a, v), self._agreement(b, v)
            choice.append(0 if sa > sb else 1 if sb > sa else None)
        return choice

    def propose_cycle_break(self, names, adjacency, cycle):
        listed = [(self._listed[(names[i], names[j])], k)
                  for k, (i, j) in enumerate(cycle) if (names[i], names[j]) in self._listed]
        if not listed:
            return None
        _, k = min(listed)
        return tuple(cycle[k])

    def identity(self):
        return f"knowledge({self.label or len(self.knowledge)})"
