"""Genetic search over DAGs with optional oracle guidance, plus hill-climbing
and random-sampling baselines.

The scorer is the only thing that ranks graphs.  Oracles influence which
graphs get built (initial edge mask, variation operators, which edge to cut
from a cycle) and nothing else; the reported best graph is always the argmax
of the scorer over every graph the run evaluated.

Budget: the number of distinct full-graph evaluations.  Graphs already seen in
a run are served from a memo for free, as are the single-family score deltas
used by cycle repair and hill climbing.

Random streams: Philox keyed by ``seed`` with stream paths
``(0, generation, offspring)`` for variation, ``(1, generation)`` for
selection, ``(2, individual)`` for the initial population and ``(3, draw)``
for random search.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .constraints import PairPlausibility
from .graph import CycleCreated, Dag, OpInvalid, apply_edge_op, find_cycle, reachability
from .oracles.base import NullOracle, OracleContext, SuggestionOracle, call_safely
from .sampling import make_rng
from .scoring import Scorer

log = logging.getLogger(__name__)

CROSSOVERS = ("uniform", "parent_based", "oracle")
MUTATIONS = ("bitflip", "oracle")
INITS = ("random", "oracle_pruned")


class BudgetExhausted(Exception):
    pass


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 50
    tournament_size: int = 3
    elitism_count: int = 1
    crossover: str = "uniform"
    mutation: str = "bitflip"
    mutation_rate: float | None = None  # per edge slot; None means 2 / n**2
    crossover_rate: float = 0.9
    init: str = "random"
    tau: float = 0.2
    budget: int = 600
    seed: int = 0
    mutation_goal: str = "refine"
    # stop after this many consecutive generations that evaluate nothing new
    max_stale_generations: int = 50

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if not 1 <= self.tournament_size <= self.population_size:
            raise ValueError("tournament_size must lie in [1, population_size]")
        if not 0 <= self.elitism_count < self.population_size:
            raise ValueError("elitism_count must lie in [0, population_size)")
        if self.crossover not in CROSSOVERS:
            raise ValueError(f"crossover must be one of {CROSSOVERS}")
        if self.mutation not in MUTATIONS:
            raise ValueError(f"mutation must be one of {MUTATIONS}")
        if self.init not in INITS:
            raise ValueError(f"init must be one of {INITS}")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")
        if self.budget < self.population_size:
            raise ValueError("budget must be >= population_size")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must lie in [0, 1]")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")

    def rate(self, n: int) -> float:
        return self.mutation_rate if self.mutation_rate is not None else 2.0 / n**2


# Named operator settings used in the experiments.
PRESETS = {
    "eo1": dict(crossover="uniform", mutation="bitflip"),
    "eo2": dict(crossover="parent_based", mutation="bitflip"),
    "oracle": dict(crossover="oracle", mutation="oracle", init="oracle_pruned"),
}


@dataclass
class GenerationStats:
    generation: int
    best: float
    mean: float
    evaluations: int


@dataclass
class SearchResult:
    best_graph: Dag
    best_score: float
    evaluations_used: int
    history: list[GenerationStats]
    provenance: dict
    evaluated: list[tuple[Dag, float]] = field(default_factory=list, repr=False)


class Evaluator:
    """Per-run score memo that enforces the evaluation budget."""

    def __init__(self, scorer: Scorer, budget: int):
        self.scorer = scorer
        self.budget = budget
        self.memo: dict[bytes, float] = {}
        self.evaluated: list[tuple[Dag, float]] = []
        self.best: tuple[Dag, float] | None = None

    @property
    def used(self) -> int:
        return len(self.evaluated)

    def score(self, g: Dag) -> float:
        key = g.key()
        if key in self.memo:
            return self.memo[key]
        if self.used >= self.budget:
            raise BudgetExhausted
        s = self.scorer.total(g)
        self.memo[key] = s
        self.evaluated.append((g, s))
        if self.best is None or s > self.best[1]:
            self.best = (g, s)
        return s


# Initialization ----------------------------------------------------------------

def plausibility_mask(names, plausibilities: list[PairPlausibility] | None, tau: float) -> np.ndarray:
    """Edge ``i -> j`` is allowed iff its plausibility is >= tau (unlisted 0.5)."""
    n = len(names)
    plaus = np.full((n, n), 0.5)
    idx = {x: i for i, x in enumerate(names)}
    for p in plausibilities or ():
        if p.source in idx and p.target in idx:
            plaus[idx[p.source], idx[p.target]] = p.plausibility
    mask = plaus >= tau
    np.fill_diagonal(mask, False)
    return mask


def _with_fallback(mask: np.ndarray) -> np.ndarray:
    """Nodes with no allowed incident edge get all their edges back."""
    mask = mask.copy()
    n = mask.shape[0]
    off = ~np.eye(n, dtype=bool)
    isolated = ~((mask & off).any(axis=0) | (mask & off).any(axis=1))
    mask[isolated, :] = True
    mask[:, isolated] = True
    np.fill_diagonal(mask, False)
    return mask


def cap_indegree(adj: np.ndarray, cap: int, rng: np.random.Generator) -> np.ndarray:
    """Drop randomly chosen parents of nodes above the in-degree cap."""
    indeg = adj.sum(axis=0)
    for j in np.flatnonzero(indeg > cap):
        parents = np.flatnonzero(adj[:, j])
        drop = rng.choice(parents, size=len(parents) - cap, replace=False)
        adj[drop, j] = False
    return adj


def random_dag(n: int, mask: np.ndarray, rng: np.random.Generator, max_indegree: int) -> np.ndarray:
    """Random order, each allowed forward pair kept with probability 2/n."""
    perm = rng.permutation(n)
    u = rng.random((n, n))
    p = 2.0 / n if n > 1 else 0.0
    adj = np.zeros((n, n), dtype=bool)
    for a in range(n):
        for b in range(a + 1, n):
            i, j = perm[a], perm[b]
            if u[a, b] < p and mask[i, j]:
                adj[i, j] = True
    return cap_indegree(adj, max_indegree, rng)


def init_population(cfg: GaConfig, names, mask: np.ndarray | None, max_indegree: int = 4) -> list[Dag]:
    n = len(names)
    mask = np.ones((n, n), dtype=bool) if mask is None else _with_fallback(np.asarray(mask, dtype=bool))
    np.fill_diagonal(mask, False)
    return [Dag(names, random_dag(n, mask, make_rng(cfg.seed, 2, k), max_indegree))
            for k in range(cfg.population_size)]


# Variation ---------------------------------------------------------------------

def uniform_crossover(a: np.ndarray, b: np.ndarray, rng) -> np.ndarray:
    take_b = rng.random(a.shape) < 0.5
    return np.where(take_b, b, a)


def parent_based_crossover(a: np.ndarray, b: np.ndarray, rng) -> np.ndarray:
    take_b = rng.random(a.shape[0]) < 0.5
    return np.where(take_b[None, :], b, a)


def bitflip(adj: np.ndarray, rate: float, rng) -> np.ndarray:
    """Reverse each existing edge with probability ``rate``, then flip every
    off-diagonal slot with probability ``rate``."""
    n = adj.shape[0]
    rev = rng.random((n, n)) < rate
    flip = rng.random((n, n)) < rate
    out = adj.copy()
    src, dst = np.nonzero(adj & rev)
    out[src, dst] = False
    out[dst, src] = True
    np.fill_diagonal(flip, False)
    return out ^ flip


def repair_cycles(adj: np.ndarray, names, oracle: SuggestionOracle, scorer: Scorer) -> np.ndarray:
    """Cut edges until acyclic.  The oracle's suggestion is honoured only if it
    lies on the detected cycle; otherwise the cycle edge whose removal gains
    the most score goes (ties: smallest ``(from, to)``)."""
    adj = np.array(adj, dtype=bool, copy=True)
    while True:
        cycle = find_cycle(adj)
        if not cycle:
            return adj
        pick = call_safely(oracle.propose_cycle_break, tuple(names), adj.copy(), list(cycle))
        if pick is not None:
            try:
                pick = (int(pick[0]), int(pick[1]))
            except (TypeError, ValueError, IndexError):
                pick = None
        if pick not in cycle:
            gains = [(-scorer.removal_gain(adj, i, j), i, j) for i, j in cycle]
            _, i, j = min(gains)
            pick = (i, j)
        adj[pick] = False


def _oracle_mutation(dag: Dag, oracle, goal, cap) -> Dag | None:
    op = call_safely(oracle.propose_mutation, dag, goal)
    if op is None:
        return None
    try:
        out = apply_edge_op(dag, op)
    except (OpInvalid, CycleCreated, TypeError, AttributeError):
        return None
    if out.in_degrees().max(initial=0) > cap:
        return None
    return out


class GaState:
    def __init__(self, cfg, scorer, evaluator, population, scores):
        self.cfg = cfg
        self.scorer = scorer
        self.evaluator = evaluator
        self.population: list[Dag] = population
        self.scores: list[float] = scores
        self.generation = 0
        self.exhausted = False
        self.stale = 0
        self.history: list[GenerationStats] = []

    def record(self):
        self.history.append(GenerationStats(self.generation, self.evaluator.best[1],
                                            float(np.mean(self.scores)), self.evaluator.used))


def _tournament(scores, size, rng) -> int:
    picks = rng.choice(len(scores), size=size, replace=False)
    return int(min(picks, key=lambda k: (-scores[k], k)))


def make_offspring(state: GaState, oracle: SuggestionOracle, k: int) -> Dag:
    cfg, scorer = state.cfg, state.scorer
    names = scorer.names
    n = len(names)
    cap = scorer.max_indegree
    sel = state._sel_rng
    rng = make_rng(cfg.seed, 0, state.generation, k)
    pa = state.population[_tournament(state.scores, cfg.tournament_size, sel)]
    pb = state.population[_tournament(state.scores, cfg.tournament_size, sel)]
    a, b = pa.adjacency, pb.adjacency

    if rng.random() < cfg.crossover_rate:
        if cfg.crossover == "uniform":
            child = uniform_crossover(a, b, rng)
        elif cfg.crossover == "parent_based":
            child = parent_based_crossover(a, b, rng)
        else:
            choice = call_safely(oracle.propose_crossover, pa, pb)
            if not isinstance(choice, (list, tuple)) or len(choice) != n:
                child = uniform_crossover(a, b, rng)
            else:
                coins = rng.random(n) < 0.5
                take_b = np.array([bool(coins[v]) if c is None else c == 1 for v, c in enumerate(choice)])
                child = np.where(take_b[None, :], b, a)
    else:
        child = a.copy()
    child = repair_cycles(cap_indegree(child, cap, rng), names, oracle, scorer)

    if cfg.mutation == "oracle":
        mutated = _oracle_mutation(Dag(names, child), oracle, cfg.mutation_goal, cap)
        if mutated is not None:
            return mutated
    child = bitflip(child, cfg.rate(n), rng)
    child = repair_cycles(cap_indegree(child, cap, rng), names, oracle, scorer)
    return Dag(names, child)


def step_generation(state: GaState, oracle: SuggestionOracle) -> GaState:
    """Breed one generation.  Stops early, keeping the current population, if
    the budget runs out before the new population is complete."""
    cfg = state.cfg
    if state.exhausted:
        return state
    state.generation += 1
    state._sel_rng = make_rng(cfg.seed, 1, state.generation)
    order = sorted(range(len(state.scores)), key=lambda k: (-state.scores[k], k))
    new_pop = [state.population[k] for k in order[: cfg.elitism_count]]
    new_scores = [state.scores[k] for k in order[: cfg.elitism_count]]
    used_before = state.evaluator.used
    k = 0
    while len(new_pop) < cfg.population_size:
        child = make_offspring(state, oracle, k)
        k += 1
        try:
            s = state.evaluator.score(child)
        except BudgetExhausted:
            state.exhausted = True
            break
        new_pop.append(child)
        new_scores.append(s)
    if not state.exhausted:
        state.population, state.scores = new_pop, new_scores
    state.stale = state.stale + 1 if state.evaluator.used == used_before else 0
    state.record()
    return state


def run_search(cfg: GaConfig, scorer: Scorer, oracle: SuggestionOracle | None = None,
               context: OracleContext | None = None, max_generations: int | None = None) -> SearchResult:
    oracle = oracle or NullOracle()
    names = scorer.names
    mask = None
    if cfg.init == "oracle_pruned":
        ctx = context or OracleContext(names)
        plaus = call_safely(oracle.pair_plausibilities, ctx)
        mask = plausibility_mask(names, plaus if isinstance(plaus, list) else None, cfg.tau)
    population = init_population(cfg, names, mask, scorer.max_indegree)
    evaluator = Evaluator(scorer, cfg.budget)
    scores = [evaluator.score(g) for g in population]
    state = GaState(cfg, scorer, evaluator, population, scores)
    state.record()
    while not state.exhausted and state.stale < cfg.max_stale_generations:
        if max_generations is not None and state.generation >= max_generations:
            break
        if evaluator.used >= cfg.budget:
            break
        step_generation(state, oracle)
    best_graph, best_score = evaluator.best
    provenance = {"algorithm": "ga", "config": asdict(cfg), "seed": cfg.seed,
                  "oracle": oracle.identity(), "score": scorer.describe(),
                  "generations": state.generation}
    return SearchResult(best_graph, best_score, evaluator.used, state.history, provenance, evaluator.evaluated)


# Baselines ---------------------------------------------------------------------

def hill_climb(scorer: Scorer, budget: int, seed: int = 0) -> SearchResult:
    """Greedy best-neighbour ascent from the empty graph over add/remove/reverse.

    Each accepted move costs one full-graph evaluation (the empty start graph
    costs one too); neighbour deltas come from local scores.  Moves are
    scanned in (add, remove, reverse) x (from, to) order and only strict
    improvements are taken, so the path is deterministic; ``seed`` is kept
    for provenance only.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    names = scorer.names
    n = len(names)
    cap = scorer.max_indegree
    evaluator = Evaluator(scorer, budget)
    adj = np.zeros((n, n), dtype=bool)
    current = evaluator.score(Dag(names, adj))
    local = [scorer.local(i, ()) for i in range(n)]
    history = [GenerationStats(0, current, current, evaluator.used)]

    def parents(j, a=None):
        return tuple(int(p) for p in np.flatnonzero((adj if a is None else a)[:, j]))

    while evaluator.used < budget:
        reach = reachability(adj)
        indeg = adj.sum(axis=0)
        best = (1e-10, None)
        for i in range(n):
            for j in range(n):
                if i == j or adj[i, j] or adj[j, i] or indeg[j] >= cap or reach[j, i]:
                    continue
                d = scorer.local(j, parents(j) + (i,)) - local[j]
                if d > best[0]:
                    best = (d, ("add", i, j))
        for i, j in zip(*np.nonzero(adj)):
            i, j = int(i), int(j)
            d = scorer.local(j, tuple(p for p in parents(j) if p != i)) - local[j]
            if d > best[0]:
                best = (d, ("remove", i, j))
        for i, j in zip(*np.nonzero(adj)):
            i, j = int(i), int(j)
            if indeg[i] >= cap:
                continue
            trial = adj.copy()
            trial[i, j] = False
            if reachability(trial)[i, j]:
                continue  # another path i ~> j would close a cycle
            d = (scorer.local(j, tuple(p for p in parents(j) if p != i)) - local[j]
                 + scorer.local(i, parents(i) + (j,)) - local[i])
            if d > best[0]:
                best = (d, ("reverse", i, j))
        if best[1] is None:
            break
        kind, i, j = best[1]
        if kind == "add":
            adj[i, j] = True
        elif kind == "remove":
            adj[i, j] = False
        else:
            adj[i, j] = False
            adj[j, i] = True
        for v in {i, j}:
            local[v] = scorer.local(v, parents(v))
        try:
            current = evaluator.score(Dag(names, adj))
        except BudgetExhausted:  # pragma: no cover - guarded by the loop condition
            break
        history.append(GenerationStats(len(history), evaluator.best[1], current, evaluator.used))
    best_graph, best_score = evaluator.best
    provenance = {"algorithm": "hill_climb", "budget": budget, "seed": seed, "oracle": "none",
                  "score": scorer.describe()}
    return SearchResult(best_graph, best_score, evaluator.used, history, provenance, evaluator.evaluated)


def random_search(scorer: Scorer, budget: int, seed: int = 0, max_draws: int | None = None) -> SearchResult:
    """Score independently sampled random DAGs until the budget is used."""
    names = scorer.names
    n = len(names)
    mask = np.ones((n, n), dtype=bool)
    evaluator = Evaluator(scorer, budget)
    max_draws = max_draws if max_draws is not None else 50 * budget
    history = []
    for k in range(max_draws):
        if evaluator.used >= budget:
            break
        g = Dag(names, random_dag(n, mask, make_rng(seed, 3, k), scorer.max_indegree))
        s = evaluator.score(g)
        history.append(GenerationStats(k, evaluator.best[1], s, evaluator.used))
    best_graph, best_score = evaluator.best
    provenance = {"algorithm": "random", "budget": budget, "seed": seed, "oracle": "none",
                  "score": scorer.describe()}
    return SearchResult(best_graph, best_score, evaluator.used, history, provenance, evaluator.evaluated)
