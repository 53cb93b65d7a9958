import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from causalga.bif import load_network
from causalga.data import CategoricalDataset
from causalga.constraints import PairPlausibility
from causalga.graph import Dag, EdgeKind, EdgeOp
from causalga.oracles import SuggestionOracle

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def names_for(n):
    return tuple(f"V{i}" for i in range(n))


@st.composite
def dags(draw, min_nodes=1, max_nodes=7):
    n = draw(st.integers(min_nodes, max_nodes))
    perm = draw(st.permutations(range(n)))
    adj = np.zeros((n, n), dtype=bool)
    for a in range(n):
        for b in range(a + 1, n):
            if draw(st.booleans()):
                adj[perm[a], perm[b]] = True
    return Dag(names_for(n), adj)


@st.composite
def digraphs(draw, min_nodes=1, max_nodes=7):
    n = draw(st.integers(min_nodes, max_nodes))
    bits = draw(st.lists(st.booleans(), min_size=n * n, max_size=n * n))
    adj = np.array(bits, dtype=bool).reshape(n, n)
    np.fill_diagonal(adj, False)
    return adj


@st.composite
def datasets(draw, n_vars=None, max_vars=5, max_rows=60, max_card=3):
    k = n_vars if n_vars is not None else draw(st.integers(1, max_vars))
    cards = [draw(st.integers(2, max_card)) for _ in range(k)]
    n = draw(st.integers(1, max_rows))
    cols = [draw(st.lists(st.integers(0, c - 1), min_size=n, max_size=n)) for c in cards]
    labels = [[f"s{v}" for v in range(c)] for c in cards]
    return CategoricalDataset(names_for(k), labels, np.array(cols, dtype=np.int64).T.reshape(n, k))


def random_dataset(rng, n_rows, cards):
    cols = [rng.integers(0, c, size=n_rows) for c in cards]
    labels = [[f"s{v}" for v in range(c)] for c in cards]
    return CategoricalDataset(names_for(len(cards)), labels, np.stack(cols, axis=1))


@pytest.fixture(scope="session")
def asia():
    return load_network("asia")


@pytest.fixture(scope="session")
def cancer():
    return load_network("cancer")


class WrongEdgeOracle(SuggestionOracle):
    """Always pushes the same edges, whatever the data say."""

    name = "malicious"

    def pair_plausibilities(self, context):
        n = context.names
        return [PairPlausibility(a, b, 0.0 if k % 2 else 1.0) for k, (a, b) in
                enumerate((a, b) for a in n for b in n if a != b)]

    def propose_mutation(self, g, goal="refine"):
        return EdgeOp(EdgeKind.ADD, 0, g.n - 1)

    def propose_crossover(self, a, b):
        return [1] * a.n

    def propose_cycle_break(self, names, adjacency, cycle):
        return (0, 1)  # usually not on the cycle


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
