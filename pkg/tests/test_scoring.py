import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from causalga.constraints import Constraint, ConstraintSet
from causalga.data import CategoricalDataset, EmptyDataset, UnknownVariable, read_csv_dataset
from causalga.graph import Dag
from causalga.sampling import forward_sample
from causalga.scoring import (AuditScorer, LocalScoreKey, ScoreCache, ScoreHyper, Scorer, audit_score,
                              local_score, soft_constraint_term, total_score)

from .conftest import dags, datasets, random_dataset
from .reference import DATA_DIR, all_dags, bdeu_by_urn, bic_by_rows, mdl_local_by_rows, three_binary_rows


def as_rows(ds):
    return ds.data.tolist()


def as_adj(g):
    return g.adjacency.astype(int).tolist()


@pytest.fixture(scope="module")
def three():
    return read_csv_dataset((DATA_DIR / "three_binary_n50.csv").read_text())


class TestLocalScore:
    def test_bic_balanced_binary(self):
        ds = CategoricalDataset(["A"], [["0", "1"]], [[0]] * 4 + [[1]] * 4)
        expected = 8 * math.log(0.5) - 0.5 * math.log(8)
        assert local_score("bic", ds, LocalScoreKey.of(0, ())) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(-6.584898215, abs=1e-9)

    def test_copy_parent_has_zero_likelihood_term(self):
        rng = np.random.default_rng(0)
        x = rng.integers(0, 2, 100)
        ds = CategoricalDataset(["X", "Y"], [["0", "1"]] * 2, np.stack([x, x], axis=1))
        penalty = 0.5 * 1 * 2 * math.log(100)
        assert local_score("bic", ds, LocalScoreKey.of(1, (0,))) == pytest.approx(-penalty, abs=1e-12)

    def test_mdl_convention(self):
        ds = random_dataset(np.random.default_rng(1), 200, [2, 3, 2])
        for parents in [(), (0,), (0, 2)]:
            mdl = local_score("mdl", ds, LocalScoreKey.of(1, parents))
            assert mdl == pytest.approx(mdl_local_by_rows(as_rows(ds), [2, 3, 2], 1, parents), abs=1e-9)
            bic = local_score("bic", ds, LocalScoreKey.of(1, parents))
            assert mdl == pytest.approx(bic - len(parents) * math.log(3), abs=1e-9)

    def test_indegree_cap(self):
        ds = random_dataset(np.random.default_rng(2), 50, [2] * 6)
        assert local_score("bic", ds, LocalScoreKey.of(5, (0, 1, 2, 3, 4))) == -math.inf
        assert local_score("bic", ds, LocalScoreKey.of(5, (0, 1, 2, 3, 4)), ScoreHyper(max_indegree=5)) > -math.inf

    def test_errors(self):
        ds = random_dataset(np.random.default_rng(3), 10, [2, 2])
        with pytest.raises(UnknownVariable):
            local_score("bic", ds, LocalScoreKey(0, (7,)))
        with pytest.raises(ValueError):
            local_score("aic", ds, LocalScoreKey(0, ()))
        with pytest.raises(ValueError):
            LocalScoreKey.of(0, (0,))
        empty = CategoricalDataset(["A"], [["0", "1"]], np.zeros((0, 1), dtype=int))
        with pytest.raises(EmptyDataset):
            local_score("bic", empty, LocalScoreKey(0, ()))


class TestAgainstBruteForce:
    @pytest.mark.parametrize("family,oracle", [("bic", bic_by_rows), ("bdeu", bdeu_by_urn)])
    def test_all_25_three_node_dags(self, three, family, oracle):
        _, rows = three_binary_rows()
        frozen = json.loads((DATA_DIR / "three_binary_scores.json").read_text())
        assert len(frozen) == 25 == len(all_dags(3))
        for rec in frozen:
            g = Dag.from_edges(three.names, [tuple(e) for e in rec["edges"]])
            got = total_score(family, three, g)
            assert abs(got - oracle(rows, [2, 2, 2], as_adj(g))) <= 1e-9
            assert abs(got - rec[family]) <= 1e-9

    @given(datasets(n_vars=3, max_card=3), st.sampled_from(all_dags(3)), st.sampled_from([0.5, 1.0, 10.0]))
    def test_random_data_bdeu_and_bic(self, ds, adj, ess):
        g = Dag(ds.names, np.array(adj, dtype=bool))
        cards = list(ds.cardinalities)
        assert total_score("bdeu", ds, g, ScoreHyper(ess=ess)) == pytest.approx(
            bdeu_by_urn(as_rows(ds), cards, adj, ess), abs=1e-9)
        assert total_score("bic", ds, g) == pytest.approx(bic_by_rows(as_rows(ds), cards, adj), abs=1e-9)


class TestTotalScore:
    @given(dags(max_nodes=6), st.data())
    def test_decomposes_exactly(self, g, data):
        ds = data.draw(datasets(n_vars=g.n))
        for family in ("bic", "bdeu", "mdl"):
            parts = 0.0
            for i in range(g.n):
                parts += local_score(family, ds, LocalScoreKey(i, g.parents(i)))
            assert total_score(family, ds, g) == parts

    def test_empty_graph(self):
        ds = random_dataset(np.random.default_rng(4), 30, [2, 3, 2])
        assert total_score("bic", ds, Dag.empty(ds.names)) == sum(
            local_score("bic", ds, LocalScoreKey(i, ())) for i in range(3))

    def test_chain_beats_empty_most_of_the_time(self):
        from causalga.data import BayesNet

        g = Dag.from_edges(["X", "Y", "Z"], [("X", "Y"), ("Y", "Z")])
        strong = np.array([[0.8, 0.2], [0.2, 0.8]])
        net = BayesNet(g, (("0", "1"),) * 3, (np.array([[0.5, 0.5]]), strong, strong))
        wins = 0
        for seed in range(30):
            ds = forward_sample(net, 1000, seed)
            wins += total_score("bic", ds, g) > total_score("bic", ds, Dag.empty(g.node_names))
        assert wins > 15

    def test_bdeu_likelihood_equivalence(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            ds = random_dataset(rng, int(rng.integers(5, 200)), [int(rng.integers(2, 4)), int(rng.integers(2, 4))])
            fwd = Dag.from_edges(ds.names, [("V0", "V1")])
            back = Dag.from_edges(ds.names, [("V1", "V0")])
            assert abs(total_score("bdeu", ds, fwd) - total_score("bdeu", ds, back)) <= 1e-9

    @given(dags(max_nodes=5), st.data())
    def test_cache_transparent(self, g, data):
        ds = data.draw(datasets(n_vars=g.n))
        for family in ("bic", "bdeu"):
            cache = ScoreCache()
            first = total_score(family, ds, g, cache=cache)
            assert total_score(family, ds, g, cache=cache) == first == total_score(family, ds, g)
            assert cache.hits >= g.n

    def test_name_mismatch(self):
        ds = random_dataset(np.random.default_rng(6), 10, [2, 2])
        with pytest.raises(ValueError):
            total_score("bic", ds, Dag.empty(["A", "B"]))

    def test_scorer_removal_gain(self):
        ds = random_dataset(np.random.default_rng(7), 80, [2, 2, 2])
        s = Scorer(ds)
        with_edge = Dag.from_edges(ds.names, [("V0", "V2"), ("V1", "V2")])
        without = Dag.from_edges(ds.names, [("V1", "V2")])
        assert s.removal_gain(with_edge.adjacency, 0, 2) == pytest.approx(s.total(without) - s.total(with_edge),
                                                                        abs=1e-9)


def cs(*items, default=1.0):
    return ConstraintSet(tuple(Constraint(a, b, k, w) for a, b, k, w in items), default)


class TestAuditMode:
    g = Dag.from_edges(["A", "B", "C", "D"], [("A", "B"), ("B", "C")])

    def test_two_of_three_required(self):
        lam = cs(("A", "B", "required", None), ("B", "C", "required", None), ("C", "D", "required", None))
        assert soft_constraint_term(self.g, lam) == 1.0

    def test_empty_constraints(self):
        assert soft_constraint_term(self.g, ConstraintSet()) == 0.0

    def test_forbidden_violation(self):
        lam = cs(("A", "B", "forbidden", 5.0), ("D", "A", "forbidden", 1.0))
        assert soft_constraint_term(self.g, lam) == -5.0 + 1.0

    def test_unknown_variable(self):
        with pytest.raises(UnknownVariable):
            soft_constraint_term(self.g, cs(("A", "Q", "required", None)))

    def test_audit_score_identity_for_empty_prior(self, three):
        for adj in all_dags(3):
            g = Dag(three.names, np.array(adj, dtype=bool))
            assert audit_score("bic", three, g, ConstraintSet()) == total_score("bic", three, g)

    def test_large_weight_dominates(self, three):
        lam = cs(("C", "A", "required", None), ("A", "B", "forbidden", None)).with_weight(1e6)
        best = max((Dag(three.names, np.array(a, dtype=bool)) for a in all_dags(3)),
                   key=lambda g: audit_score("bdeu", three, g, lam))
        assert best.has_edge(2, 0) and not best.has_edge(0, 1)

    @given(dags(max_nodes=5), st.data())
    def test_audit_scorer_consistent(self, g, data):
        ds = data.draw(datasets(n_vars=g.n))
        names = g.node_names
        pairs = [(a, b) for a in names for b in names if a != b]
        picks = data.draw(st.lists(st.sampled_from(pairs), unique=True, max_size=4)) if pairs else []
        lam = ConstraintSet(tuple(Constraint(a, b, data.draw(st.sampled_from(["required", "forbidden"])),
                                             data.draw(st.floats(0, 10))) for a, b in picks))
        s = AuditScorer(Scorer(ds), lam)
        assert s.audit
        assert s.total(g) == pytest.approx(audit_score("bic", ds, g, lam), abs=1e-9)
        parts = sum(s.local(i, g.parents(i)) for i in range(g.n))
        assert s.total(g) == pytest.approx(parts, abs=1e-9)
        assert "AUDIT" in s.describe()
