import json
import logging

import httpx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from causalga.constraints import (Constraint, ConstraintParseError, ConstraintSet, PairPlausibility,
                                  parse_constraints, synthesize_priors, write_constraints)
from causalga.data import CategoricalDataset
from causalga.graph import Dag, EdgeKind, EdgeOp
from causalga.oracles import (CIInitOracle, KnowledgeOracle, LLMConfig, LLMOracle, MIInitOracle, NullOracle,
                              OracleContext, RandomOracle, call_safely, knowledge_oracle)
from causalga.oracles.llm import parse_reply
from causalga.sampling import make_rng

from .conftest import random_dataset

NAMES = ("Smoking", "Cancer", "Xray")


class TestConstraintFiles:
    def test_document_and_json_lines(self):
        doc = {"default_weight": 2.0, "constraints": [{"from": "A", "to": "B", "kind": "required"}],
               "plausibilities": [{"from": "B", "to": "C", "plausibility": 0.1}]}
        a = parse_constraints(json.dumps(doc))
        lines = "\n".join(json.dumps(r) for r in [{"default_weight": 2.0}, *doc["constraints"],
                                                  *doc["plausibilities"]])
        b = parse_constraints(lines)
        assert a == b
        assert a.weight_of(a.constraints[0]) == 2.0
        assert parse_constraints(write_constraints(a)) == a

    def test_yaml(self):
        cs = parse_constraints("constraints:\n  - {from: A, to: B, kind: forbidden, weight: 3}\n")
        assert cs.forbidden() == [("A", "B")] and cs.constraints[0].weight == 3.0

    @pytest.mark.parametrize("text", [
        '{"constraints": [{"from": "A", "to": "B", "kind": "maybe"}]}',
        '{"constraints": [{"from": "A", "to": "A", "kind": "required"}]}',
        '{"constraints": [{"from": "A", "kind": "required"}]}',
        '{"constraints": [{"from": "A", "to": "B", "kind": "required", "weight": -1}]}',
        '{"constraints": [{"from": "A", "to": "B", "kind": "required"}, {"from": "A", "to": "B", "kind": "required"}]}',
        '{"plausibilities": [{"from": "A", "to": "B", "plausibility": 1.5}]}',
        '{"bogus": 1}',
        "{not json",
    ])
    def test_rejects(self, text):
        with pytest.raises(ConstraintParseError):
            parse_constraints(text)

    def test_synthesized_priors(self, asia):
        for seed in range(10):
            cs = synthesize_priors(asia.graph, 0.3, make_rng(seed))
            truth = asia.graph.named_edges()
            wrong = [e for e in cs.required() if e not in truth]
            assert len(cs) == 8 and len(wrong) == 2
            adj = np.zeros((8, 8), dtype=bool)
            for a, b in cs.required():
                adj[asia.graph.index(a), asia.graph.index(b)] = True
            Dag(asia.graph.node_names, adj)  # satisfiable: all priors at once stay acyclic


def chain():
    return Dag.from_edges(NAMES, [("Smoking", "Cancer")])


class TestKnowledgeOracle:
    def test_echo_and_defaults(self):
        cs = ConstraintSet(plausibilities=(PairPlausibility("Smoking", "Cancer", 0.9),))
        out = KnowledgeOracle(cs).pair_plausibilities(OracleContext(NAMES))
        assert out[0] == PairPlausibility("Smoking", "Cancer", 0.9)
        assert len(out) == 6
        assert {p.plausibility for p in out[1:]} == {0.5}

    def test_empty_file(self):
        o = KnowledgeOracle(ConstraintSet())
        assert {p.plausibility for p in o.pair_plausibilities(OracleContext(NAMES))} == {0.5}
        assert o.propose_mutation(chain()) is None
        assert o.propose_crossover(chain(), chain()) is None

    def test_missing_required_edge_is_added(self):
        cs = ConstraintSet((Constraint("Cancer", "Xray", "required"),))
        assert KnowledgeOracle(cs).propose_mutation(chain()) == EdgeOp(EdgeKind.ADD, 1, 2)

    def test_reversed_required_edge_is_reversed(self):
        cs = ConstraintSet((Constraint("Cancer", "Smoking", "required"),))
        assert KnowledgeOracle(cs).propose_mutation(chain()) == EdgeOp(EdgeKind.REVERSE, 0, 1)

    def test_present_forbidden_edge_is_removed(self):
        cs = ConstraintSet((Constraint("Smoking", "Cancer", "forbidden"),))
        assert KnowledgeOracle(cs).propose_mutation(chain()) == EdgeOp(EdgeKind.REMOVE, 0, 1)

    def test_cycle_break_lowest_plausibility(self):
        cs = ConstraintSet(plausibilities=(PairPlausibility("Smoking", "Cancer", 0.9),
                                           PairPlausibility("Cancer", "Smoking", 0.2)))
        adj = np.zeros((3, 3), dtype=bool)
        adj[0, 1] = adj[1, 0] = True
        assert KnowledgeOracle(cs).propose_cycle_break(NAMES, adj, [(0, 1), (1, 0)]) == (1, 0)
        assert KnowledgeOracle(ConstraintSet()).propose_cycle_break(NAMES, adj, [(0, 1), (1, 0)]) is None

    def test_crossover_prefers_agreeing_parent(self):
        cs = ConstraintSet((Constraint("Smoking", "Cancer", "required"),))
        a, b = chain(), Dag.empty(NAMES)
        assert KnowledgeOracle(cs).propose_crossover(a, b) == [None, 0, None]

    def test_from_file(self, tmp_path):
        p = tmp_path / "k.json"
        p.write_text('{"constraints": [{"from": "Smoking", "to": "Xray", "kind": "required"}]}')
        o = knowledge_oracle(str(p))
        assert o.plausibility("Smoking", "Xray") == 1.0 and o.plausibility("Xray", "Smoking") == 0.5


def copy_dataset(n=2000, seed=0):
    rng = make_rng(seed)
    x = rng.integers(0, 2, n)
    z = rng.integers(0, 2, n)
    return CategoricalDataset(["X", "Y", "Z"], [["0", "1"]] * 3, np.stack([x, x, z], axis=1))


class TestStatisticalOracles:
    def plaus(self, oracle, a, b):
        return {(p.source, p.target): p.plausibility for p in oracle.pair_plausibilities(None)}[(a, b)]

    def test_copy_pair_kept(self):
        ds = copy_dataset()
        for o in (CIInitOracle(ds), MIInitOracle(ds)):
            assert self.plaus(o, "X", "Y") == 1.0 and self.plaus(o, "Y", "X") == 1.0

    def test_ci_prunes_independent_pair_mostly(self):
        pruned = 0
        for seed in range(100):
            ds = random_dataset(np.random.default_rng(seed), 10_000, [2, 2])
            pruned += self.plaus(CIInitOracle(ds, 0.05), "V0", "V1") == 0.0
        assert pruned >= 88  # about 95 expected

    def test_mi_quantile_zero_keeps_all(self):
        o = MIInitOracle(random_dataset(np.random.default_rng(1), 500, [2, 3, 2, 2]), 0.0)
        assert {p.plausibility for p in o.pair_plausibilities(None)} == {1.0}

    def test_other_methods_silent(self):
        o = CIInitOracle(copy_dataset())
        g = Dag.empty(["X", "Y", "Z"])
        assert o.propose_mutation(g) is None and o.propose_crossover(g, g) is None


class TestBaseOracles:
    def test_null(self):
        o = NullOracle()
        g = chain()
        assert o.pair_plausibilities(OracleContext(NAMES)) is None
        assert o.propose_mutation(g) is None and o.propose_crossover(g, g) is None
        assert o.propose_cycle_break(NAMES, g.adjacency, []) is None

    def test_random_is_seeded(self):
        ctx = OracleContext(NAMES)
        a, b = RandomOracle(3), RandomOracle(3)
        assert a.pair_plausibilities(ctx) == b.pair_plausibilities(ctx)
        assert a.propose_mutation(chain()) == b.propose_mutation(chain())

    def test_call_safely_swallows(self, caplog):
        def boom(*_):
            raise RuntimeError("nope")
        with caplog.at_level(logging.WARNING):
            assert call_safely(boom, 1) is None
        assert "nope" in caplog.text

    def test_context_validation(self):
        with pytest.raises(ValueError):
            OracleContext(("A",), {"B": "unknown"})


# LLM oracle ------------------------------------------------------------------------


def completion(content):
    return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})


def make_llm(tmp_path, handler, **kw):
    cfg = LLMConfig(base_url="http://llm.test/v1", model="m", cache_dir=str(tmp_path / "cache"),
                    retry_backoff=0.0, **kw)
    calls = []

    def wrapped(request):
        calls.append(json.loads(request.content))
        return handler(request)

    return LLMOracle(cfg, OracleContext(NAMES, {"Smoking": "tobacco use"}, "lung health"),
                     httpx.MockTransport(wrapped)), calls


class TestLLMOracle:
    def test_add_op_parsed(self, tmp_path):
        o, calls = make_llm(tmp_path, lambda r: completion('{"op":{"kind":"add","from":"Cancer","to":"Xray"}}'))
        assert o.propose_mutation(chain()) == EdgeOp(EdgeKind.ADD, 1, 2)
        body = calls[0]
        assert body["model"] == "m" and body["temperature"] == 0.0
        assert "tobacco use" in body["messages"][1]["content"]

    def test_fenced_reply(self):
        assert parse_reply('```json\n{"op": null}\n```') == {"op": None}

    @pytest.mark.parametrize("reply", ["sure! add Cancer->Xray", '{"edges": 3}', '["op"]',
                                       '{"op":{"kind":"add","from":"Cancer","to":"Nowhere"}}',
                                       '{"op":{"kind":"explode","from":"Cancer","to":"Xray"}}'])
    def test_malformed_reply_gives_none(self, tmp_path, caplog, reply):
        o, _ = make_llm(tmp_path, lambda r: completion(reply))
        with caplog.at_level(logging.WARNING):
            assert o.propose_mutation(chain()) is None
            assert o.pair_plausibilities(OracleContext(NAMES)) in (None, [])
        assert caplog.records

    def test_cache_hit_on_repeat(self, tmp_path):
        o, calls = make_llm(tmp_path, lambda r: completion(
            '{"edges":[{"from":"Smoking","to":"Cancer","plausibility":0.95}]}'))
        first = o.pair_plausibilities(OracleContext(NAMES))
        assert first == [PairPlausibility("Smoking", "Cancer", 0.95)]
        assert o.pair_plausibilities(OracleContext(NAMES)) == first
        assert len(calls) == 1 and o.cache_hits == 1
        # a fresh oracle over the same cache directory needs no network either
        o2, calls2 = make_llm(tmp_path, lambda r: completion("{}"))
        assert o2.pair_plausibilities(OracleContext(NAMES)) == first and calls2 == []

    def test_unreachable_endpoint_is_null(self, tmp_path):
        def refuse(request):
            raise httpx.ConnectError("refused", request=request)
        o, calls = make_llm(tmp_path, refuse, max_retries=1)
        g = chain()
        adj = np.zeros((3, 3), dtype=bool)
        adj[0, 1] = adj[1, 0] = True
        assert o.pair_plausibilities(OracleContext(NAMES)) is None
        assert o.propose_mutation(g) is None
        assert o.propose_crossover(g, g) is None
        assert o.propose_cycle_break(NAMES, adj, [(0, 1), (1, 0)]) is None
        assert len(calls) == 8  # 4 queries x (1 try + 1 retry), nothing cached
        assert not (tmp_path / "cache").exists()

    def test_server_error_retried_then_succeeds(self, tmp_path):
        replies = iter([httpx.Response(503), completion('{"op":{"kind":"remove","from":"Smoking","to":"Cancer"}}')])
        o, calls = make_llm(tmp_path, lambda r: next(replies))
        adj = np.zeros((3, 3), dtype=bool)
        adj[0, 1] = adj[1, 0] = True
        assert o.propose_cycle_break(NAMES, adj, [(0, 1), (1, 0)]) == (0, 1)
        assert len(calls) == 2

    def test_client_error_not_retried(self, tmp_path):
        o, calls = make_llm(tmp_path, lambda r: httpx.Response(401))
        assert o.propose_mutation(chain()) is None and len(calls) == 1

    def test_crossover_reply(self, tmp_path):
        o, _ = make_llm(tmp_path, lambda r: completion(
            '{"op":{"kind":"crossover","take":{"Cancer":"second","Smoking":"first"}}}'))
        assert o.propose_crossover(chain(), chain()) == [0, 1, None]

    def test_credential_from_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MY_KEY", "secret")
        seen = []

        def handler(request):
            seen.append(request.headers.get("authorization"))
            return completion('{"op": null}')
        o, _ = make_llm(tmp_path, handler, api_key_env="MY_KEY")
        o.propose_mutation(chain())
        assert seen == ["Bearer secret"]

    @given(st.text(max_size=40))
    def test_parse_reply_total(self, text):
        out = parse_reply(text)
        assert out is None or ({"edges", "op"} & set(out))
