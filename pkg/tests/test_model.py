import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbcn.model import (
    BinaryDataset,
    ContingencyStats,
    Cpt,
    CsvFormatError,
    Dag,
    ModelSchemaError,
    SbcnModel,
    dag_from_json,
    dag_to_json,
    has_cycle,
    scenarios_to_csv,
    validate_model,
)


def dfs_cycle_oracle(n, edges):
    """Independent recursive three-color DFS cycle detector."""
    adj = [[] for _ in range(n)]
    for u, v in edges:
        if u == v:
            return True
        adj[u].append(v)
    color = [0] * n  # 0 unseen, 1 on stack, 2 done

    def visit(u):
        color[u] = 1
        for v in adj[u]:
            if color[v] == 1:
                return True
            if color[v] == 0 and visit(v):
                return True
        color[u] = 2
        return False

    return any(color[u] == 0 and visit(u) for u in range(n))


def make_model(n, edges, tables=None, rank=None, names=None, confidence=None):
    dag = Dag(n, edges)
    cpts = []
    for v in range(n):
        parents = dag.parents(v)
        size = 2 ** len(parents)
        table = tables[v] if tables else [0.5] * size
        cpts.append(Cpt(v, parents, table))
    return SbcnModel(dag, cpts, rank or [0] * n, confidence, names)


def broken_model(n, edges, cpts, rank):
    """Assemble an SbcnModel without running its invariant checks."""
    model = object.__new__(SbcnModel)
    dag = object.__new__(Dag)
    object.__setattr__(dag, "n", n)
    object.__setattr__(dag, "edges", frozenset(edges))
    object.__setattr__(model, "dag", dag)
    object.__setattr__(model, "cpts", tuple(cpts))
    object.__setattr__(model, "rank", tuple(rank))
    object.__setattr__(model, "confidence", None)
    object.__setattr__(model, "names", tuple(f"v{i}" for i in range(n)))
    return model


class TestBinaryDataset:
    def test_valid_construction(self):
        ds = BinaryDataset([[0, 1], [1, 0]], ["a", "b"], [0, 1])
        assert ds.m == 2 and ds.n == 2
        assert ds.names == ("a", "b")
        assert ds.rank == (0, 1)

    def test_rejects_non_binary_cell(self):
        with pytest.raises(ValueError, match="row 1, column 0"):
            BinaryDataset([[0, 1], [2, 0]], ["a", "b"], [0, 0])

    def test_rejects_duplicate_names(self):
        with pytest.raises(ValueError, match="unique"):
            BinaryDataset([[0, 1]], ["a", "a"], [0, 0])

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            BinaryDataset([[0, 1]], ["a"], [0, 0])
        with pytest.raises(ValueError):
            BinaryDataset([[0, 1]], ["a", "b"], [0])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            BinaryDataset(np.zeros((0, 2)), ["a", "b"], [0, 0])

    def test_values_immutable(self):
        ds = BinaryDataset([[0, 1]], ["a", "b"], [0, 0])
        with pytest.raises(ValueError):
            ds.values[0, 0] = 1


class TestDatasetCsv:
    def test_round_trip(self):
        ds = BinaryDataset([[0, 1], [1, 1]], ["x", "y"], [0, 1])
        assert BinaryDataset.from_csv(ds.to_csv()) == ds

    def test_bad_cell_names_location(self):
        text = "a,b\n0,1\n0,2\n"
        with pytest.raises(CsvFormatError, match="row 3, column 2"):
            BinaryDataset.from_csv(text)

    def test_missing_rank_line_defaults_to_zero(self):
        ds = BinaryDataset.from_csv("a,b\n1,0\n")
        assert ds.rank == (0, 0)

    def test_rank_line_parsed(self):
        ds = BinaryDataset.from_csv("a,b\n#rank:0,3\n1,0\n")
        assert ds.rank == (0, 3)

    def test_rank_line_wrong_width(self):
        with pytest.raises(CsvFormatError, match="row 2"):
            BinaryDataset.from_csv("a,b\n#rank:0\n1,0\n")

    def test_row_with_wrong_cell_count(self):
        with pytest.raises(CsvFormatError, match="row 2"):
            BinaryDataset.from_csv("a,b\n0,1,1\n")

    def test_empty_input(self):
        with pytest.raises(CsvFormatError):
            BinaryDataset.from_csv("")

    @settings(max_examples=30, deadline=None)
    @given(st.data())
    def test_round_trip_property(self, data):
        n = data.draw(st.integers(1, 5))
        m = data.draw(st.integers(1, 8))
        values = data.draw(
            st.lists(st.lists(st.integers(0, 1), min_size=n, max_size=n), min_size=m, max_size=m)
        )
        rank = data.draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))
        ds = BinaryDataset(values, [f"c{i}" for i in range(n)], rank)
        assert BinaryDataset.from_csv(ds.to_csv()) == ds


class TestDag:
    def test_rejects_two_cycle(self):
        with pytest.raises(ValueError, match="cycle"):
            Dag(2, [(0, 1), (1, 0)])

    def test_rejects_self_loop(self):
        with pytest.raises(ValueError, match="self-loop"):
            Dag(2, [(1, 1)])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            Dag(2, [(0, 2)])

    def test_parents_sorted(self):
        dag = Dag(4, [(2, 3), (0, 3), (1, 3)])
        assert dag.parents(3) == (0, 1, 2)
        assert dag.children(0) == (3,)

    def test_with_without_edge(self):
        dag = Dag(3, [(0, 1)])
        assert (1, 2) in dag.with_edge(1, 2).edges
        assert dag.without_edge(0, 1).edges == frozenset()

    def test_cycle_check_matches_dfs_oracle_exhaustive_n4(self):
        n = 4
        pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
        for bits in range(1 << len(pairs)):
            edges = [pairs[i] for i in range(len(pairs)) if bits >> i & 1]
            assert has_cycle(n, edges) == dfs_cycle_oracle(n, edges)

    def test_dag_constructor_agrees_with_oracle_n3(self):
        n = 3
        pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
        for r in range(len(pairs) + 1):
            for edges in itertools.combinations(pairs, r):
                cyclic = dfs_cycle_oracle(n, edges)
                if cyclic:
                    with pytest.raises(ValueError):
                        Dag(n, edges)
                else:
                    assert Dag(n, edges).edges == frozenset(edges)


class TestCpt:
    def test_config_index_low_bit_first_parent(self):
        cpt = Cpt(3, [0, 2], [0.1, 0.2, 0.3, 0.4])
        assert cpt.config_index([0, 0]) == 0
        assert cpt.config_index([1, 0]) == 1
        assert cpt.config_index([0, 1]) == 2
        assert cpt.config_index([1, 1]) == 3

    def test_table_length_enforced(self):
        with pytest.raises(ValueError, match="entries"):
            Cpt(0, [1], [0.5])

    def test_probability_domain_enforced(self):
        with pytest.raises(ValueError):
            Cpt(0, [], [1.5])

    def test_parents_must_ascend(self):
        with pytest.raises(ValueError):
            Cpt(0, [2, 1], [0.1, 0.2, 0.3, 0.4])


class TestValidateModel:
    def test_valid_model(self):
        model = make_model(3, [(0, 1), (1, 2)])
        assert validate_model(model) == []

    def test_parent_mismatch_reported(self):
        dag = Dag(3, [(1, 2)])
        cpts = [
            Cpt(0, [], [0.5]),
            Cpt(1, [], [0.5]),
            Cpt(2, [0], [0.2, 0.8]),  # claims parent 0, structure says 1
        ]
        model = broken_model(3, dag.edges, cpts, [0, 0, 0])
        problems = validate_model(model)
        assert len(problems) == 1
        assert "parents" in problems[0]

    def test_cycle_reported(self):
        cpts = [Cpt(0, [1], [0.5, 0.5]), Cpt(1, [0], [0.5, 0.5])]
        model = broken_model(2, [(0, 1), (1, 0)], cpts, [0, 0])
        problems = validate_model(model)
        assert any("cycle" in p for p in problems)

    def test_constructor_rejects_invalid(self):
        dag = Dag(2, [(0, 1)])
        with pytest.raises(ValueError, match="invalid model"):
            SbcnModel(dag, [Cpt(0, [], [0.5]), Cpt(1, [], [0.5])], [0, 0])

    def test_confidence_for_absent_edge_reported(self):
        dag = Dag(2, [(0, 1)])
        with pytest.raises(ValueError, match="absent edge"):
            SbcnModel(
                dag,
                [Cpt(0, [], [0.5]), Cpt(1, [0], [0.5, 0.5])],
                [0, 0],
                confidence={(1, 0): 0.9},
            )


class TestModelJson:
    def test_round_trip_single_edge(self):
        model = make_model(
            2,
            [(0, 1)],
            tables=[[1 / 3], [0.123456789012345, 2 / 3]],
            rank=[0, 1],
            names=["Km", "P0"],
            confidence={(0, 1): 0.75},
        )
        assert SbcnModel.from_json(model.to_json()) == model

    def test_equality_is_by_contents(self):
        a = make_model(2, [(0, 1)], tables=[[0.5], [0.25, 0.75]])
        b = make_model(2, [(0, 1)], tables=[[0.5], [0.25, 0.75]])
        c = make_model(2, [(0, 1)], tables=[[0.5], [0.25, 0.8]])
        assert a == b
        assert a != c
        assert a != "not a model"

    def test_full_precision_floats(self):
        model = make_model(1, [], tables=[[0.1 + 0.2]])
        back = SbcnModel.from_json(model.to_json())
        assert back.cpt(0).table[0] == 0.1 + 0.2

    def test_missing_keys_listed(self):
        with pytest.raises(ModelSchemaError, match="missing keys: cpts"):
            SbcnModel.from_json(json.dumps({"n": 1, "names": ["a"], "rank": [0], "edges": []}))

    def test_not_json(self):
        with pytest.raises(ModelSchemaError, match="not valid JSON"):
            SbcnModel.from_json("{nope")

    def test_dag_json_round_trip(self):
        dag = Dag(3, [(0, 2), (1, 2)])
        assert dag_from_json(dag_to_json(dag, ["a", "b", "c"])).edges == dag.edges


class TestContingencyStats:
    def test_rates(self):
        s = ContingencyStats(tp=3, fp=1, fn=2, tn=6)
        assert s.fp_rate_of_inferred == 1 / 4
        assert s.fn_rate_of_true == 2 / 5
        assert s.fpr == 1 / 7
        assert s.tpr == 3 / 5

    def test_degenerate_denominators(self):
        s = ContingencyStats(tp=0, fp=0, fn=0, tn=0)
        assert s.fp_rate_of_inferred == 0.0
        assert s.tpr == 0.0

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            ContingencyStats(tp=-1, fp=0, fn=0, tn=0)


class TestScenarioCsv:
    def test_rows_and_header(self):
        text = scenarios_to_csv(np.array([[0, 1], [1, 1]], dtype=np.uint8), ["a", "b"])
        assert text == "a,b\n0,1\n1,1\n"

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            scenarios_to_csv(np.zeros((2, 2), dtype=np.uint8), ["a"])
