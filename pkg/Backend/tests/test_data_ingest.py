import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from builders import random_dataset
from core.errors import DimensionMismatch, ParseError, SchemaMismatch, UnknownReference
from data_ingest import (
    parse_dataset,
    parse_labels,
    parse_matrix,
    write_assignment,
    write_dataset,
    write_matrix,
    write_report,
)
from models import ClusterAssignment, DistanceMatrix, EvaluationReport

HEADER = """\
vertex_type object Attr1:discrete Attr2:continuous
vertex_type element
edge_type R 2
target object
"""


def test_fig3_dataset_shape(fig3):
    h = fig3.hypergraph
    assert sorted(h.vertices) == ["A", "B", "C", "D", "E"]
    assert [(e.type, e.members) for e in h.hyperedges] == [
        ("R", ("A", "C")), ("R", ("A", "D")), ("R", ("B", "E")), ("F", ("A", "B", "D")),
    ]
    assert fig3.target_ids == ["A", "B"]
    assert fig3.labels == {"A": "first", "B": "second"}
    assert h.is_frozen


def test_lines_may_come_in_any_order():
    text = """\
e R A C   # facts before declarations
v element C
v object A Attr1=X
target object
vertex_type object Attr1:discrete Attr2:continuous
vertex_type element
edge_type R 2
"""
    dataset = parse_dataset(text)
    assert len(dataset.hypergraph.hyperedges) == 1


def test_missing_value_tokens():
    dataset = parse_dataset(HEADER + "v object A Attr1=? Attr2=\n")
    assert dataset.hypergraph.vertex("A").values == {}


def test_unknown_member_reports_line():
    text = HEADER + "v object A\ne R A ghost\n"
    with pytest.raises(UnknownReference) as info:
        parse_dataset(text)
    assert info.value.line == 6
    assert info.value.name == "ghost"


def test_bad_continuous_value_reports_line():
    with pytest.raises(SchemaMismatch, match="line 5"):
        parse_dataset(HEADER + "v object A Attr2=abc\n")


@pytest.mark.parametrize("text, line", [
    (HEADER + "frobnicate x\n", 5),
    (HEADER + "target element\n", 5),
    (HEADER + "v object A\nv object B\ne R A B Weight=3\n", 7),
    ("vertex_type object\nedge_type R two\ntarget object\n", 2),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as info:
        parse_dataset(text)
    assert info.value.line == line


def test_missing_target_declaration():
    with pytest.raises(ParseError, match="target"):
        parse_dataset("vertex_type object\n")


def test_label_of_non_target_vertex():
    with pytest.raises(SchemaMismatch):
        parse_dataset(HEADER + "v element C\nlabel C x\n")


def test_parse_labels_reads_only_label_lines(fig3_text):
    assert parse_labels(fig3_text) == {"A": "first", "B": "second"}


def test_write_dataset_reparses_to_same_graph(fig3):
    again = parse_dataset(write_dataset(fig3))
    assert write_dataset(again) == write_dataset(fig3)
    assert again.hypergraph.vertex("A").values == fig3.hypergraph.vertex("A").values


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_write_dataset_preserves_random_graphs(seed):
    dataset = random_dataset(seed)
    again = parse_dataset(write_dataset(dataset))
    h, h2 = dataset.hypergraph, again.hypergraph
    assert h.vertices == h2.vertices
    assert [(e.type, e.members) for e in h.hyperedges] == [(e.type, e.members) for e in h2.hyperedges]
    assert again.labels == dataset.labels


def test_matrix_file_format():
    m = DistanceMatrix(ids=["a", "b"], values=np.array([[0.0, 1 / 3], [1 / 3, 0.0]]))
    text = write_matrix(m)
    assert text == "a,b\n0,0.333333333\n0.333333333,0\n"
    parsed, ids = parse_matrix(text)
    assert ids == ["a", "b"]
    np.testing.assert_allclose(parsed.values, m.values, atol=1e-9)


def test_write_matrix_mirrors_upper_triangle():
    values = np.array([[0.0, 0.5], [0.4, 0.0]])
    parsed, _ = parse_matrix(write_matrix(values, header=["x", "y"]))
    assert parsed.values[1, 0] == 0.5


def test_write_matrix_dimension_checks():
    with pytest.raises(DimensionMismatch):
        write_matrix(np.zeros((2, 3)), header=["a", "b"])
    with pytest.raises(DimensionMismatch):
        write_matrix(np.zeros((2, 2)), header=["a"])


def test_parse_matrix_rejects_garbage():
    with pytest.raises(ParseError):
        parse_matrix("a,b\n0,x\n1,0\n")
    with pytest.raises(ParseError):
        parse_matrix("a,b\n0,1\n")


def test_assignment_and_report_output():
    assignment = ClusterAssignment(ids=["a", "b"], labels=[0, 1], k=2)
    assert write_assignment(assignment) == "a 0\nb 1\n"

    report = EvaluationReport(task="clustering", metric="ari", value=0.5)
    payload = json.loads(write_report(report))
    assert payload["metric"] == "ari"
    assert payload["value"] == 0.5
