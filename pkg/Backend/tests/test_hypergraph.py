import pytest
from hypothesis import given, strategies as st

from builders import random_dataset
from core.errors import (
    ArityMismatch,
    DuplicateId,
    FrozenGraph,
    PositionTypeMismatch,
    SchemaMismatch,
    UnknownType,
    UnknownVertex,
)
from hypergraph import AttributeSchema, EdgeType, Hypergraph, VertexType, validate


def small_graph():
    h = Hypergraph(
        vertex_types=[
            VertexType(name="object", attributes=(
                AttributeSchema(name="Attr1", kind="discrete"),
                AttributeSchema(name="Attr2", kind="continuous"),
            )),
            VertexType(name="element"),
        ],
        edge_types=[
            EdgeType(name="R", arity=2, position_types=("object", "element")),
            EdgeType(name="F", arity=3),
        ],
    )
    h.add_vertex("object", "A", {"Attr1": "X", "Attr2": 1.0})
    h.add_vertex("object", "B", {"Attr1": "Y", "Attr2": "3"})
    h.add_vertex("element", "C")
    h.add_vertex("element", "D")
    return h


def test_incident_edges_in_insertion_order(fig3):
    h = fig3.hypergraph
    labels = [(edge.type, position) for edge, position in h.incident_edges("A")]
    assert labels == [("R", 1), ("R", 1), ("F", 1)]
    assert [(edge.type, position) for edge, position in h.incident_edges("D")] == [("R", 2), ("F", 3)]


def test_vertex_occupying_two_positions_has_two_entries():
    h = small_graph()
    h.add_hyperedge("F", ["A", "A", "C"])
    assert [position for _, position in h.incident_edges("A")] == [1, 2]
    assert h.incident_edge_ids("A") == frozenset({0})
    assert validate(h) == []


def test_continuous_values_are_coerced_to_float():
    h = small_graph()
    assert h.vertex("B").value("Attr2") == 3.0
    assert isinstance(h.vertex("B").value("Attr2"), float)


def test_missing_values_are_left_out():
    h = small_graph()
    h.add_vertex("object", "E", {"Attr1": None, "Attr2": 2})
    assert h.vertex("E").values == {"Attr2": 2.0}


@pytest.mark.parametrize("values", [
    {"Attr9": "x"}, {"Attr2": "not-a-number"}, {"Attr2": float("nan")}, {"Attr1": 1.5}, {"Attr1": True}, {"Attr2": True},
])
def test_bad_values_raise_schema_mismatch(values):
    h = small_graph()
    with pytest.raises(SchemaMismatch):
        h.add_vertex("object", "Z", values)


def test_construction_errors():
    h = small_graph()
    with pytest.raises(UnknownType):
        h.add_vertex("nope", "Z")
    with pytest.raises(DuplicateId):
        h.add_vertex("element", "C")
    with pytest.raises(UnknownType):
        h.add_hyperedge("Q", ["A", "C"])
    with pytest.raises(ArityMismatch):
        h.add_hyperedge("R", ["A"])
    with pytest.raises(UnknownVertex):
        h.add_hyperedge("R", ["A", "missing"])
    with pytest.raises(PositionTypeMismatch):
        h.add_hyperedge("R", ["C", "A"])
    with pytest.raises(UnknownVertex):
        h.incident_edges("missing")


def test_declaration_errors():
    with pytest.raises(SchemaMismatch):
        VertexType(name="t", attributes=(AttributeSchema(name="a", kind="discrete"),
                                         AttributeSchema(name="a", kind="continuous")))
    with pytest.raises(ArityMismatch):
        EdgeType(name="E", arity=0)
    with pytest.raises(ArityMismatch):
        EdgeType(name="E", arity=2, position_types=("object",))


def test_frozen_graph_rejects_mutation():
    h = small_graph().freeze()
    assert h.is_frozen
    with pytest.raises(FrozenGraph):
        h.add_vertex("element", "Z")
    with pytest.raises(FrozenGraph):
        h.add_hyperedge("F", ["A", "B", "C"])


def test_vertices_of_type_sorted():
    h = small_graph()
    h.add_vertex("object", "0first")
    assert h.vertices_of_type("object") == ["0first", "A", "B"]


def test_validate_reports_corrupted_incidence():
    h = small_graph()
    h.add_hyperedge("R", ["A", "C"])
    h._incidence["C"].clear()
    report = validate(h)
    assert len(report) == 1
    assert "vertex 'C'" in report[0]


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_incidence_matches_membership(seed):
    h = random_dataset(seed).hypergraph
    assert validate(h) == []
    total = sum(len(h.incident_edges(vid)) for vid in h.vertices)
    assert total == sum(len(edge.members) for edge in h.hyperedges)
