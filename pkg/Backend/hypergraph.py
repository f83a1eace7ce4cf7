# hypergraph.py
"""
Typed, labeled, oriented hypergraph.

Vertices carry attribute values, hyperedges are ordered multisets of vertex
ids. An incidence index maps every vertex to the (hyperedge id, position)
pairs it occupies, one entry per occupied position. Positions are 1-based.
"""
import logging
import math
from collections import Counter
from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, model_validator

from core.errors import (
    ArityMismatch,
    DuplicateId,
    FrozenGraph,
    PositionTypeMismatch,
    SchemaMismatch,
    UnknownType,
    UnknownVertex,
)

logger = logging.getLogger(__name__)

Value = Union[str, float]


# ==========================================================
# Schema types
# ==========================================================
class AttributeSchema(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    kind: Literal["discrete", "continuous"]


class VertexType(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    attributes: Tuple[AttributeSchema, ...] = ()

    @model_validator(mode="after")
    def _unique_attributes(self):
        names = [a.name for a in self.attributes]
        if len(names) != len(set(names)):
            raise SchemaMismatch(f"duplicate attribute names in vertex type '{self.name}': {names}")
        return self

    def attribute(self, name: str) -> Optional[AttributeSchema]:
        for attr in self.attributes:
            if attr.name == name:
                return attr
        return None


class EdgeType(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    arity: int
    position_types: Optional[Tuple[str, ...]] = None

    @model_validator(mode="after")
    def _check_arity(self):
        if self.arity < 1:
            raise ArityMismatch(f"edge type '{self.name}' needs arity >= 1, got {self.arity}")
        if self.position_types is not None and len(self.position_types) != self.arity:
            raise ArityMismatch(
                f"edge type '{self.name}' declares {len(self.position_types)} position types for arity {self.arity}"
            )
        return self


class Vertex(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    type: str
    values: Dict[str, Value]

    def value(self, attribute: str) -> Optional[Value]:
        return self.values.get(attribute)


class Hyperedge(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: int
    type: str
    members: Tuple[str, ...]


# ==========================================================
# Hypergraph
# ==========================================================
class Hypergraph:
    """
    In-memory H = (V, E, type, values).

    Construction is single-writer through add_vertex / add_hyperedge.
    Once frozen the graph is read-only and may be shared across workers.
    """

    def __init__(self, vertex_types=None, edge_types=None):
        self.vertex_types: Dict[str, VertexType] = {}
        self.edge_types: Dict[str, EdgeType] = {}
        self.vertices: Dict[str, Vertex] = {}
        self.hyperedges: List[Hyperedge] = []
        self._incidence: Dict[str, List[Tuple[int, int]]] = {}
        self._frozen = False

        for vt in vertex_types or []:
            self.declare_vertex_type(vt)
        for et in edge_types or []:
            self.declare_edge_type(et)

    # -------------------------
    # Declarations
    # -------------------------
    def declare_vertex_type(self, vertex_type: VertexType) -> VertexType:
        self._check_mutable()
        if vertex_type.name in self.vertex_types:
            raise DuplicateId(f"vertex type '{vertex_type.name}' already declared")
        self.vertex_types[vertex_type.name] = vertex_type
        return vertex_type

    def declare_edge_type(self, edge_type: EdgeType) -> EdgeType:
        self._check_mutable()
        if edge_type.name in self.edge_types:
            raise DuplicateId(f"edge type '{edge_type.name}' already declared")
        self.edge_types[edge_type.name] = edge_type
        return edge_type

    # -------------------------
    # Construction
    # -------------------------
    def add_vertex(self, type: str, id: str, values: Optional[Dict[str, object]] = None) -> Vertex:
        self._check_mutable()
        vertex_type = self.vertex_types.get(type)
        if vertex_type is None:
            raise UnknownType(f"unknown vertex type '{type}'")
        if id in self.vertices:
            raise DuplicateId(f"vertex '{id}' already exists")

        checked = {}
        for name, raw in (values or {}).items():
            attr = vertex_type.attribute(name)
            if attr is None:
                raise SchemaMismatch(f"vertex type '{type}' has no attribute '{name}'")
            if raw is None:
                continue
            checked[name] = _coerce_value(attr, raw, id)

        vertex = Vertex(id=id, type=type, values=checked)
        self.vertices[id] = vertex
        self._incidence[id] = []
        return vertex

    def add_hyperedge(self, type: str, members) -> Hyperedge:
        self._check_mutable()
        edge_type = self.edge_types.get(type)
        if edge_type is None:
            raise UnknownType(f"unknown edge type '{type}'")
        members = tuple(members)
        if len(members) != edge_type.arity:
            raise ArityMismatch(f"edge type '{type}' has arity {edge_type.arity}, got {len(members)} members")
        for position, member in enumerate(members, start=1):
            vertex = self.vertices.get(member)
            if vertex is None:
                raise UnknownVertex(member)
            if edge_type.position_types is not None and vertex.type != edge_type.position_types[position - 1]:
                raise PositionTypeMismatch(
                    f"position {position} of '{type}' expects {edge_type.position_types[position - 1]}, "
                    f"'{member}' is {vertex.type}"
                )

        edge = Hyperedge(id=len(self.hyperedges), type=type, members=members)
        self.hyperedges.append(edge)
        for position, member in enumerate(members, start=1):
            self._incidence[member].append((edge.id, position))
        return edge

    def freeze(self) -> "Hypergraph":
        self._frozen = True
        logger.debug(f"Hypergraph frozen: {len(self.vertices)} vertices, {len(self.hyperedges)} hyperedges")
        return self

    @property
    def is_frozen(self) -> bool:
        return self._frozen

    def _check_mutable(self):
        if self._frozen:
            raise FrozenGraph("hypergraph is frozen")

    # -------------------------
    # Queries
    # -------------------------
    def vertex(self, vertex_id: str) -> Vertex:
        vertex = self.vertices.get(vertex_id)
        if vertex is None:
            raise UnknownVertex(vertex_id)
        return vertex

    def vertex_type_of(self, vertex_id: str) -> VertexType:
        return self.vertex_types[self.vertex(vertex_id).type]

    def incident_edges(self, vertex_id: str) -> List[Tuple[Hyperedge, int]]:
        """All (hyperedge, position) pairs of a vertex, in insertion order."""
        if vertex_id not in self._incidence:
            raise UnknownVertex(vertex_id)
        return [(self.hyperedges[edge_id], position) for edge_id, position in self._incidence[vertex_id]]

    def incident_edge_ids(self, vertex_id: str) -> frozenset:
        if vertex_id not in self._incidence:
            raise UnknownVertex(vertex_id)
        return frozenset(edge_id for edge_id, _ in self._incidence[vertex_id])

    def vertices_of_type(self, type_name: str) -> List[str]:
        if type_name not in self.vertex_types:
            raise UnknownType(f"unknown vertex type '{type_name}'")
        return sorted(v.id for v in self.vertices.values() if v.type == type_name)

    def __repr__(self):
        return (
            f"Hypergraph(vertex_types={len(self.vertex_types)}, edge_types={len(self.edge_types)}, "
            f"vertices={len(self.vertices)}, hyperedges={len(self.hyperedges)})"
        )


def _coerce_value(attr: AttributeSchema, raw, vertex_id: str) -> Value:
    if attr.kind == "discrete":
        if isinstance(raw, bool) or not isinstance(raw, (str, int)):
            raise SchemaMismatch(f"'{vertex_id}'.{attr.name} is discrete, got {raw!r}")
        return str(raw)
    if isinstance(raw, bool):
        raise SchemaMismatch(f"'{vertex_id}'.{attr.name} is continuous, got {raw!r}")
    try:
        number = float(raw)
    except (TypeError, ValueError):
        raise SchemaMismatch(f"'{vertex_id}'.{attr.name} is continuous, got {raw!r}") from None
    if not math.isfinite(number):
        raise SchemaMismatch(f"'{vertex_id}'.{attr.name} must be finite, got {raw!r}")
    return number


# ==========================================================
# Validation
# ==========================================================
def validate(h: Hypergraph) -> List[str]:
    """
    Check every structural invariant of the hypergraph.

    Returns a list of human-readable violations; empty when consistent.
    """
    report = []

    for vid, vertex in h.vertices.items():
        if vertex.id != vid:
            report.append(f"vertex key '{vid}' holds vertex '{vertex.id}'")
        vertex_type = h.vertex_types.get(vertex.type)
        if vertex_type is None:
            report.append(f"vertex '{vid}' has undeclared type '{vertex.type}'")
            continue
        for name, value in vertex.values.items():
            attr = vertex_type.attribute(name)
            if attr is None:
                report.append(f"vertex '{vid}' sets unknown attribute '{name}'")
            elif attr.kind == "discrete" and not isinstance(value, str):
                report.append(f"vertex '{vid}' attribute '{name}' should be discrete, holds {value!r}")
            elif attr.kind == "continuous" and (
                isinstance(value, (str, bool)) or not isinstance(value, (int, float)) or not math.isfinite(value)
            ):
                report.append(f"vertex '{vid}' attribute '{name}' should be a finite real, holds {value!r}")
        if vid not in h._incidence:
            report.append(f"vertex '{vid}' has no incidence entry")

    expected = Counter()
    for index, edge in enumerate(h.hyperedges):
        if edge.id != index:
            report.append(f"hyperedge at index {index} carries id {edge.id}")
        edge_type = h.edge_types.get(edge.type)
        if edge_type is None:
            report.append(f"hyperedge {edge.id} has undeclared type '{edge.type}'")
        elif len(edge.members) != edge_type.arity:
            report.append(f"hyperedge {edge.id} of '{edge.type}' has {len(edge.members)} members, arity {edge_type.arity}")
        for position, member in enumerate(edge.members, start=1):
            if member not in h.vertices:
                report.append(f"hyperedge {edge.id} references unknown vertex '{member}'")
            elif edge_type is not None and edge_type.position_types is not None:
                if h.vertices[member].type != edge_type.position_types[position - 1]:
                    report.append(f"hyperedge {edge.id} position {position} holds '{member}' of the wrong type")
            expected[(member, edge.id, position)] += 1

    actual = Counter()
    for vid, entries in h._incidence.items():
        if vid not in h.vertices:
            report.append(f"incidence index lists unknown vertex '{vid}'")
        for edge_id, position in entries:
            actual[(vid, edge_id, position)] += 1

    for key in sorted(expected.keys() | actual.keys(), key=lambda k: (k[1], k[2], k[0])):
        if expected[key] != actual[key]:
            vid, edge_id, position = key
            report.append(
                f"incidence of vertex '{vid}' has {actual[key]} entries for hyperedge {edge_id} "
                f"position {position}, expected {expected[key]}"
            )

    if report:
        logger.warning(f"Hypergraph validation found {len(report)} violations")
    return report
