# neighbourhood_tree.py
"""
Neighbourhood trees.

A tree rooted at vertex v is summarized per level l = 1..d by two multisets:
the vertices reached at that level and the (edge type, parent position)
labels of the hyperedges traversed to reach them. Attribute multisets and
per-type vertex multisets are derived views.

Expansion rules:
  * traversing hyperedge e from u at position p adds every member occurrence
    of e except position p itself and except any occurrence of the root
  * each traversal contributes one edge label, whatever the number of children
  * the root is never added to any level
"""
import logging
from collections import Counter
from enum import Enum
from typing import Dict, List, NamedTuple, Tuple, Union

from core.errors import InvalidDepth, LevelOutOfRange, UnknownAttribute, UnknownType
from hypergraph import Hypergraph, VertexType

logger = logging.getLogger(__name__)


class EdgeLabel(NamedTuple):
    edge_type: str
    parent_position: int

    def __str__(self):
        return f"({self.edge_type},{self.parent_position})"


class ExpansionRule(str, Enum):
    # each distinct vertex of a level is expanded once
    SET_FRONTIER = "set_frontier"
    # each occurrence is expanded, multiplying deeper multiplicities
    PER_OCCURRENCE = "per_occurrence"


def _canonical(counter: Counter) -> Dict:
    return dict(sorted(counter.items()))


class NeighbourhoodTree:
    """Per-level multisets of one vertex's neighbourhood. Immutable once built."""

    def __init__(self, hypergraph: Hypergraph, root: str, depth: int,
                 vertex_levels: List[Counter], edge_levels: List[Counter],
                 rule: ExpansionRule = ExpansionRule.SET_FRONTIER):
        self.hypergraph = hypergraph
        self.root = root
        self.depth = depth
        self.rule = rule
        self._vertex_levels = tuple(_canonical(c) for c in vertex_levels)
        self._edge_levels = tuple(_canonical(c) for c in edge_levels)

    @property
    def root_type(self) -> str:
        return self.hypergraph.vertices[self.root].type

    def _check_level(self, level: int, allow_root: bool = False):
        low = 0 if allow_root else 1
        if not (low <= level <= self.depth):
            raise LevelOutOfRange(f"level {level} outside {low}..{self.depth}")

    def _type_name(self, ty: Union[str, VertexType]) -> str:
        name = ty.name if isinstance(ty, VertexType) else ty
        if name not in self.hypergraph.vertex_types:
            raise UnknownType(f"unknown vertex type '{name}'")
        return name

    # -------------------------
    # Level accessors
    # -------------------------
    def level_vertices(self, level: int) -> Counter:
        self._check_level(level)
        return Counter(self._vertex_levels[level - 1])

    def level_edge_labels(self, level: int) -> Counter:
        self._check_level(level)
        return Counter(self._edge_levels[level - 1])

    def level_vertices_of_type(self, level: int, ty: Union[str, VertexType]) -> Counter:
        self._check_level(level)
        name = self._type_name(ty)
        vertices = self.hypergraph.vertices
        return Counter({vid: n for vid, n in self._vertex_levels[level - 1].items() if vertices[vid].type == name})

    def level_attribute_values(self, level: int, ty: Union[str, VertexType], attribute: str) -> Counter:
        """Values of `attribute` among type-`ty` vertices at `level`; level 0 is the root itself."""
        self._check_level(level, allow_root=True)
        name = self._type_name(ty)
        if self.hypergraph.vertex_types[name].attribute(attribute) is None:
            raise UnknownAttribute(f"vertex type '{name}' has no attribute '{attribute}'")

        occurrences = {self.root: 1} if level == 0 else self._vertex_levels[level - 1]
        values = Counter()
        for vid, n in occurrences.items():
            vertex = self.hypergraph.vertices[vid]
            if vertex.type != name:
                continue
            value = vertex.values.get(attribute)
            if value is not None:
                values[value] += n
        return values

    def occurrences(self, level: int) -> Dict[str, int]:
        """Vertex multiplicities at `level`; level 0 is the root."""
        self._check_level(level, allow_root=True)
        return {self.root: 1} if level == 0 else self._vertex_levels[level - 1]

    def canonical(self) -> Tuple:
        return (
            self.root,
            self.depth,
            tuple(tuple(level.items()) for level in self._vertex_levels),
            tuple(tuple(level.items()) for level in self._edge_levels),
        )

    def __eq__(self, other):
        if not isinstance(other, NeighbourhoodTree):
            return NotImplemented
        return self.canonical() == other.canonical()

    def __hash__(self):
        return hash(self.canonical())

    def __repr__(self):
        sizes = [sum(level.values()) for level in self._vertex_levels]
        return f"NeighbourhoodTree(root={self.root!r}, depth={self.depth}, level_sizes={sizes})"


# ===============================
# Construction
# ===============================
def build_tree(h: Hypergraph, v: str, d: int,
               rule: ExpansionRule = ExpansionRule.SET_FRONTIER) -> NeighbourhoodTree:
    h.vertex(v)
    if d < 1:
        raise InvalidDepth(f"depth must be >= 1, got {d}")

    vertex_levels, edge_levels = [], []
    frontier = Counter({v: 1})
    for _ in range(d):
        reached, labels = Counter(), Counter()
        for u in sorted(frontier):
            weight = frontier[u] if rule == ExpansionRule.PER_OCCURRENCE else 1
            for edge, position in h.incident_edges(u):
                labels[EdgeLabel(edge.type, position)] += weight
                for p, member in enumerate(edge.members, start=1):
                    if p == position or member == v:
                        continue
                    reached[member] += weight
        vertex_levels.append(reached)
        edge_levels.append(labels)
        frontier = reached

    return NeighbourhoodTree(h, v, d, vertex_levels, edge_levels, rule)


def root_link_count(g: NeighbourhoodTree, g2: NeighbourhoodTree) -> int:
    """Number of hyperedges containing both roots; parallel hyperedges count separately."""
    h = g.hypergraph
    return len(h.incident_edge_ids(g.root) & h.incident_edge_ids(g2.root))


# ===============================
# Text dump
# ===============================
def format_tree(tree: NeighbourhoodTree) -> str:
    lines = [f"root {tree.root} type={tree.root_type} depth={tree.depth}"]
    for level in range(1, tree.depth + 1):
        lines.append(f"level {level}")
        for vid, n in tree.occurrences(level).items():
            lines.append(f"  vertex {vid}×{n}")
        for label, n in tree.level_edge_labels(level).items():
            lines.append(f"  edge {label}×{n}")
    return "\n".join(lines) + "\n"
