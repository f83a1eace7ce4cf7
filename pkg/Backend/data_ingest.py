# data_ingest.py
"""
Dataset and matrix file formats.

Dataset file (UTF-8, '#' starts a comment, whitespace separated):

    vertex_type <Name> [<attr>:<discrete|continuous> ...]
    edge_type <Name> <arity> [<VertexType> ...]
    v <TypeName> <id> [<attr>=<value> ...]
    e <TypeName> <id1> ... <idArity>
    label <id> <classToken>
    target <TypeName>

Declarations are collected before any fact is applied, so lines may come in
any order. Vertices are added before hyperedges.
"""
import io
import json
import logging
from typing import Dict, Iterable, List, Optional, TextIO, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator

from core.errors import (
    DataError,
    DimensionMismatch,
    ParseError,
    SchemaMismatch,
    UnknownReference,
)
from hypergraph import AttributeSchema, EdgeType, Hypergraph, VertexType, validate
from models import ClusterAssignment, DistanceMatrix, EvaluationReport

logger = logging.getLogger(__name__)

MISSING_TOKEN = "?"
MATRIX_PRECISION = 9

TextSource = Union[str, TextIO, Iterable[str]]


class Dataset(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    hypergraph: Hypergraph
    target_type: str
    labels: Dict[str, str] = {}

    @model_validator(mode="after")
    def _check_targets(self):
        if self.target_type not in self.hypergraph.vertex_types:
            raise UnknownReference(self.target_type)
        for vid in self.labels:
            vertex = self.hypergraph.vertices.get(vid)
            if vertex is None:
                raise UnknownReference(vid)
            if vertex.type != self.target_type:
                raise SchemaMismatch(f"labeled vertex '{vid}' is {vertex.type}, not target type {self.target_type}")
        return self

    @property
    def target_ids(self) -> List[str]:
        """Target vertex ids in canonical (sorted) order."""
        return self.hypergraph.vertices_of_type(self.target_type)


def _lines(source: TextSource) -> List[str]:
    if isinstance(source, str):
        return source.splitlines()
    if hasattr(source, "read"):
        return source.read().splitlines()
    return [line.rstrip("\n") for line in source]


def _tokens(line: str) -> List[str]:
    return line.split("#", 1)[0].split()


# ===============================
# Dataset parsing
# ===============================
def parse_dataset(source: TextSource) -> Dataset:
    """Parse the dataset format into a frozen, validated Dataset."""
    vertex_types: Dict[str, Tuple[int, VertexType]] = {}
    edge_types: Dict[str, Tuple[int, List[str]]] = {}
    vertex_lines, edge_lines, label_lines = [], [], []
    target: Optional[Tuple[int, str]] = None

    for lineno, line in enumerate(_lines(source), start=1):
        tokens = _tokens(line)
        if not tokens:
            continue
        keyword, args = tokens[0], tokens[1:]

        if keyword == "vertex_type":
            if not args:
                raise ParseError(lineno, "vertex_type needs a name")
            name = args[0]
            if name in vertex_types:
                raise ParseError(lineno, f"vertex type '{name}' declared twice")
            attributes = []
            for spec in args[1:]:
                attr_name, sep, kind = spec.partition(":")
                if not sep or kind not in ("discrete", "continuous") or not attr_name:
                    raise ParseError(lineno, f"bad attribute declaration '{spec}'")
                attributes.append(AttributeSchema(name=attr_name, kind=kind))
            vertex_types[name] = (lineno, VertexType(name=name, attributes=tuple(attributes)))
        elif keyword == "edge_type":
            if len(args) < 2:
                raise ParseError(lineno, "edge_type needs a name and an arity")
            if args[0] in edge_types:
                raise ParseError(lineno, f"edge type '{args[0]}' declared twice")
            edge_types[args[0]] = (lineno, args[1:])
        elif keyword == "v":
            if len(args) < 2:
                raise ParseError(lineno, "v needs a type and an id")
            vertex_lines.append((lineno, args))
        elif keyword == "e":
            if len(args) < 2:
                raise ParseError(lineno, "e needs a type and at least one member")
            edge_lines.append((lineno, args))
        elif keyword == "label":
            if len(args) != 2:
                raise ParseError(lineno, "label needs an id and a class token")
            label_lines.append((lineno, args))
        elif keyword == "target":
            if len(args) != 1:
                raise ParseError(lineno, "target needs exactly one type name")
            if target is not None:
                raise ParseError(lineno, "target declared more than once")
            target = (lineno, args[0])
        else:
            raise ParseError(lineno, f"unknown keyword '{keyword}'")

    if target is None:
        raise ParseError(None, "missing 'target' declaration")

    h = Hypergraph()
    for _, vertex_type in vertex_types.values():
        h.declare_vertex_type(vertex_type)
    for name, (lineno, args) in edge_types.items():
        try:
            arity = int(args[0])
        except ValueError:
            raise ParseError(lineno, f"arity of '{name}' is not an integer: {args[0]!r}") from None
        position_types = tuple(args[1:]) or None
        for type_name in position_types or ():
            if type_name not in vertex_types:
                raise UnknownReference(type_name, lineno)
        try:
            h.declare_edge_type(EdgeType(name=name, arity=arity, position_types=position_types))
        except DataError as e:
            raise ParseError(lineno, str(e)) from None

    for lineno, args in vertex_lines:
        type_name, vid = args[0], args[1]
        if type_name not in vertex_types:
            raise UnknownReference(type_name, lineno)
        values = {}
        for assignment in args[2:]:
            attr_name, sep, raw = assignment.partition("=")
            if not sep or not attr_name:
                raise ParseError(lineno, f"bad attribute assignment '{assignment}'")
            values[attr_name] = None if raw in ("", MISSING_TOKEN) else raw
        try:
            h.add_vertex(type_name, vid, values)
        except SchemaMismatch as e:
            raise SchemaMismatch(f"line {lineno}: {e}") from None
        except DataError as e:
            raise ParseError(lineno, str(e)) from None

    for lineno, args in edge_lines:
        type_name, members = args[0], args[1:]
        if type_name not in h.edge_types:
            raise UnknownReference(type_name, lineno)
        if any("=" in m for m in members):
            raise ParseError(lineno, "hyperedges cannot carry attributes; reify the relationship as a vertex type")
        for member in members:
            if member not in h.vertices:
                raise UnknownReference(member, lineno)
        try:
            h.add_hyperedge(type_name, members)
        except DataError as e:
            raise ParseError(lineno, str(e)) from None

    lineno, target_type = target
    if target_type not in vertex_types:
        raise UnknownReference(target_type, lineno)

    labels = {}
    for lineno, (vid, token) in label_lines:
        vertex = h.vertices.get(vid)
        if vertex is None:
            raise UnknownReference(vid, lineno)
        if vertex.type != target_type:
            raise SchemaMismatch(f"line {lineno}: labeled vertex '{vid}' is not of target type {target_type}")
        labels[vid] = token

    h.freeze()
    violations = validate(h)
    if violations:
        raise DataError(f"parsed hypergraph is inconsistent: {violations[0]}")

    logger.info(
        f"Parsed dataset: {len(h.vertices)} vertices, {len(h.hyperedges)} hyperedges, "
        f"target={target_type}, {len(labels)} labels"
    )
    return Dataset(hypergraph=h, target_type=target_type, labels=labels)


def parse_labels(source: TextSource) -> Dict[str, str]:
    """Read only the `label <id> <class>` lines of a file."""
    labels = {}
    for lineno, line in enumerate(_lines(source), start=1):
        tokens = _tokens(line)
        if not tokens or tokens[0] != "label":
            continue
        if len(tokens) != 3:
            raise ParseError(lineno, "label needs an id and a class token")
        labels[tokens[1]] = tokens[2]
    return labels


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_dataset(dataset: Dataset) -> str:
    """Serialize a Dataset so that parse_dataset reproduces it."""
    h = dataset.hypergraph
    out = []
    for vt in h.vertex_types.values():
        attrs = " ".join(f"{a.name}:{a.kind}" for a in vt.attributes)
        out.append(f"vertex_type {vt.name} {attrs}".rstrip())
    for et in h.edge_types.values():
        positions = " ".join(et.position_types or ())
        out.append(f"edge_type {et.name} {et.arity} {positions}".rstrip())
    out.append(f"target {dataset.target_type}")
    for vid in sorted(h.vertices):
        vertex = h.vertices[vid]
        values = " ".join(f"{name}={_format_value(value)}" for name, value in vertex.values.items())
        out.append(f"v {vertex.type} {vid} {values}".rstrip())
    for edge in h.hyperedges:
        out.append(f"e {edge.type} {' '.join(edge.members)}")
    for vid in sorted(dataset.labels):
        out.append(f"label {vid} {dataset.labels[vid]}")
    return "\n".join(out) + "\n"


# ===============================
# Matrix files
# ===============================
def write_matrix(m: Union[DistanceMatrix, np.ndarray], header: Optional[List[str]] = None,
                 precision: int = MATRIX_PRECISION) -> str:
    """
    Header row of ids followed by comma-separated rows.

    The upper triangle is mirrored so the file is symmetric as written.
    """
    if isinstance(m, DistanceMatrix):
        values = m.values
        header = list(header if header is not None else m.ids)
    else:
        values = np.asarray(m, dtype=float)
    if header is None:
        raise DimensionMismatch("a header of ids is required")
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got shape {values.shape}")
    if values.shape[0] != len(header):
        raise DimensionMismatch(f"matrix dimension {values.shape[0]} does not match {len(header)} ids")

    mirrored = np.triu(values) + np.triu(values, 1).T
    frame = pd.DataFrame(mirrored, columns=header)
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=f"%.{precision}g", lineterminator="\n")
    return buffer.getvalue()


def parse_matrix(source: TextSource) -> Tuple[DistanceMatrix, List[str]]:
    text = source if isinstance(source, str) else "\n".join(_lines(source))
    if not text.strip():
        raise ParseError(1, "empty matrix file")
    try:
        frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(None, f"malformed matrix file: {e}") from None

    ids = [str(c) for c in frame.columns]
    if frame.shape[0] != len(ids):
        raise ParseError(None, f"expected {len(ids)} rows, found {frame.shape[0]}")
    try:
        values = frame.apply(lambda col: col.map(float)).to_numpy(dtype=float)
    except ValueError as e:
        raise ParseError(None, f"non-numeric matrix entry: {e}") from None
    return DistanceMatrix(ids=ids, values=values), ids


# ===============================
# Assignments and reports
# ===============================
def write_assignment(assignment: ClusterAssignment) -> str:
    return "".join(f"{vid} {label}\n" for vid, label in zip(assignment.ids, assignment.labels))


def write_report(report: Union[EvaluationReport, dict]) -> str:
    payload = report.model_dump(mode="json") if isinstance(report, BaseModel) else report
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
