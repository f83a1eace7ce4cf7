from typing import Dict, List, Literal, Optional, Tuple
import logging

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from clustering import agglomerative, spectral
from core.config import setup_logging
from core.errors import DataError, IdMismatch, RelsimError, UnknownVertex
from data_ingest import parse_dataset
from dissimilarity import pairwise_matrix
from evaluation import ari
from models import COMPONENTS, DEFAULT_WEIGHTS, DissimilarityConfig, DistanceMatrix, SpectralParams
from neighbourhood_tree import ExpansionRule, build_tree, format_tree


# -----------------------------
# Logging Setup
# -----------------------------
setup_logging()
logger = logging.getLogger("RelsimAPI")

# -----------------------------
# FastAPI App
# -----------------------------
app = FastAPI(title="Relational Similarity API", version="1.0")


# -----------------------------
# Input Schemas
# -----------------------------
class DistancesRequest(BaseModel):
    dataset: str
    depth: int = 1
    weights: Tuple[float, float, float, float, float] = DEFAULT_WEIGHTS
    rule: ExpansionRule = ExpansionRule.SET_FRONTIER
    include_components: bool = False


class ClusterRequest(BaseModel):
    ids: List[str]
    matrix: List[List[float]]
    k: int
    method: Literal["agglomerative", "spectral"] = "agglomerative"
    linkage: Literal["average", "complete", "single"] = "average"
    spectral: SpectralParams = Field(default_factory=SpectralParams)
    labels: Optional[Dict[str, str]] = None


class InspectTreeRequest(BaseModel):
    dataset: str
    vertex: str
    depth: int = 1
    rule: ExpansionRule = ExpansionRule.SET_FRONTIER


def _http_error(e: RelsimError) -> HTTPException:
    status = 400 if isinstance(e, DataError) else 422
    return HTTPException(status_code=status, detail=str(e))


# -----------------------------
# DISTANCES
# -----------------------------
@app.post("/distances")
def compute_distances(request: DistancesRequest):
    """
    Parses the dataset text and returns the pairwise distance matrix
    over its target vertices, optionally with the five components.
    """
    try:
        cfg = DissimilarityConfig(weights=request.weights, depth=request.depth)
        dataset = parse_dataset(request.dataset)
        matrix, components = pairwise_matrix(dataset, cfg, rule=request.rule)
    except RelsimError as e:
        logger.warning(f"Distance request rejected: {e}")
        raise _http_error(e)

    result = {"ids": matrix.ids, "matrix": matrix.values.tolist()}
    if request.include_components:
        result["components"] = {name: components.matrix(name).tolist() for name in COMPONENTS}
    logger.info(f"Computed distances for {len(matrix.ids)} targets")
    return result


# -----------------------------
# CLUSTER
# -----------------------------
@app.post("/cluster")
def cluster(request: ClusterRequest):
    try:
        values = np.asarray(request.matrix, dtype=float)
        if values.shape != (len(request.ids), len(request.ids)):
            raise IdMismatch(f"matrix shape {values.shape} does not match {len(request.ids)} ids")
        matrix = DistanceMatrix(ids=request.ids, values=values)
        if request.method == "spectral":
            assignment = spectral(matrix, request.k, request.spectral)
        else:
            assignment = agglomerative(matrix, request.k, request.linkage)

        result = {"assignment": assignment.as_dict(), "k": assignment.k, "method": assignment.method}
        if request.labels:
            found = assignment.as_dict()
            unknown = sorted(set(request.labels) - set(found))
            if unknown:
                raise IdMismatch(f"labels reference unknown ids: {unknown[:5]}")
            result["ari"] = ari({vid: found[vid] for vid in request.labels}, request.labels)
    except RelsimError as e:
        logger.warning(f"Cluster request rejected: {e}")
        raise _http_error(e)
    return result


# -----------------------------
# INSPECT TREE
# -----------------------------
@app.post("/inspect-tree")
def inspect_tree(request: InspectTreeRequest):
    try:
        dataset = parse_dataset(request.dataset)
        tree = build_tree(dataset.hypergraph, request.vertex, request.depth, request.rule)
    except UnknownVertex as e:
        raise HTTPException(status_code=422, detail=str(e))
    except RelsimError as e:
        raise _http_error(e)
    return {"root": tree.root, "depth": tree.depth, "dump": format_tree(tree)}


# -----------------------------
# HOME
# -----------------------------
@app.get("/")
def home():
    return {"message": "Relational Similarity API is running"}
