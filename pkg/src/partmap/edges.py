"""Spatial-relation edge vectors built from node coordinates.

Two relation families are combined into edge attributes:

* an angular relation: the three cosines among the difference vectors
  (ci - cj, ci - c0, cj - c0), where c0 is the object centroid. Length 3,
  invariant to translation, uniform scaling and rotation.
* a vector-difference relation: the concatenation (cj - ci, ci - c0,
  cj - c0) divided componentwise by the coordinate range of the graph's
  own nodes. Length 3 * dim, translation and scale invariant but tied to
  the coordinate axes (not rotation invariant).

2-D graphs concatenate both (length 9); 3-D graphs use the angular
relation only (length 3).
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError
from .graph import EdgeAttr, NodeAttr, cosine_similarity


def compute_centroid(points) -> np.ndarray:
    """Componentwise mean of a nonempty list of coordinate vectors."""
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise InvalidInputError("cannot compute centroid of an empty point list")
    if pts.ndim != 2:
        pts = pts.reshape(1, -1)
    return pts.mean(axis=0)


def angular_relation(ci, cj, c0) -> np.ndarray:
    """[cos(ci-cj, ci-c0), cos(ci-c0, cj-c0), cos(ci-cj, cj-c0)].

    Components are clipped to [-1, 1]; zero difference vectors contribute 0.
    """
    ci = np.asarray(ci, dtype=float)
    cj = np.asarray(cj, dtype=float)
    c0 = np.asarray(c0, dtype=float)
    if not (ci.shape == cj.shape == c0.shape):
        raise InvalidInputError(
            f"coordinate dimension mismatch: {ci.shape}, {cj.shape}, {c0.shape}"
        )
    d_ij = ci - cj
    d_i0 = ci - c0
    d_j0 = cj - c0
    rel = np.array(
        [
            cosine_similarity(d_ij, d_i0),
            cosine_similarity(d_i0, d_j0),
            cosine_similarity(d_ij, d_j0),
        ]
    )
    return np.clip(rel, -1.0, 1.0)


def vector_diff_relation(ci, cj, c0, extent) -> np.ndarray:
    """Concatenation (cj-ci, ci-c0, cj-c0) divided componentwise by `extent`.

    `extent` is the per-axis coordinate range (max - min) over the graph's
    nodes; zero components are replaced by 1 so degenerate axes stay finite
    (their numerators are zero for node-to-node differences anyway).
    """
    ci = np.asarray(ci, dtype=float)
    cj = np.asarray(cj, dtype=float)
    c0 = np.asarray(c0, dtype=float)
    extent = np.asarray(extent, dtype=float)
    if not (ci.shape == cj.shape == c0.shape == extent.shape):
        raise InvalidInputError("coordinate/extent dimension mismatch")
    if (extent < 0).any():
        raise InvalidInputError("extent components must be >= 0")
    safe = np.where(extent > 0, extent, 1.0)
    return np.concatenate([cj - ci, ci - c0, cj - c0]) / np.tile(safe, 3)


def coordinate_extent(coords: np.ndarray) -> np.ndarray:
    """Per-axis range max(c) - min(c) over the rows of `coords`."""
    coords = np.asarray(coords, dtype=float)
    return coords.max(axis=0) - coords.min(axis=0)


def _check_nodes(nodes: list[NodeAttr], dim: int) -> np.ndarray:
    if len(nodes) < 2:
        raise InvalidInputError("edge construction needs at least 2 nodes")
    coords = np.array([n.coords for n in nodes])
    if coords.shape[1] != dim:
        raise InvalidInputError(
            f"expected {dim}-D coordinates, got {coords.shape[1]}-D"
        )
    return coords


def build_edges_2d(nodes: list[NodeAttr], c0) -> dict[tuple[int, int], EdgeAttr]:
    """Dense edge map with concat(angular, vector-difference) relations (len 9)."""
    coords = _check_nodes(nodes, 2)
    c0 = np.asarray(c0, dtype=float)
    extent = coordinate_extent(coords)
    edges = {}
    for i in range(len(nodes)):
        for j in range(len(nodes)):
            if i == j:
                continue
            rel = np.concatenate(
                [
                    angular_relation(coords[i], coords[j], c0),
                    vector_diff_relation(coords[i], coords[j], c0, extent),
                ]
            )
            edges[(i, j)] = EdgeAttr(src=i, dst=j, relation=rel)
    return edges


def build_edges_3d(nodes: list[NodeAttr], c0) -> dict[tuple[int, int], EdgeAttr]:
    """Dense edge map with angular relations only (len 3)."""
    coords = _check_nodes(nodes, 3)
    c0 = np.asarray(c0, dtype=float)
    edges = {}
    for i in range(len(nodes)):
        for j in range(len(nodes)):
            if i == j:
                continue
            rel = angular_relation(coords[i], coords[j], c0)
            edges[(i, j)] = EdgeAttr(src=i, dst=j, relation=rel)
    return edges
