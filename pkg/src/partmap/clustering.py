"""Distance-weighted seeding plus Lloyd iterations for grouping point
embeddings into part nodes, and for locating modes in 2-D response data.

Clustering happens in embedding space; coordinate-space centers are
derived afterward for edge construction and marker transfer. Everything
is deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInputError
from .graph import NodeAttr


@dataclass
class PointSet:
    """Raw per-point data for one 3-D object: coordinates and embeddings."""

    coords: np.ndarray  # (n, 3)
    embeddings: np.ndarray  # (n, d)

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float)
        self.embeddings = np.asarray(self.embeddings, dtype=float)
        if len(self.coords) == 0:
            raise InvalidInputError("point set is empty")
        if len(self.coords) != len(self.embeddings):
            raise InvalidInputError(
                f"coords ({len(self.coords)}) and embeddings "
                f"({len(self.embeddings)}) differ in length"
            )


@dataclass
class Clustering:
    labels: np.ndarray  # (n,) cluster index per point
    centers: np.ndarray  # (k, d) mean member embedding
    coord_centers: np.ndarray  # (k, c) mean member coordinates
    inertia: float


def kmeanspp_seed(points, k: int, rng_seed: int) -> np.ndarray:
    """Standard distance-proportional seeding: first center uniform, each
    next one sampled with probability proportional to the squared distance
    to the nearest chosen center."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    n_distinct = len(np.unique(pts, axis=0))
    if k < 1 or k > n_distinct:
        raise InvalidInputError(
            f"k={k} must be in [1, number of distinct points={n_distinct}]"
        )
    rng = np.random.default_rng(rng_seed)
    centers = np.empty((k, pts.shape[1]))
    centers[0] = pts[rng.integers(n)]
    d2 = ((pts - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        # d2 > 0 somewhere as long as fewer centers than distinct points
        centers[c] = pts[rng.choice(n, p=d2 / d2.sum())]
        d2 = np.minimum(d2, ((pts - centers[c]) ** 2).sum(axis=1))
    return centers


def _assign(pts: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def _repair_empty(pts: np.ndarray, labels: np.ndarray, centers: np.ndarray, k: int):
    """Give each empty cluster the farthest point of the largest cluster."""
    for c in range(k):
        if (labels == c).any():
            continue
        sizes = np.bincount(labels, minlength=k)
        donor = int(np.argmax(sizes))
        members = np.flatnonzero(labels == donor)
        d2 = ((pts[members] - centers[donor]) ** 2).sum(axis=1)
        stolen = members[int(np.argmax(d2))]
        labels[stolen] = c
        centers[c] = pts[stolen]


def lloyd(
    points, centers0: np.ndarray, max_iter: int = 300
) -> tuple[np.ndarray, np.ndarray, float, list[float]]:
    """Alternate assignment and center updates until labels stabilize.

    Returns (labels, centers, inertia, inertia_history). The history records
    inertia after each full iteration and is non-increasing up to float noise.
    """
    pts = np.asarray(points, dtype=float)
    centers = np.array(centers0, dtype=float, copy=True)
    k = len(centers)
    labels = np.full(len(pts), -1)
    history: list[float] = []
    for _ in range(max_iter):
        new_labels = _assign(pts, centers)
        _repair_empty(pts, new_labels, centers, k)
        converged = bool((new_labels == labels).all())
        labels = new_labels
        for c in range(k):
            centers[c] = pts[labels == c].mean(axis=0)
        history.append(float(((pts - centers[labels]) ** 2).sum()))
        if converged:
            break
    return labels, centers, history[-1], history


def kmeans_fit(
    points,
    k: int,
    rng_seed: int,
    restarts: int = 10,
    coords: Optional[np.ndarray] = None,
) -> Clustering:
    """Best-of-`restarts` clustering, seeds rng_seed..rng_seed+restarts-1.

    Ties on inertia keep the lowest seed. When `coords` is given (same
    length as `points`), coordinate centers are per-cluster means of it;
    otherwise they duplicate the embedding-space centers.
    """
    if restarts < 1:
        raise InvalidInputError(f"restarts must be >= 1, got {restarts}")
    pts = np.asarray(points, dtype=float)
    best = None
    for r in range(restarts):
        seeds = kmeanspp_seed(pts, k, rng_seed + r)
        labels, centers, inertia, _ = lloyd(pts, seeds)
        if best is None or inertia < best[2]:
            best = (labels, centers, inertia)
    labels, centers, inertia = best
    if coords is not None:
        coords = np.asarray(coords, dtype=float)
        if len(coords) != len(pts):
            raise InvalidInputError("coords and points differ in length")
        coord_centers = np.array(
            [coords[labels == c].mean(axis=0) for c in range(k)]
        )
    else:
        coord_centers = centers.copy()
    return Clustering(labels, centers, coord_centers, inertia)


def clusters_to_nodes(
    ps: PointSet, cl: Clustering
) -> tuple[list[NodeAttr], np.ndarray]:
    """Collapse each cluster to one node (mean embedding, mean coordinates).

    Also returns the centroid of ALL raw points, which is what 3-D edge
    construction uses (not the mean of cluster centers).
    """
    if len(cl.labels) != len(ps.coords):
        raise InvalidInputError("clustering does not match point set size")
    k = len(cl.centers)
    nodes = []
    for c in range(k):
        members = cl.labels == c
        nodes.append(
            NodeAttr(
                id=c,
                embedding=ps.embeddings[members].mean(axis=0),
                coords=ps.coords[members].mean(axis=0),
            )
        )
    return nodes, ps.coords.mean(axis=0)


def closest_cluster(point, centers) -> int:
    """Index of the nearest center by Euclidean distance (ties -> lowest)."""
    centers = np.asarray(centers, dtype=float)
    if len(centers) == 0:
        raise InvalidInputError("no cluster centers given")
    d2 = ((centers - np.asarray(point, dtype=float)) ** 2).sum(axis=1)
    return int(np.argmin(d2))
