"""Attributed graphs and the similarity primitives built on them.

A graph holds part-level nodes (embedding + coordinates + optional label)
and a dense set of directed edges carrying spatial-relation vectors: every
ordered pair of distinct nodes has exactly one edge. Node counts are small
(tens at most), so dense storage is deliberate.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import InvalidInputError

# Norms below this are treated as zero vectors (neutral similarity 0).
NORM_FLOOR = 1e-12

# Per-task defaults for the node-vs-edge mixing weight.
ALPHA_2D = 0.9
ALPHA_3D = 0.5


def _vector(x, name: str = "vector") -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim != 1:
        raise InvalidInputError(f"{name} must be 1-D, got shape {a.shape}")
    return a


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between a and b; 0 if either norm is ~0.

    The zero-vector convention keeps degenerate attributes neutral instead
    of propagating NaNs into the solver.
    """
    a = _vector(a, "a")
    b = _vector(b, "b")
    if a.shape != b.shape:
        raise InvalidInputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na < NORM_FLOOR or nb < NORM_FLOOR:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


@dataclass
class NodeAttr:
    """One part node: embedding vector, spatial coordinates, optional label."""

    id: int
    embedding: np.ndarray
    coords: np.ndarray
    label: Optional[str] = None

    def __post_init__(self):
        self.embedding = _vector(self.embedding, "embedding")
        self.coords = _vector(self.coords, "coords")


@dataclass
class EdgeAttr:
    """Directed edge from node `src` to node `dst` with a relation vector."""

    src: int
    dst: int
    relation: np.ndarray

    def __post_init__(self):
        self.relation = _vector(self.relation, "relation")


@dataclass
class AttributedGraph:
    """Nodes plus a dense map (src, dst) -> EdgeAttr over all ordered pairs."""

    nodes: list[NodeAttr]
    edges: dict[tuple[int, int], EdgeAttr]
    centroid: np.ndarray

    def __post_init__(self):
        self.centroid = _vector(self.centroid, "centroid")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def embedding_matrix(self) -> np.ndarray:
        return np.array([n.embedding for n in self.nodes])

    def coords_matrix(self) -> np.ndarray:
        return np.array([n.coords for n in self.nodes])

    def labels(self) -> list[Optional[str]]:
        return [n.label for n in self.nodes]

    def relation_dim(self) -> Optional[int]:
        for e in self.edges.values():
            return len(e.relation)
        return None

    def relation_tensor(self) -> Optional[np.ndarray]:
        """(N, N, d_r) array of relation vectors, zeros on the diagonal.

        Returns None for graphs with fewer than two nodes (no edges exist).
        """
        n = self.n_nodes
        dr = self.relation_dim()
        if n < 2 or dr is None:
            return None
        out = np.zeros((n, n, dr))
        for (i, j), e in self.edges.items():
            out[i, j] = e.relation
        return out


def node_similarity_matrix(g: AttributedGraph, g2: AttributedGraph) -> np.ndarray:
    """Ns x Nt matrix of embedding cosine similarities."""
    a = g.embedding_matrix()
    b = g2.embedding_matrix()
    if a.shape[1] != b.shape[1]:
        raise InvalidInputError(
            f"embedding dimension mismatch: {a.shape[1]} vs {b.shape[1]}"
        )
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    denom = np.outer(na, nb)
    ok = (na[:, None] >= NORM_FLOOR) & (nb[None, :] >= NORM_FLOOR)
    return np.divide(a @ b.T, denom, out=np.zeros((len(na), len(nb))), where=ok)


def edge_similarity(
    g: AttributedGraph, g2: AttributedGraph, i: int, j: int, i2: int, j2: int
) -> float:
    """Cosine similarity between relation vectors of edges (i,j) and (i2,j2)."""
    if i == j or i2 == j2:
        raise InvalidInputError(f"self-edge requested: ({i},{j}) / ({i2},{j2})")
    return cosine_similarity(g.edges[(i, j)].relation, g2.edges[(i2, j2)].relation)


def validate_graph(g: AttributedGraph) -> list[str]:
    """Check structural invariants; returns a list of violations (empty = ok).

    Each category reports its first offending item to keep diagnostics short.
    """
    violations: list[str] = []
    n = g.n_nodes
    if n == 0:
        return ["graph has no nodes"]

    ids = [node.id for node in g.nodes]
    seen: set[int] = set()
    for i in ids:
        if i in seen:
            violations.append(f"id collision: node id {i} appears more than once")
            break
        seen.add(i)
    else:
        for pos, node in enumerate(g.nodes):
            if node.id != pos:
                violations.append(
                    f"id mismatch: node at position {pos} has id {node.id}"
                )
                break

    dims = {len(node.embedding) for node in g.nodes}
    if len(dims) > 1:
        violations.append(f"embedding dimension varies across nodes: {sorted(dims)}")
    cdims = {len(node.coords) for node in g.nodes}
    if len(cdims) > 1:
        violations.append(f"coords length varies across nodes: {sorted(cdims)}")
    elif cdims and next(iter(cdims)) not in (2, 3):
        violations.append(f"coords must have length 2 or 3, got {next(iter(cdims))}")

    for node in g.nodes:
        if not (np.isfinite(node.embedding).all() and np.isfinite(node.coords).all()):
            violations.append(f"non-finite attribute on node {node.id}")
            break

    if not np.isfinite(g.centroid).all():
        violations.append("centroid is not finite")
    if cdims and len(g.centroid) != next(iter(cdims)):
        violations.append(
            f"centroid length {len(g.centroid)} != coords length {next(iter(cdims))}"
        )

    expected = {(i, j) for i in range(n) for j in range(n) if i != j}
    got = set(g.edges.keys())
    missing = expected - got
    extra = got - expected
    if missing:
        i, j = min(missing)
        violations.append(f"missing edge ({i},{j}); expected all N(N-1) ordered pairs")
    if extra:
        i, j = min(extra)
        kind = "self-edge" if i == j else "unexpected edge"
        violations.append(f"{kind} ({i},{j}) present")

    rdims = set()
    for (i, j), e in g.edges.items():
        if (e.src, e.dst) != (i, j):
            violations.append(f"edge key ({i},{j}) disagrees with ({e.src},{e.dst})")
            break
        rdims.add(len(e.relation))
    if len(rdims) > 1:
        violations.append(f"relation dimension varies across edges: {sorted(rdims)}")

    return violations


@dataclass
class MappingMatrix:
    """Soft assignment between source and target nodes (Ns x Nt, entries >= 0)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise InvalidInputError(f"mapping must be 2-D, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise InvalidInputError("mapping contains non-finite entries")
        if (v < 0).any():
            raise InvalidInputError("mapping contains negative entries")
        self.values = v

    @property
    def ns(self) -> int:
        return self.values.shape[0]

    @property
    def nt(self) -> int:
        return self.values.shape[1]


@dataclass
class SolverConfig:
    """Knobs of the annealed assignment solver.

    beta_increment defaults to beta0/10 (resolved at construction). The
    early stop is off by default; the annealing schedule then runs the full
    fixed iteration count.
    """

    alpha: float = ALPHA_2D
    beta0: float = 0.1
    iterations: int = 500
    beta_increment: Optional[float] = None
    early_stop_delta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidInputError(f"alpha must be in [0,1], got {self.alpha}")
        if self.beta0 <= 0:
            raise InvalidInputError(f"beta0 must be positive, got {self.beta0}")
        if self.iterations < 1:
            raise InvalidInputError(f"iterations must be >= 1, got {self.iterations}")
        if self.beta_increment is None:
            self.beta_increment = self.beta0 / 10.0
        if self.beta_increment <= 0:
            raise InvalidInputError("beta_increment must be positive")
        if self.early_stop_delta < 0:
            raise InvalidInputError("early_stop_delta must be >= 0")

    @classmethod
    def defaults_for(cls, coord_dim: int, **overrides) -> "SolverConfig":
        """Task defaults: alpha 0.9 for 2-D problems, 0.5 for 3-D."""
        alpha = ALPHA_3D if coord_dim == 3 else ALPHA_2D
        overrides.setdefault("alpha", alpha)
        return cls(**overrides)

    def with_alpha(self, alpha: float) -> "SolverConfig":
        return replace(self, alpha=alpha)
