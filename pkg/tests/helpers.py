"""Shared builders for the test suite."""

from __future__ import annotations

import math

import numpy as np

from partmap import AttributedGraph, EdgeAttr, NodeAttr, build_edges_2d, build_edges_3d
from partmap.edges import compute_centroid


def make_graph(embeddings, coords, labels=None, centroid=None) -> AttributedGraph:
    embeddings = np.asarray(embeddings, dtype=float)
    coords = np.asarray(coords, dtype=float)
    labels = labels or [None] * len(coords)
    nodes = [
        NodeAttr(id=i, embedding=embeddings[i], coords=coords[i], label=labels[i])
        for i in range(len(coords))
    ]
    if centroid is None:
        centroid = compute_centroid(coords)
    else:
        centroid = np.asarray(centroid, dtype=float)
    builder = build_edges_3d if coords.shape[1] == 3 else build_edges_2d
    edges = builder(nodes, centroid) if len(nodes) >= 2 else {}
    return AttributedGraph(nodes, edges, centroid)


def random_graph(rng, n, dim, coord_dim=2) -> AttributedGraph:
    return make_graph(
        rng.standard_normal((n, dim)), rng.uniform(0.0, 1.0, (n, coord_dim))
    )


def permute_graph(g: AttributedGraph, perm) -> AttributedGraph:
    """New node a = old node perm[a]; edges remapped directly."""
    perm = list(perm)
    nodes = [
        NodeAttr(
            id=a,
            embedding=g.nodes[p].embedding.copy(),
            coords=g.nodes[p].coords.copy(),
            label=g.nodes[p].label,
        )
        for a, p in enumerate(perm)
    ]
    edges = {}
    for a in range(len(perm)):
        for b in range(len(perm)):
            if a == b:
                continue
            rel = g.edges[(perm[a], perm[b])].relation.copy()
            edges[(a, b)] = EdgeAttr(src=a, dst=b, relation=rel)
    return AttributedGraph(nodes, edges, g.centroid.copy())


def randomize_edges(g: AttributedGraph, rng) -> AttributedGraph:
    """Same structure, relation vectors replaced by noise (same dimension)."""
    edges = {
        key: EdgeAttr(src=e.src, dst=e.dst, relation=rng.standard_normal(len(e.relation)))
        for key, e in g.edges.items()
    }
    return AttributedGraph(list(g.nodes), edges, g.centroid.copy())


def randomize_embeddings(g: AttributedGraph, rng) -> AttributedGraph:
    nodes = [
        NodeAttr(
            id=n.id,
            embedding=rng.standard_normal(len(n.embedding)),
            coords=n.coords.copy(),
            label=n.label,
        )
        for n in g.nodes
    ]
    return AttributedGraph(nodes, dict(g.edges), g.centroid.copy())


def oracle_cos(a, b) -> float:
    """Cosine similarity written without numpy, for use as an oracle."""
    na = math.sqrt(sum(float(x) * float(x) for x in a))
    nb = math.sqrt(sum(float(x) * float(x) for x in b))
    if na < 1e-12 or nb < 1e-12:
        return 0.0
    return sum(float(x) * float(y) for x, y in zip(a, b)) / (na * nb)


def oracle_likelihood(mv, g, g2, alpha) -> float:
    """Quadruple-loop recomputation of the mixed similarity objective."""
    ns, nt = mv.shape
    node = 0.0
    for i in range(ns):
        for ip in range(nt):
            node += mv[i, ip] * oracle_cos(g.nodes[i].embedding, g2.nodes[ip].embedding)
    value = alpha * node / ns
    if ns > 1 and nt > 1:
        edge = 0.0
        for i in range(ns):
            for j in range(ns):
                if j == i:
                    continue
                for ip in range(nt):
                    for jp in range(nt):
                        if jp == ip:
                            continue
                        edge += (
                            mv[i, ip]
                            * mv[j, jp]
                            * oracle_cos(
                                g.edges[(i, j)].relation, g2.edges[(ip, jp)].relation
                            )
                        )
        value += (1.0 - alpha) * edge / (ns * (ns - 1))
    return value


def oracle_energy(mv, g, g2, alpha, beta) -> float:
    entropy = sum(float(x) * math.log(float(x)) for x in mv.flat if x > 0)
    node = 0.0
    ns, nt = mv.shape
    for i in range(ns):
        for ip in range(nt):
            node += mv[i, ip] * oracle_cos(g.nodes[i].embedding, g2.nodes[ip].embedding)
    value = -alpha * node / ns - entropy / beta
    if ns > 1 and nt > 1:
        edge = 0.0
        for i in range(ns):
            for j in range(ns):
                if j == i:
                    continue
                for ip in range(nt):
                    for jp in range(nt):
                        if jp == ip:
                            continue
                        edge += (
                            mv[i, ip]
                            * mv[j, jp]
                            * oracle_cos(
                                g.edges[(i, j)].relation, g2.edges[(ip, jp)].relation
                            )
                        )
        value -= (1.0 - alpha) * edge / (ns * (ns - 1))
    return value


def oracle_compatibility(mv, g, g2, alpha) -> np.ndarray:
    """Direct summation over all (j, j') pairs for each (i, i')."""
    ns, nt = mv.shape
    q = np.zeros((ns, nt))
    for i in range(ns):
        for ip in range(nt):
            if ns > 1:
                edge = 0.0
                for j in range(ns):
                    if j == i:
                        continue
                    for jp in range(nt):
                        if jp == ip:
                            continue
                        edge += (
                            mv[i, ip]
                            * mv[j, jp]
                            * oracle_cos(
                                g.edges[(i, j)].relation, g2.edges[(ip, jp)].relation
                            )
                        )
                q[i, ip] += (1.0 - alpha) * edge / (2.0 * (ns - 1))
            q[i, ip] += alpha * mv[i, ip] * oracle_cos(
                g.nodes[i].embedding, g2.nodes[ip].embedding
            )
    return q


def random_rotation(rng) -> np.ndarray:
    """Uniform-ish 3-D rotation from the QR decomposition of a Gaussian."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
