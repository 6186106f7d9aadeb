"""Graduated assignment over attributed graphs.

The solver relaxes the search for a one-to-one node correspondence into a
continuous nonnegative matrix M and anneals it: each iteration computes a
compatibility matrix Q mixing edge-similarity support and node similarity,
sharpens M <- exp(beta * Q), then normalizes columns and rows once each.
beta grows linearly from beta0 by beta0/10 per iteration, so the soft
assignment hardens gradually toward a near-permutation.

Per-iteration compatibility (alpha mixes node vs. edge influence):

    Q[i,i'] = (1-alpha) * M[i,i'] * sum_{j!=i, j'!=i'} M[j,j'] * es(ij, i'j')
                / (2*(Ns-1))
              + alpha * M[i,i'] * ns(i, i')

with es/ns cosine similarities of edge relation vectors and node
embeddings. The edge divisor is the per-node edge count; the objective
diagnostics (`likelihood`, `energy`) use the total edge count Ns*(Ns-1).

All operations are deterministic and allocate only per-call state.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import InvalidInputError, NumericalError
from .graph import (
    NORM_FLOOR,
    AttributedGraph,
    MappingMatrix,
    SolverConfig,
    node_similarity_matrix,
)

# Exhaustive search is the test oracle; factorial cost is capped here.
BRUTE_FORCE_MAX_NODES = 8


@dataclass
class SolveTrace:
    """Diagnostics from one solve call.

    energies[k] is the energy of the mapping entering iteration k (with
    that iteration's beta); the final entry is the energy of the returned
    mapping under the last beta used. Empty when recording is disabled.
    """

    energies: list[float]
    final_beta: float
    iterations_run: int
    max_delta_last: float


@dataclass
class CompatibilityMatrix:
    values: np.ndarray


class _Precomputed(NamedTuple):
    node_sim: Optional[np.ndarray]  # (Ns, Nt); None when alpha == 0
    edge_sim: Optional[np.ndarray]  # (Ns*Nt, Ns*Nt); None when alpha == 1 or Ns < 2
    ns: int
    nt: int
    alpha: float


def _normalized_relations(g: AttributedGraph) -> Optional[np.ndarray]:
    rel = g.relation_tensor()
    if rel is None:
        return None
    norms = np.linalg.norm(rel, axis=2, keepdims=True)
    return np.divide(rel, norms, out=np.zeros_like(rel), where=norms >= NORM_FLOOR)


def _edge_sim_matrix(g: AttributedGraph, g2: AttributedGraph) -> Optional[np.ndarray]:
    """Flattened 4-index tensor of edge cosine similarities.

    Entry [(i*Nt + i'), (j*Nt + j')] = cos(r_ij, r'_i'j'). Diagonal relation
    slots are zero vectors, so terms with j == i or j' == i' vanish without
    explicit masking.
    """
    us = _normalized_relations(g)
    ut = _normalized_relations(g2)
    if us is None or ut is None:
        return None
    if us.shape[2] != ut.shape[2]:
        raise InvalidInputError(
            f"relation dimension mismatch: {us.shape[2]} vs {ut.shape[2]}"
        )
    ns, nt = g.n_nodes, g2.n_nodes
    s4 = np.einsum("ijd,kld->ikjl", us, ut)
    return np.ascontiguousarray(s4.reshape(ns * nt, ns * nt))


def _precompute(g: AttributedGraph, g2: AttributedGraph, alpha: float) -> _Precomputed:
    # Skipping the zero-weighted branch keeps the documented ablation
    # invariants bitwise: alpha=1 never touches edges, alpha=0 never
    # touches embeddings.
    node_sim = node_similarity_matrix(g, g2) if alpha > 0.0 else None
    edge_sim = _edge_sim_matrix(g, g2) if alpha < 1.0 else None
    return _Precomputed(node_sim, edge_sim, g.n_nodes, g2.n_nodes, alpha)


def _edge_support(m: np.ndarray, pre: _Precomputed) -> Optional[np.ndarray]:
    """sum_{j,j'} M[j,j'] * es(ij, i'j') for every (i, i'); None if no edges."""
    if pre.edge_sim is None:
        return None
    return (pre.edge_sim @ m.reshape(-1)).reshape(pre.ns, pre.nt)


def _compat(m: np.ndarray, pre: _Precomputed) -> np.ndarray:
    alpha = pre.alpha
    q = np.zeros((pre.ns, pre.nt))
    # overflow from pathological inputs becomes inf/nan here and is turned
    # into NumericalError by the caller's finiteness check
    with np.errstate(over="ignore", invalid="ignore"):
        support = _edge_support(m, pre)
        if support is not None and pre.ns > 1:
            q += (1.0 - alpha) / (2.0 * (pre.ns - 1)) * m * support
        if pre.node_sim is not None:
            q += alpha * m * pre.node_sim
    return q


def _entropy_sum(m: np.ndarray) -> float:
    # x*log(x) with the 0*log(0) = 0 limit.
    positive = m > 0
    return float(np.sum(m[positive] * np.log(m[positive])))


def _energy(m: np.ndarray, pre: _Precomputed, beta: float) -> float:
    alpha = pre.alpha
    value = -_entropy_sum(m) / beta
    support = _edge_support(m, pre)
    if support is not None and pre.ns > 1:
        value -= (1.0 - alpha) * float(np.sum(m * support)) / (pre.ns * (pre.ns - 1))
    if pre.node_sim is not None:
        value -= alpha * float(np.sum(m * pre.node_sim)) / pre.ns
    return value


def _likelihood(m: np.ndarray, pre: _Precomputed) -> float:
    alpha = pre.alpha
    value = 0.0
    support = _edge_support(m, pre)
    if support is not None and pre.ns > 1:
        value += (1.0 - alpha) * float(np.sum(m * support)) / (pre.ns * (pre.ns - 1))
    if pre.node_sim is not None:
        value += alpha * float(np.sum(m * pre.node_sim)) / pre.ns
    return value


def _step(m: np.ndarray, pre: _Precomputed, beta: float) -> np.ndarray:
    q = _compat(m, pre)
    if not np.isfinite(q).all():
        raise NumericalError(
            f"non-finite compatibility matrix at beta={beta} "
            f"(max |M| = {np.abs(m).max()})"
        )
    # Global max-shift before exponentiation: a common factor exp(-beta*c)
    # cancels in the first normalization, so this is exact, not approximate.
    w = np.exp(beta * (q - q.max()))
    col = w.sum(axis=0, keepdims=True)
    if (col <= 0).any():
        raise NumericalError(f"column sum underflowed to 0 at beta={beta}")
    w = w / col
    row = w.sum(axis=1, keepdims=True)
    if (row <= 0).any():
        raise NumericalError(f"row sum underflowed to 0 at beta={beta}")
    return w / row


def init_mapping(ns: int, nt: int) -> MappingMatrix:
    """Uniform initial mapping: every entry 1/Ns, so columns sum to 1."""
    if ns < 1 or nt < 1:
        raise InvalidInputError(f"node counts must be >= 1, got {ns}x{nt}")
    return MappingMatrix(np.full((ns, nt), 1.0 / ns))


def _check_mapping_shape(m: MappingMatrix, g: AttributedGraph, g2: AttributedGraph):
    if m.ns != g.n_nodes or m.nt != g2.n_nodes:
        raise InvalidInputError(
            f"mapping shape {m.ns}x{m.nt} does not match graphs "
            f"{g.n_nodes}x{g2.n_nodes}"
        )


def compatibility_matrix(
    m: MappingMatrix, g: AttributedGraph, g2: AttributedGraph, alpha: float
) -> CompatibilityMatrix:
    _check_mapping_shape(m, g, g2)
    return CompatibilityMatrix(_compat(m.values, _precompute(g, g2, alpha)))


def ga_step(
    m: MappingMatrix, g: AttributedGraph, g2: AttributedGraph, alpha: float, beta: float
) -> MappingMatrix:
    """One update: exponentiate beta*Q, normalize columns, then rows."""
    if beta <= 0:
        raise InvalidInputError(f"beta must be positive, got {beta}")
    _check_mapping_shape(m, g, g2)
    return MappingMatrix(_step(m.values, _precompute(g, g2, alpha), beta))


def solve(
    g: AttributedGraph,
    g2: AttributedGraph,
    config: Optional[SolverConfig] = None,
    *,
    record_energies: bool = True,
    iteration_callback: Optional[Callable[[np.ndarray, float, int], None]] = None,
) -> tuple[MappingMatrix, SolveTrace]:
    """Run the annealing loop from the uniform mapping.

    Iteration k (0-based) uses beta = beta0 + k * beta_increment; the trace
    reports final_beta = beta0 + iterations_run * beta_increment, i.e. the
    value after the last post-iteration increment. With early_stop_delta > 0
    the loop exits once the largest entry change falls below the threshold.
    """
    config = config or SolverConfig()
    pre = _precompute(g, g2, config.alpha)
    m = np.full((pre.ns, pre.nt), 1.0 / pre.ns)
    energies: list[float] = []
    delta = float("inf")
    iterations_run = 0
    beta = config.beta0
    for k in range(config.iterations):
        beta = config.beta0 + k * config.beta_increment
        if record_energies:
            energies.append(_energy(m, pre, beta))
        m_new = _step(m, pre, beta)
        delta = float(np.abs(m_new - m).max())
        m = m_new
        iterations_run = k + 1
        if iteration_callback is not None:
            iteration_callback(m, beta, k)
        if config.early_stop_delta > 0 and delta < config.early_stop_delta:
            break
    if record_energies:
        energies.append(_energy(m, pre, beta))
    final_beta = config.beta0 + iterations_run * config.beta_increment
    trace = SolveTrace(
        energies=energies,
        final_beta=final_beta,
        iterations_run=iterations_run,
        max_delta_last=delta,
    )
    return MappingMatrix(m), trace


def likelihood(
    m: MappingMatrix, g: AttributedGraph, g2: AttributedGraph, alpha: float
) -> float:
    """Mixed node/edge similarity objective of a soft mapping.

    (1-alpha) * edge quadratic form / (Ns*(Ns-1)) + alpha * node form / Ns.
    """
    _check_mapping_shape(m, g, g2)
    return _likelihood(m.values, _precompute(g, g2, alpha))


def energy(
    m: MappingMatrix, g: AttributedGraph, g2: AttributedGraph, alpha: float, beta: float
) -> float:
    """Negated likelihood plus the entropy penalty -(1/beta) * sum M log M."""
    if beta <= 0:
        raise InvalidInputError(f"beta must be positive, got {beta}")
    _check_mapping_shape(m, g, g2)
    return _energy(m.values, _precompute(g, g2, alpha), beta)


def log_prior(m: MappingMatrix, beta: float) -> float:
    """(1/beta) * sum M log M; zero for permutation matrices, negative otherwise."""
    if beta <= 0:
        raise InvalidInputError(f"beta must be positive, got {beta}")
    return _entropy_sum(m.values) / beta


def hard_assignment(m: MappingMatrix) -> np.ndarray:
    """Per-target argmax over sources (ties -> lowest source index).

    Returns an int array of length Nt mapping target index -> source index.
    Many-to-one results are possible; no one-to-one rounding is applied.
    """
    return np.argmax(m.values, axis=0)


class BruteForceResult(NamedTuple):
    assignment: np.ndarray  # target index -> source index
    best: float
    runner_up: float  # -inf when only one candidate exists


def brute_force_details(
    g: AttributedGraph, g2: AttributedGraph, alpha: float
) -> BruteForceResult:
    """Exhaustive one-to-one search maximizing the likelihood objective.

    Valid as an oracle because every permutation has equal entropy prior.
    Only square problems up to BRUTE_FORCE_MAX_NODES nodes are accepted.
    Ties resolve to the lexicographically smallest target->source array.
    """
    n = g.n_nodes
    if g2.n_nodes != n:
        raise InvalidInputError("brute force requires equal node counts")
    if n > BRUTE_FORCE_MAX_NODES:
        raise InvalidInputError(
            f"brute force refused for N={n} > {BRUTE_FORCE_MAX_NODES}"
        )
    pre = _precompute(g, g2, alpha)
    node_sim = pre.node_sim
    s4 = None
    if pre.edge_sim is not None:
        s4 = pre.edge_sim.reshape(n, n, n, n).transpose(0, 2, 1, 3)  # [i,j,i',j']

    perms = np.array(list(itertools.permutations(range(n))), dtype=int)
    idx = np.arange(n)
    scores = np.zeros(len(perms))
    if node_sim is not None:
        scores += alpha * node_sim[perms, idx].sum(axis=1) / n
    if s4 is not None and n > 1:
        gathered = s4[perms[:, :, None], perms[:, None, :], idx[:, None], idx[None, :]]
        scores += (1.0 - alpha) * gathered.sum(axis=(1, 2)) / (n * (n - 1))

    best_idx = int(np.argmax(scores))  # first max = lexicographically smallest
    best = float(scores[best_idx])
    if len(scores) > 1:
        runner_up = float(np.partition(scores, -2)[-2])
    else:
        runner_up = float("-inf")
    return BruteForceResult(perms[best_idx].copy(), best, runner_up)


def brute_force_map(g: AttributedGraph, g2: AttributedGraph, alpha: float) -> np.ndarray:
    """Optimal one-to-one assignment (target -> source) by exhaustive search."""
    return brute_force_details(g, g2, alpha).assignment
