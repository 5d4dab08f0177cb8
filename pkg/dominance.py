"""
Dominance classification of document token vectors.

A token d is dominated by a set of tokens when every query that gives d a
positive inner product gives some other token in the set a strictly larger
one. Dominated tokens never win the max-of-ReLU in the scoring function and
can be dropped without changing any score.

The exact test is the linear feasibility problem

    exists x >= 0 :  sum_j x_j (d - d_j) = -d

which by Farkas' lemma is equivalent to dominance. Two shortcuts avoid most
LP calls: zero vectors and exact duplicates are dropped outright, and a token
that beats every other token on its own direction (d.d >= d.d' for all d')
is kept without a test.
"""

import logging
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from lp_feasibility import lp_feasible
from pruning_errors import DimensionNot2Error, ShapeMismatchError
from scoring import max_relu_per_query
from token_matrix import DominancePartition, Evidence, PruneConfig, TokenMatrix

logger = logging.getLogger(__name__)

# Vectors equal within this (componentwise) are treated as one token
DUPLICATE_TOLERANCE = 1e-12

# Margin a pruned token must exceed the kept set by before sampling reports it
FALSIFY_MARGIN = 1e-7


class Dominance(str, Enum):
    DOMINATED = "dominated"
    NOT_DOMINATED = "not_dominated"


def self_match_prefilter(doc: TokenMatrix) -> List[int]:
    """
    Indices i with d_i.d_i >= d_i.d_j for every j != i.

    Taking q = d_i shows such a token is the strict maximiser for at least
    one query direction, so it is never dominated.
    """
    return _self_matches(doc.vectors, list(range(doc.n)))


def _self_matches(vectors, indices):
    if not indices:
        return []
    sub = vectors[indices]
    gram = sub @ sub.T
    diag = np.diag(gram).copy()
    np.fill_diagonal(gram, -np.inf)
    return [idx for idx, keep in zip(indices, diag >= gram.max(axis=1)) if keep]


def dominance_system(vectors: np.ndarray, i: int, others: Sequence[int]):
    """
    LP data for "token i is dominated by tokens `others`".

    Returns:
        tuple: (A, b) with A = [d_i - d_j for j in others] as columns, b = -d_i
    """
    d = vectors[i]
    cols = [j for j in others if j != i]
    if cols:
        a = (d[None, :] - vectors[cols]).T
    else:
        a = np.zeros((vectors.shape[1], 0))
    return a, -d


def local_dominance_test(i: int, doc: TokenMatrix, active: Sequence[int],
                         cfg: Optional[PruneConfig] = None) -> Dominance:
    """
    Decide whether token i is dominated by the other tokens in `active`.

    Args:
        i: index of the candidate token, must belong to active
        doc: the document
        active: indices of the tokens that may dominate i
        cfg: supplies the LP feasibility tolerance

    Returns:
        Dominance: DOMINATED iff the dominance LP is feasible
    """
    cfg = cfg or PruneConfig()
    active = list(active)
    if i not in active:
        raise ShapeMismatchError(f"candidate {i} is not in the active set")
    a, b = dominance_system(doc.vectors, i, active)
    result = lp_feasible(a, b, cfg.lp_feas_tol)
    return Dominance.DOMINATED if result.feasible else Dominance.NOT_DOMINATED


def _deduplicate(vectors):
    """Map every row to the lowest-index row it duplicates (itself if none)"""
    representative = []
    reps = []
    for i in range(vectors.shape[0]):
        owner = i
        if reps:
            diffs = np.max(np.abs(vectors[reps] - vectors[i]), axis=1)
            hits = np.flatnonzero(diffs <= DUPLICATE_TOLERANCE)
            if hits.size:
                owner = reps[int(hits[0])]
        if owner == i:
            reps.append(i)
        representative.append(owner)
    return representative


def _screen(doc: TokenMatrix, zero_tol: float):
    """
    Tag duplicates and zero vectors.

    Returns:
        tuple: (evidence list with None for undecided tokens, undecided indices)
    """
    evidence = [None] * doc.n
    representative = _deduplicate(doc.vectors)
    norms = doc.norms()
    unique = []
    for i, owner in enumerate(representative):
        if owner != i:
            evidence[i] = Evidence.DUPLICATE
        elif norms[i] <= zero_tol:
            evidence[i] = Evidence.ZERO_VECTOR
        else:
            unique.append(i)
    return evidence, unique


def global_partition(doc: TokenMatrix, cfg: Optional[PruneConfig] = None,
                     progressive: bool = True) -> DominancePartition:
    """
    Split a document into dominating and dominated tokens.

    Steps: collapse exact duplicates onto the lowest index, drop zero
    vectors, keep self-matching tokens, then test the remaining candidates
    in ascending norm order. With progressive removal a dominated candidate
    leaves the active set immediately, so later tests run on fewer columns;
    the resulting set is the same as testing against the full document.

    Args:
        doc: the document
        cfg: LP tolerance and the zero-norm cutoff (svd_tol)
        progressive: shrink the active set as candidates are pruned

    Returns:
        DominancePartition
    """
    cfg = cfg or PruneConfig()
    if doc.n == 0:
        return DominancePartition.from_evidence(doc.doc_id, [])

    evidence, unique = _screen(doc, cfg.svd_tol)
    for i in _self_matches(doc.vectors, unique):
        evidence[i] = Evidence.SELF_MATCH

    norms = doc.norms()
    candidates = sorted((i for i in unique if evidence[i] is None), key=lambda i: (norms[i], i))
    active = list(unique)
    for i in candidates:
        pool = active if progressive else unique
        verdict = local_dominance_test(i, doc, pool, cfg)
        if verdict is Dominance.DOMINATED:
            evidence[i] = Evidence.LP_FEASIBLE
            if progressive:
                active.remove(i)
        else:
            evidence[i] = Evidence.LP_INFEASIBLE

    partition = DominancePartition.from_evidence(doc.doc_id, evidence)
    logger.debug(
        f"{doc.doc_id}: {len(partition.kept)}/{doc.n} kept, "
        f"{len(candidates)} LP tests, {len(unique) - len(candidates)} self-matches"
    )
    return partition


def _arc_breakpoints(vectors):
    angles = []
    n = vectors.shape[0]
    normals = [vectors[i] for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            normals.append(vectors[i] - vectors[j])
    for w in normals:
        base = np.arctan2(w[1], w[0])
        angles.extend([base + np.pi / 2, base - np.pi / 2])
    angles = np.sort(np.mod(angles, 2 * np.pi))
    return np.unique(angles)


def oracle_2d(doc: TokenMatrix) -> DominancePartition:
    """
    Exact partition for two-dimensional documents by an angular sweep.

    Queries are parameterised as q = (cos phi, sin phi). The inner products
    only change order where two of them cross or one crosses zero, so it is
    enough to look at one direction inside every arc between consecutive
    crossings. A token is kept iff it is the unique positive maximum on
    some arc.
    """
    if doc.d != 2:
        raise DimensionNot2Error(f"angular sweep needs d = 2, document {doc.doc_id!r} has d = {doc.d}")
    if doc.n == 0:
        return DominancePartition.from_evidence(doc.doc_id, [])

    evidence, unique = _screen(doc, 0.0)
    if unique:
        vectors = doc.vectors[unique]
        breaks = _arc_breakpoints(vectors)
        # consecutive midpoints, including the arc that wraps past 2 pi
        nxt = np.append(breaks[1:], breaks[0] + 2 * np.pi)
        mids = (breaks + nxt) / 2
        dirs = np.stack([np.cos(mids), np.sin(mids)], axis=1)
        sims = dirs @ vectors.T
        winners = set()
        for row in sims:
            best = int(np.argmax(row))
            if row[best] > 0 and np.count_nonzero(row == row[best]) == 1:
                winners.add(best)
        for pos, i in enumerate(unique):
            evidence[i] = Evidence.ARC_WINNER if pos in winners else Evidence.ARC_DOMINATED
    return DominancePartition.from_evidence(doc.doc_id, evidence)


def unit_query_batches(rng, samples: int, dim: int, batch_size: int = 4096):
    """Yield batches of queries drawn uniformly on the unit sphere, `samples` in total"""
    remaining = samples
    while remaining > 0:
        size = min(batch_size, remaining)
        remaining -= size
        q = rng.standard_normal((size, dim))
        yield q / np.linalg.norm(q, axis=1, keepdims=True)


def falsify_by_sampling(doc: TokenMatrix, partition: DominancePartition, samples: int = 10000,
                        seed=0, batch_size: int = 4096) -> Optional[np.ndarray]:
    """
    Look for a query that the pruned tokens would have scored higher.

    Draws unit queries uniformly on the sphere and returns the first one where
    the max-of-ReLU over pruned rows exceeds the one over kept rows by more
    than FALSIFY_MARGIN. Sampling can refute a partition but never prove it.

    Returns:
        np.ndarray or None: the offending query
    """
    if not partition.pruned:
        return None
    rng = np.random.default_rng(seed)
    kept = doc.vectors[list(partition.kept)].reshape(len(partition.kept), doc.d)
    pruned = doc.vectors[list(partition.pruned)]
    for q in unit_query_batches(rng, samples, doc.d, batch_size):
        gap = max_relu_per_query(q, pruned) - max_relu_per_query(q, kept)
        bad = np.flatnonzero(gap > FALSIFY_MARGIN)
        if bad.size:
            logger.debug(f"{doc.doc_id}: counterexample after sampling, gap {gap[bad[0]]:.3e}")
            return q[bad[0]]
    return None
