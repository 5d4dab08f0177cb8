"""
Late-interaction scoring: the plain MaxSim score, the ReLU-clamped variant
that makes lossless pruning possible, and the forward projection that maps
encoder hidden states to sub-unit-norm token vectors.
"""

import logging
from typing import List, Tuple

import numpy as np

from pruning_errors import (
    DimensionMismatchError,
    EmptyDocumentError,
    ShapeMismatchError,
    ZeroVectorError,
)
from token_matrix import QueryMatrix, TokenMatrix

logger = logging.getLogger(__name__)

VARIANTS = ("p", "plain")


def _check_dims(q: QueryMatrix, doc: TokenMatrix):
    if q.d != doc.d:
        raise DimensionMismatchError(
            f"query {q.query_id!r} has dimension {q.d}, document {doc.doc_id!r} has {doc.d}"
        )


def max_relu_per_query(queries: np.ndarray, doc_vectors: np.ndarray) -> np.ndarray:
    """
    For every query row, max over document rows of [q.d]+.

    Computed in float64; an empty document gives 0 for every query row.
    """
    queries = np.asarray(queries, dtype=np.float64)
    if doc_vectors.shape[0] == 0:
        return np.zeros(queries.shape[0])
    sims = queries @ np.asarray(doc_vectors, dtype=np.float64).T
    # ReLU of the max equals max of the ReLU
    return np.maximum(sims.max(axis=1), 0.0)


def colbert_score(q: QueryMatrix, doc: TokenMatrix) -> float:
    """
    Plain late-interaction score: sum over query tokens of the max inner
    product with the document tokens.

    Raises:
        DimensionMismatchError: query and document dimensions differ
        EmptyDocumentError: the document has no tokens (no max exists)
    """
    _check_dims(q, doc)
    if doc.n == 0:
        raise EmptyDocumentError(f"document {doc.doc_id!r} has no tokens")
    sims = q.vectors @ doc.vectors.T
    return float(sims.max(axis=1).sum())


def colbert_p_score(q: QueryMatrix, doc: TokenMatrix) -> float:
    """
    Score with ReLU-clamped inner products, the variant pruning preserves.
    An empty document scores 0.
    """
    _check_dims(q, doc)
    return float(max_relu_per_query(q.vectors, doc.vectors).sum())


def score(q: QueryMatrix, doc: TokenMatrix, variant: str = "p") -> float:
    if variant == "p":
        return colbert_p_score(q, doc)
    if variant == "plain":
        return colbert_score(q, doc)
    raise ValueError(f"unknown scoring variant {variant!r}, expected one of {VARIANTS}")


def rank_documents(q: QueryMatrix, docs, variant: str = "p") -> List[Tuple[str, float]]:
    """
    Score every document and return (doc_id, score) sorted by decreasing
    score; equal scores keep corpus order.
    """
    scored = [(doc.doc_id, score(q, doc, variant)) for doc in docs]
    order = sorted(range(len(scored)), key=lambda i: (-scored[i][1], i))
    return [scored[i] for i in order]


def project(hidden, w1, w2, tol: float = 1e-12) -> np.ndarray:
    """
    Forward projection of one hidden state.

    Stacks w1 @ hidden (d rows) over w2 @ hidden (e rows), normalises the
    stacked vector to unit norm and keeps the first d components, so the
    result has norm <= 1 and the mass sent to the extra e rows is discarded.

    Args:
        hidden: vector of length h
        w1: d x h array
        w2: e x h array (e may be 0)
        tol: stacked outputs with norm below this are rejected

    Returns:
        np.ndarray: vector of length d
    """
    hidden = np.asarray(hidden, dtype=np.float64)
    w1 = np.asarray(w1, dtype=np.float64)
    w2 = np.asarray(w2, dtype=np.float64)
    if hidden.ndim != 1:
        raise ShapeMismatchError(f"hidden state must be a vector, got shape {hidden.shape}")
    h = hidden.shape[0]
    if w2.size == 0:
        w2 = w2.reshape(0, h)
    if w1.ndim != 2 or w2.ndim != 2 or w1.shape[1] != h or w2.shape[1] != h:
        raise ShapeMismatchError(
            f"projection shapes {w1.shape} / {w2.shape} do not match hidden size {h}"
        )
    stacked = np.concatenate([w1 @ hidden, w2 @ hidden])
    norm = np.linalg.norm(stacked)
    if norm < tol:
        raise ZeroVectorError(f"stacked projection has norm {norm:.3g} < {tol}")
    return (stacked / norm)[: w1.shape[0]]


def project_matrix(hidden, w1, w2, tol: float = 1e-12) -> np.ndarray:
    """Row-wise project() for an n x h array of hidden states"""
    hidden = np.asarray(hidden, dtype=np.float64)
    if hidden.ndim != 2:
        raise ShapeMismatchError(f"hidden states must be n x h, got shape {hidden.shape}")
    d = np.asarray(w1).shape[0]
    out = np.empty((hidden.shape[0], d))
    for i, row in enumerate(hidden):
        out[i] = project(row, w1, w2, tol)
    return out
