"""
Empirical checks that a pruned index scores exactly like the original.

verify_lossless samples random unit query tokens per document and compares
the max-of-ReLU score on both sides; rank_correlation compares the corpus
rankings a query matrix induces before and after pruning.
"""

import logging
import concurrent.futures
from dataclasses import dataclass, field
from itertools import repeat
from typing import List, Optional, Tuple

import numpy as np
from scipy.stats import kendalltau
from tqdm import tqdm

from corpus_io import CorpusIndex
from dominance import unit_query_batches
from pruning_errors import IndexMismatchError, TooFewDocumentsError
from scoring import max_relu_per_query, rank_documents
from token_matrix import QueryMatrix, TokenMatrix

logger = logging.getLogger(__name__)

# Absolute score difference still counted as lossless
LOSSLESS_TOLERANCE = 1e-6

# Pruned rows must match an original row within this (float32 storage)
ROW_MATCH_TOLERANCE = 1e-6

QUERY_BATCH = 4096


@dataclass
class VerifyReport:
    docs_checked: int
    queries_per_doc: int
    max_abs_score_delta: float
    counterexamples: List[Tuple[str, np.ndarray]] = field(default_factory=list)
    kendall_tau_vs_unpruned: Optional[float] = None
    tolerance: float = LOSSLESS_TOLERANCE

    @property
    def lossless(self) -> bool:
        return not self.counterexamples

    def to_dict(self):
        return {
            "docs_checked": self.docs_checked,
            "queries_per_doc": self.queries_per_doc,
            "max_abs_score_delta": self.max_abs_score_delta,
            "counterexamples": [
                {"doc_id": doc_id, "query": [float(x) for x in q]}
                for doc_id, q in self.counterexamples
            ],
            "kendall_tau_vs_unpruned": self.kendall_tau_vs_unpruned,
            "tolerance": self.tolerance,
        }


def _check_pairing(original: CorpusIndex, pruned: CorpusIndex):
    if original.doc_ids() != pruned.doc_ids():
        raise IndexMismatchError("original and pruned indexes hold different documents")
    if len(original) and original.dim != pruned.dim:
        raise IndexMismatchError(f"dimension {original.dim} vs {pruned.dim}")


def _check_subset(orig: TokenMatrix, kept: TokenMatrix):
    for row, vec in enumerate(kept.vectors):
        if orig.n == 0 or np.min(np.max(np.abs(orig.vectors - vec), axis=1)) > ROW_MATCH_TOLERANCE:
            raise IndexMismatchError(
                f"document {orig.doc_id!r}: pruned row {row} is not one of the original tokens"
            )


def _verify_one(orig: TokenMatrix, kept: TokenMatrix, samples: int, seed_seq, tolerance: float):
    """
    Returns:
        tuple: (max |delta| over the sampled queries, first offending query or None)
    """
    rng = np.random.default_rng(seed_seq)
    worst = 0.0
    offender = None
    for q in unit_query_batches(rng, samples, orig.d, QUERY_BATCH):
        delta = np.abs(max_relu_per_query(q, orig.vectors) - max_relu_per_query(q, kept.vectors))
        top = int(np.argmax(delta))
        worst = max(worst, float(delta[top]))
        if offender is None and delta[top] > tolerance:
            offender = q[top]
    return worst, offender


def verify_lossless(original: CorpusIndex, pruned: CorpusIndex, samples: int = 10000, seed=0,
                    ranking_queries: int = 0, query_tokens: int = 8,
                    tolerance: float = LOSSLESS_TOLERANCE, max_workers=None,
                    show_progress=False) -> VerifyReport:
    """
    Compare pruned and original scores on random unit queries.

    Every document gets its own child seed, so the report does not depend on
    the worker count.

    Args:
        original: unpruned index
        pruned: index with the same documents in the same order, rows a subset
        samples: random query tokens per document
        seed: master seed
        ranking_queries: when > 0 and there are at least 2 documents, also
            draw this many random query matrices and report the lowest
            Kendall tau between the rankings
        query_tokens: tokens per random query matrix
        tolerance: largest score difference accepted as equal
        max_workers: worker processes, None or 1 for in-process

    Raises:
        IndexMismatchError
    """
    _check_pairing(original, pruned)
    for orig, kept in zip(original, pruned):
        _check_subset(orig, kept)

    seeds = np.random.SeedSequence(seed).spawn(len(original) + 1)
    doc_seeds, ranking_seed = seeds[:-1], seeds[-1]

    if max_workers and max_workers > 1 and len(original) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=max_workers) as executor:
            results = list(executor.map(
                _verify_one, original, pruned, repeat(samples), doc_seeds, repeat(tolerance)
            ))
    else:
        results = [
            _verify_one(orig, kept, samples, s, tolerance)
            for orig, kept, s in tqdm(
                zip(original, pruned, doc_seeds), total=len(original),
                desc="Verifying", unit="doc", disable=not show_progress,
            )
        ]

    max_delta = 0.0
    counterexamples = []
    for doc, (delta, offender) in zip(original, results):
        max_delta = max(max_delta, delta)
        if offender is not None:
            counterexamples.append((doc.doc_id, offender))
            logger.warning(f"{doc.doc_id}: score changed by {delta:.3e} after pruning")

    tau = None
    if ranking_queries > 0 and len(original) >= 2:
        rng = np.random.default_rng(ranking_seed)
        taus = []
        for i in range(ranking_queries):
            vecs = next(unit_query_batches(rng, query_tokens, original.dim))
            taus.append(rank_correlation(QueryMatrix(f"random-{i}", vecs), original, pruned))
        tau = float(min(taus))

    report = VerifyReport(
        docs_checked=len(original),
        queries_per_doc=samples,
        max_abs_score_delta=max_delta,
        counterexamples=counterexamples,
        kendall_tau_vs_unpruned=tau,
        tolerance=tolerance,
    )
    logger.info(
        f"Verified {report.docs_checked} documents x {samples} queries: "
        f"max delta {max_delta:.3e}, {len(counterexamples)} counterexamples"
    )
    return report


def rank_correlation(q: QueryMatrix, original: CorpusIndex, pruned: CorpusIndex) -> float:
    """
    Kendall tau-b between the scores a query gives the corpus before and
    after pruning.

    Two constant rankings count as perfectly correlated (1.0); a constant
    ranking against a varying one gives 0.0.

    Raises:
        TooFewDocumentsError, IndexMismatchError
    """
    if len(original) < 2:
        raise TooFewDocumentsError(f"rank correlation needs at least 2 documents, got {len(original)}")
    _check_pairing(original, pruned)

    before = dict(rank_documents(q, original.docs))
    after = dict(rank_documents(q, pruned.docs))
    ids = original.doc_ids()
    a = np.array([before[i] for i in ids])
    b = np.array([after[i] for i in ids])

    const_a = np.all(a == a[0])
    const_b = np.all(b == b[0])
    if const_a and const_b:
        return 1.0
    if const_a or const_b:
        logger.warning(f"query {q.query_id!r}: one ranking is constant, Kendall tau set to 0")
        return 0.0
    tau, _ = kendalltau(a, b)
    return float(tau)
