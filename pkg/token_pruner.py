"""
Pruning strategies and the corpus-level pruning loop.

Two strategies are available: LP pruning, which runs the dominance tests on
an SVD-reduced copy of each document and is exactly lossless at
theta_lp = 1.0, and norm pruning, which drops every token whose norm is below
a threshold.
"""

import logging
import os
import time
import concurrent.futures
from itertools import repeat
from typing import Optional, Tuple

from tqdm import tqdm

from corpus_io import CorpusIndex
from dominance import global_partition
from pruning_errors import ConfigError, PruningFailedError, TokenPruningError
from svd_reduction import reduced_document
from token_matrix import (
    DocPruneStats,
    DominancePartition,
    Evidence,
    PruneConfig,
    PruneReport,
    Strategy,
    TokenMatrix,
)

logger = logging.getLogger(__name__)


def lp_prune(doc: TokenMatrix, cfg: PruneConfig) -> DominancePartition:
    """
    Dominance pruning on the rank-k reduction of a document.

    The reduced columns stand in for the token vectors during the tests;
    the partition indexes the original tokens one to one.
    """
    if cfg.strategy is not Strategy.LP:
        raise ConfigError(f"lp_prune called with strategy {cfg.strategy.value!r}")
    if doc.n == 0:
        return DominancePartition.from_evidence(doc.doc_id, [])

    reduced = reduced_document(doc, cfg.theta_lp, cfg.svd_tol)
    if reduced.shape[0] == 0:
        # every singular value is zero, so every token is
        return DominancePartition.from_evidence(doc.doc_id, [Evidence.ZERO_VECTOR] * doc.n)
    return global_partition(TokenMatrix(doc.doc_id, reduced.T), cfg)


def norm_prune(doc: TokenMatrix, theta_n: float) -> DominancePartition:
    """Prune tokens with norm strictly below theta_n"""
    if not (0.0 <= theta_n <= 1.0):
        raise ConfigError(f"theta_n must be in [0, 1], got {theta_n}")
    below = doc.norms() < theta_n
    evidence = [Evidence.NORM_BELOW_THRESHOLD if b else Evidence.NORM_KEPT for b in below]
    return DominancePartition.from_evidence(doc.doc_id, evidence)


def prune_document(doc: TokenMatrix, cfg: PruneConfig) -> DominancePartition:
    if cfg.strategy is Strategy.LP:
        return lp_prune(doc, cfg)
    return norm_prune(doc, cfg.theta_n)


def _prune_one(doc: TokenMatrix, cfg: PruneConfig) -> DominancePartition:
    # Worker entry point; must stay at module level so it pickles
    try:
        return prune_document(doc, cfg)
    except ConfigError:
        raise
    except TokenPruningError as e:
        raise PruningFailedError(doc.doc_id, f"{type(e).__name__}: {e}") from e


class TokenPruner:
    """
    Applies one pruning configuration to every document of a corpus.

    Documents are independent, so they can be farmed out to a process pool.
    Results are collected in corpus order, which keeps the output identical
    for any worker count.
    """

    def __init__(self, config: Optional[PruneConfig] = None, show_progress=True):
        """
        Args:
            config (PruneConfig): strategy and thresholds, defaults to exact LP pruning
            show_progress (bool): draw a tqdm bar on stderr
        """
        self.config = config or PruneConfig()
        self.show_progress = show_progress

        # Multiprocess settings
        self.use_multiprocessing = False
        self.max_workers = max(1, (os.cpu_count() or 1) - 1)

        self.progress_callback = None

    def set_progress_callback(self, callback):
        """callback(stage, current, total) is called after every document"""
        self.progress_callback = callback

    def _update_progress(self, stage, current, total):
        if self.progress_callback:
            self.progress_callback(stage, current, total)

    def enable_multiprocessing(self, max_workers=None):
        self.use_multiprocessing = True
        if max_workers:
            self.max_workers = max_workers
        logger.info(f"Multiprocessing enabled with {self.max_workers} workers")

    def disable_multiprocessing(self):
        self.use_multiprocessing = False
        logger.info("Multiprocessing disabled")

    def partition(self, doc: TokenMatrix) -> DominancePartition:
        return _prune_one(doc, self.config)

    def _partitions(self, docs):
        total = len(docs)
        if self.use_multiprocessing and total > 1:
            executor = concurrent.futures.ProcessPoolExecutor(max_workers=self.max_workers)
            with executor:
                # map() yields in submission order
                for partition in executor.map(_prune_one, docs, repeat(self.config)):
                    yield partition
        else:
            for doc in docs:
                yield _prune_one(doc, self.config)

    def prune(self, index: CorpusIndex) -> Tuple[CorpusIndex, PruneReport]:
        """
        Prune every document of an index.

        Returns:
            tuple: (index holding only kept vectors in original doc order, PruneReport)

        Raises:
            PruningFailedError: naming the first document that failed
        """
        start_t = time.time()
        docs = list(index.docs)
        kept_docs = []
        per_doc = []

        with tqdm(total=len(docs), desc="Pruning", unit="doc", disable=not self.show_progress) as pbar:
            for current, (doc, part) in enumerate(zip(docs, self._partitions(docs)), start=1):
                kept_docs.append(doc.subset(part.kept))
                per_doc.append(DocPruneStats(doc.doc_id, doc.n, len(part.kept), part.evidence_counts()))
                logger.debug(f"{doc.doc_id}: {doc.n} -> {len(part.kept)} tokens")
                pbar.update(1)
                self._update_progress("prune", current, len(docs))

        pruned = CorpusIndex(dim=index.dim, docs=kept_docs, format_version=index.format_version)
        report = PruneReport(
            per_doc=per_doc,
            wall_time_seconds=time.time() - start_t,
            config=self.config.to_dict(),
        )
        ratio = report.remaining_ratio
        logger.info(
            f"Pruned {len(docs)} documents: {report.tokens_before} -> {report.tokens_after} tokens"
            f" (remaining {'n/a' if ratio is None else f'{ratio:.3f}'}) in {report.wall_time_seconds:.2f}s"
        )
        return pruned, report


def prune_corpus(index: CorpusIndex, cfg: PruneConfig, max_workers=None,
                 show_progress=False) -> Tuple[CorpusIndex, PruneReport]:
    """
    Prune a whole index with one configuration.

    Args:
        index: the corpus
        cfg: pruning configuration
        max_workers: worker processes; None or 1 runs in-process

    Returns:
        tuple: (pruned CorpusIndex, PruneReport)
    """
    pruner = TokenPruner(cfg, show_progress=show_progress)
    if max_workers and max_workers > 1:
        pruner.enable_multiprocessing(max_workers)
    return pruner.prune(index)

