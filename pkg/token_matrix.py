"""
Domain types shared by every other module: token and query matrices,
dominance partitions, the pruning configuration and the pruning report.
"""

import logging
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from pruning_errors import (
    ConfigError,
    InvariantViolationError,
    NonFiniteEntryError,
    NormExceedsUnitError,
    ShapeMismatchError,
)

logger = logging.getLogger(__name__)

# Slack above 1.0 accepted for row norms (normalisation round-off)
NORM_TOLERANCE = 1e-6


def _as_matrix(vectors, dim=None):
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 0 and dim is not None:
        arr = arr.reshape(0, dim)
    if arr.ndim != 2:
        raise ShapeMismatchError(f"expected a 2-D array of vectors, got shape {arr.shape}")
    if arr.shape[1] < 1:
        raise ShapeMismatchError("embedding dimension must be at least 1")
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TokenMatrix:
    """
    A document as n token vectors of dimension d (one row per token).

    The array is copied to float64 and made read-only on construction;
    numeric invariants are checked by validate_token_matrix().
    """
    doc_id: str
    vectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vectors", _as_matrix(self.vectors))

    @classmethod
    def empty(cls, doc_id, dim):
        return cls(doc_id, np.zeros((0, dim)))

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.vectors, axis=1)

    def subset(self, indices: Sequence[int]) -> "TokenMatrix":
        """Keep only the given rows, in the given order"""
        idx = np.asarray(list(indices), dtype=np.int64)
        return TokenMatrix(self.doc_id, self.vectors[idx].reshape(len(idx), self.d))

    def __repr__(self):
        return f"TokenMatrix(doc_id={self.doc_id!r}, n={self.n}, d={self.d})"


@dataclass(frozen=True, eq=False)
class QueryMatrix:
    """A query as m >= 1 token vectors of dimension d"""
    query_id: str
    vectors: np.ndarray

    def __post_init__(self):
        arr = _as_matrix(self.vectors)
        if arr.shape[0] < 1:
            raise ShapeMismatchError("a query needs at least one token vector")
        object.__setattr__(self, "vectors", arr)

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def __repr__(self):
        return f"QueryMatrix(query_id={self.query_id!r}, m={self.m}, d={self.d})"


def _check_rows(vectors, label):
    if not np.all(np.isfinite(vectors)):
        raise NonFiniteEntryError(f"{label} contains NaN or infinite entries")
    if vectors.shape[0] == 0:
        return
    norms = np.linalg.norm(vectors, axis=1)
    worst = int(np.argmax(norms))
    if norms[worst] > 1.0 + NORM_TOLERANCE:
        raise NormExceedsUnitError(
            f"{label} row {worst} has norm {norms[worst]:.6g} > 1"
        )


def validate_token_matrix(m: TokenMatrix) -> TokenMatrix:
    """
    Check that a document matrix is finite and every row has norm <= 1.

    Returns the same object so the call can be chained.
    """
    if not isinstance(m, TokenMatrix):
        raise ShapeMismatchError(f"expected TokenMatrix, got {type(m).__name__}")
    if m.vectors.ndim != 2 or m.vectors.shape != (m.n, m.d):
        raise ShapeMismatchError(f"inconsistent shape {m.vectors.shape}")
    _check_rows(m.vectors, f"document {m.doc_id!r}")
    return m


def validate_query_matrix(q: QueryMatrix) -> QueryMatrix:
    if not isinstance(q, QueryMatrix):
        raise ShapeMismatchError(f"expected QueryMatrix, got {type(q).__name__}")
    _check_rows(q.vectors, f"query {q.query_id!r}")
    return q


class Evidence(str, Enum):
    """Why a token ended up kept or pruned"""
    SELF_MATCH = "self_match"
    LP_INFEASIBLE = "lp_infeasible"
    LP_FEASIBLE = "lp_feasible"
    ZERO_VECTOR = "zero_vector"
    DUPLICATE = "duplicate"
    NORM_BELOW_THRESHOLD = "norm_below_threshold"
    NORM_KEPT = "norm_kept"
    ARC_WINNER = "arc_winner"
    ARC_DOMINATED = "arc_dominated"


PRUNED_EVIDENCE = frozenset({
    Evidence.LP_FEASIBLE,
    Evidence.ZERO_VECTOR,
    Evidence.DUPLICATE,
    Evidence.NORM_BELOW_THRESHOLD,
    Evidence.ARC_DOMINATED,
})


@dataclass(frozen=True)
class DominancePartition:
    """
    Split of a document's token indices into kept (D+) and pruned (D-).

    evidence[i] is the tag for token i; kept and pruned are derived from it
    and are always sorted, disjoint and exhaustive.
    """
    doc_id: str
    kept: Tuple[int, ...]
    pruned: Tuple[int, ...]
    evidence: Tuple[Evidence, ...]

    def __post_init__(self):
        n = len(self.evidence)
        kept, pruned = set(self.kept), set(self.pruned)
        if kept & pruned:
            raise InvariantViolationError(self.doc_id, "kept and pruned overlap")
        if kept | pruned != set(range(n)):
            raise InvariantViolationError(self.doc_id, "kept and pruned do not cover every token")
        if list(self.kept) != sorted(kept) or list(self.pruned) != sorted(pruned):
            raise InvariantViolationError(self.doc_id, "index lists must be sorted")
        for i in self.pruned:
            if self.evidence[i] not in PRUNED_EVIDENCE:
                raise InvariantViolationError(
                    self.doc_id, f"pruned token {i} carries evidence {self.evidence[i].value}"
                )
        for i in self.kept:
            if self.evidence[i] in PRUNED_EVIDENCE:
                raise InvariantViolationError(
                    self.doc_id, f"kept token {i} carries evidence {self.evidence[i].value}"
                )

    @classmethod
    def from_evidence(cls, doc_id, evidence: Sequence[Evidence]) -> "DominancePartition":
        evidence = tuple(Evidence(e) for e in evidence)
        kept = tuple(i for i, e in enumerate(evidence) if e not in PRUNED_EVIDENCE)
        pruned = tuple(i for i, e in enumerate(evidence) if e in PRUNED_EVIDENCE)
        return cls(doc_id, kept, pruned, evidence)

    @property
    def n(self) -> int:
        return len(self.evidence)

    def evidence_counts(self) -> Dict[str, int]:
        counts = {}
        for e in self.evidence:
            counts[e.value] = counts.get(e.value, 0) + 1
        return counts

    def to_dict(self):
        return {
            "doc_id": self.doc_id,
            "kept": list(self.kept),
            "pruned": list(self.pruned),
            "evidence": [e.value for e in self.evidence],
        }


class Strategy(str, Enum):
    LP = "lp"
    NORM = "norm"


@dataclass(frozen=True)
class PruneConfig:
    """
    Pruning settings.

    Args:
        strategy: LP (dominance tests on the SVD-reduced document) or NORM
        theta_lp: singular-value coverage kept by the reduction, in (0, 1]
        theta_n: norm threshold, in [0, 1]; tokens with norm < theta_n go
        lp_feas_tol: feasibility tolerance handed to the LP solver
        svd_tol: rotation threshold for the Jacobi SVD, also the zero-norm cutoff
        rng_seed: seed for every sampled quantity
    """
    strategy: Strategy = Strategy.LP
    theta_lp: float = 1.0
    theta_n: float = 0.0
    lp_feas_tol: float = 1e-9
    svd_tol: float = 1e-12
    rng_seed: int = 0

    def __post_init__(self):
        try:
            object.__setattr__(self, "strategy", Strategy(self.strategy))
        except ValueError:
            raise ConfigError(f"unknown strategy {self.strategy!r}") from None
        if not (0.0 < self.theta_lp <= 1.0):
            raise ConfigError(f"theta_lp must be in (0, 1], got {self.theta_lp}")
        if not (0.0 <= self.theta_n <= 1.0):
            raise ConfigError(f"theta_n must be in [0, 1], got {self.theta_n}")
        if not self.lp_feas_tol > 0:
            raise ConfigError("lp_feas_tol must be positive")
        if not self.svd_tol > 0:
            raise ConfigError("svd_tol must be positive")
        if int(self.rng_seed) != self.rng_seed or self.rng_seed < 0:
            raise ConfigError("rng_seed must be an unsigned integer")

    def to_dict(self):
        d = asdict(self)
        d["strategy"] = self.strategy.value
        return d


@dataclass(frozen=True)
class DocPruneStats:
    doc_id: str
    n_before: int
    n_after: int
    evidence: Dict[str, int] = field(default_factory=dict)


@dataclass
class PruneReport:
    """Per-document and corpus-level pruning statistics"""
    per_doc: List[DocPruneStats]
    wall_time_seconds: float
    score_delta_max: Optional[float] = None
    config: Optional[Dict] = None

    @property
    def tokens_before(self) -> int:
        return sum(s.n_before for s in self.per_doc)

    @property
    def tokens_after(self) -> int:
        return sum(s.n_after for s in self.per_doc)

    @property
    def remaining_ratio(self) -> Optional[float]:
        total = self.tokens_before
        if total == 0:
            return None
        return self.tokens_after / total

    def _evidence_total(self, tags):
        return sum(s.evidence.get(t.value, 0) for s in self.per_doc for t in tags)

    @property
    def self_match_ratio(self) -> Optional[float]:
        total = self.tokens_before
        if total == 0:
            return None
        return self._evidence_total([Evidence.SELF_MATCH]) / total

    @property
    def lp_tests(self) -> int:
        return self._evidence_total([Evidence.LP_FEASIBLE, Evidence.LP_INFEASIBLE])

    def to_dict(self):
        return {
            "documents": len(self.per_doc),
            "tokens_before": self.tokens_before,
            "tokens_after": self.tokens_after,
            "remaining_ratio": self.remaining_ratio,
            "self_match_ratio": self.self_match_ratio,
            "lp_tests": self.lp_tests,
            "score_delta_max": self.score_delta_max,
            "wall_time_seconds": self.wall_time_seconds,
            "config": self.config,
            "per_doc": [
                {"doc_id": s.doc_id, "n_before": s.n_before, "n_after": s.n_after,
                 "evidence": dict(s.evidence)}
                for s in self.per_doc
            ],
        }
