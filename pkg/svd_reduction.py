"""
Singular value decomposition of a document and the rank reduction used to
shrink the dominance LPs.

The token matrix is factored as X = D^T = U diag(sigma) V^T with U (d x m),
V (n x m) and m = min(n, d). Dominance depends on the tokens only through
their inner products with queries, and those factor through U^T q, so the
tests can run on the columns of diag(sigma_k) V_k^T instead of the d x n
matrix. Truncating to the leading k singular values makes the test
approximate.
"""

import logging
from dataclasses import dataclass

import numpy as np

from pruning_errors import ConfigError, ConvergenceFailureError, EmptyDocumentError
from token_matrix import TokenMatrix

logger = logging.getLogger(__name__)

MAX_SWEEPS = 60

# Rotation threshold never goes below this, whatever tolerance is requested
MIN_ROTATION_TOLERANCE = 1e-15


@dataclass(frozen=True, eq=False)
class SvdFactors:
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    @property
    def m(self) -> int:
        return self.sigma.shape[0]

    def reconstruct(self, k=None) -> np.ndarray:
        """U_k diag(sigma_k) V_k^T as a d x n array (all m terms by default)"""
        k = self.m if k is None else k
        return (self.u[:, :k] * self.sigma[:k]) @ self.v[:, :k].T


def _complete_columns(q, normalised, needed):
    """Fill the columns flagged False in `normalised` with an orthonormal complement"""
    p = q.shape[0]
    good = q[:, normalised]
    if good.shape[1] == 0:
        extra = np.eye(p)[:, :needed]
    else:
        full, _ = np.linalg.qr(good, mode="complete")
        extra = full[:, good.shape[1]:good.shape[1] + needed]
    out = q.copy()
    out[:, ~normalised] = extra
    return out


def _one_sided_jacobi(a, tol):
    """
    Orthogonalise the columns of a (p x q, q <= p) by plane rotations.

    Returns:
        tuple: (W, J) with a @ J = W, J orthogonal and W's columns mutually
        orthogonal
    """
    w = a.copy()
    cols = w.shape[1]
    j = np.eye(cols)
    threshold = max(tol, MIN_ROTATION_TOLERANCE)
    negligible = (tol * np.linalg.norm(a)) ** 2

    for sweep in range(MAX_SWEEPS):
        rotated = False
        for p in range(cols - 1):
            for q in range(p + 1, cols):
                alpha = w[:, p] @ w[:, p]
                beta = w[:, q] @ w[:, q]
                if alpha <= negligible or beta <= negligible:
                    continue
                gamma = w[:, p] @ w[:, q]
                if abs(gamma) <= threshold * np.sqrt(alpha * beta):
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                wp, wq = w[:, p].copy(), w[:, q].copy()
                w[:, p] = c * wp - s * wq
                w[:, q] = s * wp + c * wq
                jp, jq = j[:, p].copy(), j[:, q].copy()
                j[:, p] = c * jp - s * jq
                j[:, q] = s * jp + c * jq
                rotated = True
        if not rotated:
            logger.debug(f"Jacobi SVD converged after {sweep + 1} sweeps ({a.shape[0]}x{cols})")
            return w, j
    raise ConvergenceFailureError(
        f"Jacobi SVD did not converge within {MAX_SWEEPS} sweeps ({a.shape[0]}x{cols})"
    )


def svd(doc: TokenMatrix, tol: float = 1e-12) -> SvdFactors:
    """
    Thin SVD of a document by one-sided Jacobi rotations.

    Args:
        doc: document with n >= 1 tokens
        tol: off-diagonal rotation threshold; columns with norm below
            tol * ||D||_F count as zero

    Returns:
        SvdFactors: sigma sorted non-increasing, U and V orthonormal

    Raises:
        EmptyDocumentError, ConvergenceFailureError
    """
    if doc.n == 0:
        raise EmptyDocumentError(f"document {doc.doc_id!r} has no tokens to factor")
    x = doc.vectors.T
    d, n = x.shape
    transpose = n > d
    # rotate the smaller dimension
    w, j = _one_sided_jacobi(x.T if transpose else x, tol)

    sigma = np.linalg.norm(w, axis=0)
    cutoff = tol * np.linalg.norm(x)
    normalised = sigma > cutoff
    left = np.zeros_like(w)
    left[:, normalised] = w[:, normalised] / sigma[normalised]
    sigma = np.where(normalised, sigma, 0.0)
    if not normalised.all():
        left = _complete_columns(left, normalised, int((~normalised).sum()))

    u, v = (j, left) if transpose else (left, j)

    order = np.argsort(-sigma, kind="stable")
    sigma, u, v = sigma[order], u[:, order], v[:, order]

    # sign convention: the largest-magnitude entry of each U column is positive
    pivots = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[pivots, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return SvdFactors(u=u * signs, sigma=sigma, v=v * signs)


def select_rank(sigma, theta_lp: float) -> int:
    """
    Smallest k whose leading singular values cover a theta_lp share of the
    total singular value mass; 0 when every singular value is zero.
    """
    if not (0.0 < theta_lp <= 1.0):
        raise ConfigError(f"theta_lp must be in (0, 1], got {theta_lp}")
    sigma = np.asarray(sigma, dtype=np.float64)
    total = sigma.sum()
    if total <= 0.0:
        return 0
    coverage = np.cumsum(sigma) / total
    return int(np.argmax(coverage >= theta_lp - 1e-12)) + 1


def reduced_document(doc: TokenMatrix, theta_lp: float, tol: float = 1e-12) -> np.ndarray:
    """
    Rank-k stand-in for a document, one column per token.

    Returns:
        np.ndarray: k x n array diag(sigma_1..sigma_k) V_k^T whose column inner
        products approximate the token Gram matrix (exactly at full rank)
    """
    if doc.n == 0:
        return np.zeros((0, 0))
    factors = svd(doc, tol)
    k = select_rank(factors.sigma, theta_lp)
    logger.debug(f"{doc.doc_id}: rank {k} of {factors.m} at theta_lp={theta_lp}")
    return factors.sigma[:k, None] * factors.v[:, :k].T
