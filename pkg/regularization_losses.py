"""
Regularizers that push an encoder towards prunable document representations,
and the retrieval loss they are combined with.

All functions take the document as an n x d TokenMatrix and return the
loss value together with its gradient with respect to the n x d array of
token vectors, when that gradient exists. The weight alpha is applied by the
caller through final_loss().
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.special import log_softmax

from pruning_errors import (
    ConfigError,
    EmptyDocumentError,
    GradientAbsentError,
    NonFiniteEntryError,
    ShapeMismatchError,
    TooFewTokensError,
)
from svd_reduction import svd
from token_matrix import TokenMatrix

logger = logging.getLogger(__name__)

# Shields the 1 / ||d|| factor of the similarity loss
SIM_EPSILON = 0.01


@dataclass(frozen=True, eq=False)
class LossValue:
    value: float
    gradient: Optional[np.ndarray] = None

    @property
    def has_gradient(self) -> bool:
        return self.gradient is not None


def nuclear_loss(doc: TokenMatrix, tol: float = 1e-12) -> LossValue:
    """
    Sum of singular values divided by min(n, d).

    Pushing singular values to zero lowers the rank, which makes more tokens
    dominated once the document is reduced. The gradient V U^T / min(n, d)
    is only returned for simple spectra (distinct singular values above tol);
    otherwise the subdifferential is a set and no gradient is given.
    """
    factors = svd(doc, tol)
    m = factors.m
    value = float(factors.sigma.sum() / m)
    sigma = factors.sigma
    simple = bool(np.all(sigma > tol) and np.all(np.abs(np.diff(sigma)) > tol))
    gradient = (factors.v @ factors.u.T) / m if simple else None
    return LossValue(value, gradient)


def sim_loss(doc: TokenMatrix, epsilon: float = SIM_EPSILON) -> LossValue:
    """
    Similarity regularizer.

        L = -1/(n(n-1)) sum_i (1 - |d_i|) / (|d_i| + eps) sum_{j != i} [d_i . d_j]+

    Low-norm tokens are rewarded for pointing the same way as other tokens,
    where they get dominated. The ReLU has subgradient 0 at exactly 0; zero
    rows get a zero gradient.
    """
    n = doc.n
    if n < 2:
        raise TooFewTokensError(f"similarity loss needs at least 2 tokens, document {doc.doc_id!r} has {n}")
    vectors = doc.vectors
    gram = vectors @ vectors.T
    np.fill_diagonal(gram, 0.0)
    positive = gram > 0
    s = np.where(positive, gram, 0.0).sum(axis=1)

    r = np.linalg.norm(vectors, axis=1)
    w = (1.0 - r) / (r + epsilon)
    c = 1.0 / (n * (n - 1))
    value = -c * float(np.dot(w, s))

    dw = -(1.0 + epsilon) / (r + epsilon) ** 2
    nonzero = r > 0
    radial = np.zeros(n)
    radial[nonzero] = dw[nonzero] * s[nonzero] / r[nonzero]
    mask = positive.astype(np.float64)
    gradient = -c * (
        radial[:, None] * vectors
        + w[:, None] * (mask @ vectors)
        + mask @ (w[:, None] * vectors)
    )
    gradient[~nonzero] = 0.0
    return LossValue(value, gradient)


def l1_loss(doc: TokenMatrix) -> LossValue:
    """Mean L1 norm of the tokens; gradient sign(D) / n"""
    n = doc.n
    if n == 0:
        raise EmptyDocumentError(f"document {doc.doc_id!r} has no tokens")
    value = float(np.abs(doc.vectors).sum() / n)
    return LossValue(value, np.sign(doc.vectors) / n)


def _scores(values, label):
    arr = np.asarray(values, dtype=np.float64).ravel()
    if not np.all(np.isfinite(arr)):
        raise NonFiniteEntryError(f"{label} contains NaN or infinite scores")
    return arr


def ir_loss(student_hard, teacher_hard, student_all) -> float:
    """
    Distillation plus cross-entropy retrieval loss.

    Args:
        student_hard: (positive, hard negative) scores from the model being trained
        teacher_hard: the same pair scored by the teacher model
        student_all: scores of all candidates, positive first

    Returns:
        float: KL(student || teacher) over the hard pair plus the negative
        log-likelihood of the positive among all candidates
    """
    s_hard = _scores(student_hard, "student_hard")
    t_hard = _scores(teacher_hard, "teacher_hard")
    s_all = _scores(student_all, "student_all")
    if s_hard.shape != (2,) or t_hard.shape != (2,):
        raise ShapeMismatchError("hard scores must be (positive, negative) pairs")
    if s_all.size == 0:
        raise ShapeMismatchError("student_all needs at least the positive score")

    log_ps = log_softmax(s_hard)
    log_pt = log_softmax(t_hard)
    kl = float(np.sum(np.exp(log_ps) * (log_ps - log_pt)))
    ce = float(-log_softmax(s_all)[0])
    return kl + ce


def final_loss(ir_value: float, reg_value: float, alpha: float) -> float:
    """Training objective: IR loss plus alpha times one regularizer"""
    if not np.isfinite(alpha) or alpha < 0:
        raise ConfigError(f"alpha must be a finite nonnegative weight, got {alpha}")
    return float(ir_value + alpha * reg_value)


LOSS_FUNCTIONS = {
    "nuclear": nuclear_loss,
    "sim": sim_loss,
    "l1": l1_loss,
}


def finite_diff_check(loss: Union[str, Callable[[TokenMatrix], LossValue]], doc: TokenMatrix,
                      step: float = 1e-5) -> float:
    """
    Compare an analytic gradient with central differences.

    Args:
        loss: a name from LOSS_FUNCTIONS or a loss callable
        doc: evaluation point, away from kinks of the loss
        step: finite-difference step

    Returns:
        float: max over entries of |fd - analytic| / max(|analytic|, |fd|, 1e-6)

    Raises:
        GradientAbsentError: the loss gives no gradient at doc
    """
    fn = LOSS_FUNCTIONS[loss] if isinstance(loss, str) else loss
    base = fn(doc)
    if base.gradient is None:
        raise GradientAbsentError(f"{getattr(fn, '__name__', fn)} has no gradient at document {doc.doc_id!r}")

    worst = 0.0
    for idx in np.ndindex(*doc.vectors.shape):
        plus = np.array(doc.vectors)
        minus = np.array(doc.vectors)
        plus[idx] += step
        minus[idx] -= step
        fd = (fn(TokenMatrix(doc.doc_id, plus)).value - fn(TokenMatrix(doc.doc_id, minus)).value) / (2 * step)
        an = base.gradient[idx]
        worst = max(worst, abs(fd - an) / max(abs(an), abs(fd), 1e-6))
    logger.debug(f"finite-difference check on {doc.doc_id}: max relative error {worst:.3e}")
    return worst
