"""
Feasibility of {x >= 0 : A x = b} by the phase-1 simplex method.

Exactly one of two things is returned: a nonnegative witness x with
A x = b, or a Farkas certificate y with A^T y >= 0 and b^T y < 0.
The certificate is read off the phase-1 dual values at the optimum and
scaled so that b^T y = -1.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import nnls

from pruning_errors import (
    IterationLimitError,
    NonFiniteEntryError,
    NumericalBreakdownError,
    ShapeMismatchError,
)

logger = logging.getLogger(__name__)


class FeasibilityStatus(str, Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True, eq=False)
class FeasibilityResult:
    status: FeasibilityStatus
    witness_x: Optional[np.ndarray] = None
    certificate_y: Optional[np.ndarray] = None
    phase1_value: float = 0.0
    iterations: int = 0

    @property
    def feasible(self) -> bool:
        return self.status is FeasibilityStatus.FEASIBLE


def _scale(b, tol):
    return tol * (1.0 + (np.max(np.abs(b)) if b.size else 0.0))


def is_valid_witness(a, b, x, tol) -> bool:
    """||A x - b||_inf <= tol (1 + ||b||_inf) and min(x) >= -tol"""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x.size and x.min() < -tol:
        return False
    if b.size == 0:
        return True
    return bool(np.max(np.abs(a @ x - b)) <= _scale(b, tol))


def is_valid_certificate(a, b, y, tol) -> bool:
    """A^T y >= -tol componentwise and b^T y <= -tol"""
    a = np.asarray(a, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    g = a.T @ y
    if g.size and g.min() < -tol:
        return False
    return bool(np.dot(b, y) <= -tol)


class PhaseOneSimplex:
    """
    Tableau phase-1 simplex with Bland's anti-cycling rule.

    Rows with negative right-hand side are flipped, one artificial variable
    is added per row and their sum is minimised. The system is feasible iff
    the optimum is within tol * (1 + ||b||_inf) of zero.
    """

    # Iteration cap is ITERATION_FACTOR * (n + k)
    ITERATION_FACTOR = 50

    def __init__(self, tol=1e-9):
        """
        Args:
            tol (float): feasibility tolerance; also the smallest pivot accepted
        """
        self.tol = tol
        self.cost_tol = tol * 1e-3

    def solve(self, a, b) -> FeasibilityResult:
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.ndim != 2 or b.ndim != 1 or a.shape[0] != b.shape[0]:
            raise ShapeMismatchError(f"A has shape {a.shape}, b has shape {b.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise NonFiniteEntryError("LP data contains NaN or infinite entries")

        k, n = a.shape
        if k == 0:
            return FeasibilityResult(FeasibilityStatus.FEASIBLE, witness_x=np.zeros(n))

        signs = np.where(b < 0, -1.0, 1.0)
        width = n + k
        tableau = np.zeros((k + 1, width + 1))
        tableau[:k, :n] = a * signs[:, None]
        tableau[:k, n:width] = np.eye(k)
        tableau[:k, -1] = b * signs
        # objective row: reduced costs of sum(artificials), last entry = -value
        tableau[k, :n] = -tableau[:k, :n].sum(axis=0)
        tableau[k, -1] = -tableau[:k, -1].sum()
        basis = list(range(n, width))

        iterations = self._iterate(tableau, basis, k, n)

        rhs = tableau[:k, -1]
        phase1_value = float(sum(rhs[i] for i, col in enumerate(basis) if col >= n))
        threshold = _scale(b, self.tol)
        logger.debug(f"phase 1 finished after {iterations} pivots, value {phase1_value:.3e}")

        # the phase-1 value picks the alternative tried first; near the
        # threshold rounding can defeat it, so the other one is tried next
        if phase1_value <= threshold:
            order = (self._witness, self._certificate)
        else:
            order = (self._certificate, self._witness)
        for attempt in order:
            found = attempt(a, b, tableau, basis, signs)
            if found is not None:
                status, vector = found
                return FeasibilityResult(
                    status,
                    witness_x=vector if status is FeasibilityStatus.FEASIBLE else None,
                    certificate_y=vector if status is FeasibilityStatus.INFEASIBLE else None,
                    phase1_value=phase1_value, iterations=iterations,
                )
        raise NumericalBreakdownError(
            f"phase 1 value {phase1_value:.3e} (threshold {threshold:.3e}) but neither a "
            f"witness nor a Farkas certificate passes its check (k={k}, n={n})"
        )

    def _iterate(self, tableau, basis, k, n):
        width = n + k
        max_iterations = self.ITERATION_FACTOR * width
        for iteration in range(max_iterations):
            pivot = self._choose_pivot(tableau, basis, k, width)
            if pivot is None:
                return iteration
            row, col = pivot
            self._pivot(tableau, row, col)
            basis[row] = col
            rhs = tableau[:k, -1]
            rhs[(rhs < 0.0) & (rhs > -self.tol)] = 0.0
        raise IterationLimitError(
            f"phase 1 did not terminate within {max_iterations} pivots (k={k}, n={n})"
        )

    def _choose_pivot(self, tableau, basis, k, width):
        """
        Bland's rule over the columns that admit a pivot.

        A column with negative reduced cost but no entry above tol would be an
        unbounded ray of a problem bounded below by zero, i.e. rounding noise
        (typical once the constraint rows are linearly dependent). Such
        columns are passed over; the phase-1 value decides the outcome.

        Returns:
            tuple or None: (row, col), None at the optimum
        """
        costs = tableau[k, :width]
        for col in np.flatnonzero(costs < -self.cost_tol):
            column = tableau[:k, col]
            rows = np.flatnonzero(column > self.tol)
            if rows.size == 0:
                continue
            ratios = np.maximum(tableau[rows, -1], 0.0) / column[rows]
            best = ratios.min()
            tied = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
            return int(min(tied, key=lambda r: basis[r])), int(col)
        return None

    @staticmethod
    def _pivot(tableau, row, col):
        tableau[row, :] /= tableau[row, col]
        factors = tableau[:, col].copy()
        factors[row] = 0.0
        tableau -= np.outer(factors, tableau[row, :])

    def _witness(self, a, b, tableau, basis, signs):
        """
        Nonnegative x with A x = b, from the final basis.

        Falls back to re-solving the basic columns on the original data and
        then to nonnegative least squares over all columns.
        """
        n = a.shape[1]
        x = np.zeros(n)
        for i, col in enumerate(basis):
            if col < n:
                x[col] = tableau[i, -1]
        if x.size and x.min() >= -self.tol:
            x = np.maximum(x, 0.0)
            if is_valid_witness(a, b, x, self.tol):
                return FeasibilityStatus.FEASIBLE, x

        cols = [c for c in basis if c < n]
        refined = np.zeros(n)
        if cols:
            sol, *_ = np.linalg.lstsq(a[:, cols], b, rcond=None)
            refined[cols] = sol
        if refined.size and refined.min() >= -self.tol:
            refined = np.maximum(refined, 0.0)
        if is_valid_witness(a, b, refined, self.tol):
            logger.debug("witness recovered by least-squares refinement")
            return FeasibilityStatus.FEASIBLE, refined

        if n:
            try:
                x, _ = nnls(a, b)
            except RuntimeError:
                return None
            if is_valid_witness(a, b, x, self.tol):
                logger.debug("witness recovered by nonnegative least squares")
                return FeasibilityStatus.FEASIBLE, x
        return None

    def _certificate(self, a, b, tableau, basis, signs):
        """
        Farkas certificate from the phase-1 duals, normalised to b^T y = -1.

        The duals are read from the tableau and, failing that, recomputed by
        solving the final basis against the original data.
        """
        k, n = a.shape
        width = n + k
        # artificial column i has cost 1, so its reduced cost is 1 - u_i
        candidates = [1.0 - tableau[k, n:width]]
        full = np.hstack([a * signs[:, None], np.eye(k)])
        costs = np.array([1.0 if col >= n else 0.0 for col in basis])
        solved, *_ = np.linalg.lstsq(full[:, basis].T, costs, rcond=None)
        candidates.append(solved)

        for duals in candidates:
            y = self._normalise_certificate(a, b, -signs * duals)
            if y is not None:
                return FeasibilityStatus.INFEASIBLE, y
        return None

    def _normalise_certificate(self, a, b, y):
        """
        Scale y so that b^T y = -1, or, when A^T y carries a small negative
        residual e relative to p = -b^T y, by tol / sqrt(e p) so that both
        sides of the certificate check hold. Returns None when e > p.
        """
        if not np.all(np.isfinite(y)):
            return None
        p = -float(np.dot(b, y))
        if not p > 0.0:
            return None
        g = a.T @ y
        e = max(0.0, -float(g.min())) if g.size else 0.0
        if e <= self.tol * p:
            y = y / p
        else:
            y = y * (self.tol / np.sqrt(e * p))
        return y if is_valid_certificate(a, b, y, self.tol) else None


def lp_feasible(a, b, tol=1e-9) -> FeasibilityResult:
    """
    Decide whether A x = b has a solution with x >= 0.

    Args:
        a: k x n array
        b: vector of length k
        tol (float): feasibility tolerance, relative to 1 + ||b||_inf

    Returns:
        FeasibilityResult: witness_x when feasible, certificate_y otherwise

    Raises:
        NumericalBreakdownError, IterationLimitError
    """
    return PhaseOneSimplex(tol).solve(a, b)
