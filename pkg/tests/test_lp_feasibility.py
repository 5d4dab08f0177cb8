#!/usr/bin/env python3

import os
import sys
import itertools
import unittest

import numpy as np
from scipy.optimize import linprog

# Add parent directory to path to enable imports
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from lp_feasibility import (
    FeasibilityStatus,
    PhaseOneSimplex,
    is_valid_certificate,
    is_valid_witness,
    lp_feasible,
)
from pruning_errors import IterationLimitError, NonFiniteEntryError, ShapeMismatchError

TOL = 1e-9


def columns(*cols):
    return np.array(cols, dtype=np.float64).T


def random_instance(rng, max_k=4, max_n=6):
    k = int(rng.integers(1, max_k + 1))
    n = int(rng.integers(1, max_n + 1))
    a = rng.standard_normal((k, n))
    if rng.random() < 0.5:
        b = a @ rng.exponential(size=n)
    else:
        b = rng.standard_normal(k)
    return a, b


def grid_feasible(a, b, values):
    n = a.shape[1]
    for x in itertools.product(values, repeat=n):
        if np.max(np.abs(a @ np.array(x) - b)) <= 1e-12:
            return True
    return False


def sweep_certificate(a, b, steps=3600):
    k = a.shape[0]
    if k == 1:
        candidates = [np.array([1.0]), np.array([-1.0])]
    else:
        phis = np.linspace(0.0, 2 * np.pi, steps, endpoint=False)
        candidates = np.stack([np.cos(phis), np.sin(phis)], axis=1)
    for y in candidates:
        if np.all(a.T @ y >= 1e-9) and b @ y < -1e-9:
            return True
    return False


class TestHandExamples(unittest.TestCase):

    def test_feasible_two_by_two(self):
        res = lp_feasible(columns((-0.55, 0.45), (0.45, -0.55)), np.array([-0.45, -0.45]), TOL)
        self.assertIs(res.status, FeasibilityStatus.FEASIBLE)
        self.assertTrue(res.feasible)
        np.testing.assert_allclose(res.witness_x, [4.5, 4.5], atol=1e-6)
        self.assertIsNone(res.certificate_y)

    def test_infeasible_two_by_two(self):
        a = columns((-0.5, 0.5), (0.5, -0.5))
        b = np.array([-0.5, -0.5])
        res = lp_feasible(a, b, TOL)
        self.assertIs(res.status, FeasibilityStatus.INFEASIBLE)
        np.testing.assert_allclose(res.certificate_y, [1.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(a.T @ res.certificate_y, [0.0, 0.0], atol=1e-12)
        self.assertAlmostEqual(b @ res.certificate_y, -1.0)
        self.assertIsNone(res.witness_x)

    def test_identity_zero_rhs(self):
        res = lp_feasible(np.eye(2), np.zeros(2), TOL)
        self.assertTrue(res.feasible)
        np.testing.assert_allclose(res.witness_x, [0.0, 0.0])

    def test_no_columns(self):
        self.assertTrue(lp_feasible(np.zeros((2, 0)), np.zeros(2), TOL).feasible)
        res = lp_feasible(np.zeros((2, 0)), np.array([0.3, 0.0]), TOL)
        self.assertFalse(res.feasible)
        self.assertTrue(is_valid_certificate(np.zeros((2, 0)), np.array([0.3, 0.0]), res.certificate_y, TOL))

    def test_no_rows(self):
        res = lp_feasible(np.zeros((0, 3)), np.zeros(0), TOL)
        self.assertTrue(res.feasible)
        self.assertEqual(res.witness_x.shape, (3,))

    def test_bad_input(self):
        with self.assertRaises(ShapeMismatchError):
            lp_feasible(np.eye(2), np.zeros(3), TOL)
        with self.assertRaises(NonFiniteEntryError):
            lp_feasible(np.array([[np.nan]]), np.zeros(1), TOL)

    def test_iteration_cap(self):
        solver = PhaseOneSimplex(TOL)
        solver.ITERATION_FACTOR = 0
        with self.assertRaises(IterationLimitError):
            solver.solve(np.eye(2), np.array([1.0, 1.0]))


class TestFarkasAlternative(unittest.TestCase):
    """Exactly one of witness and certificate, each passing its check"""

    def test_exactly_one_on_random_instances(self):
        rng = np.random.default_rng(2024)
        counts = {FeasibilityStatus.FEASIBLE: 0, FeasibilityStatus.INFEASIBLE: 0}
        for _ in range(5000):
            a, b = random_instance(rng)
            res = lp_feasible(a, b, TOL)
            counts[res.status] += 1
            if res.feasible:
                self.assertIsNone(res.certificate_y)
                self.assertTrue(is_valid_witness(a, b, res.witness_x, TOL))
            else:
                self.assertIsNone(res.witness_x)
                self.assertTrue(is_valid_certificate(a, b, res.certificate_y, TOL))
        self.assertGreater(counts[FeasibilityStatus.FEASIBLE], 0)
        self.assertGreater(counts[FeasibilityStatus.INFEASIBLE], 0)
        print(f"✓ Farkas alternative: {counts[FeasibilityStatus.FEASIBLE]} feasible, "
              f"{counts[FeasibilityStatus.INFEASIBLE]} infeasible")

    def test_status_matches_reference_solver(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            a, b = random_instance(rng)
            ref = linprog(np.zeros(a.shape[1]), A_eq=a, b_eq=b,
                          bounds=[(0, None)] * a.shape[1], method="highs")
            self.assertIn(ref.status, (0, 2))
            self.assertEqual(lp_feasible(a, b, TOL).feasible, ref.status == 0)

    def test_scaling_invariance(self):
        rng = np.random.default_rng(99)
        for _ in range(300):
            a, b = random_instance(rng)
            c = float(rng.uniform(0.1, 10.0))
            self.assertEqual(lp_feasible(a, b, TOL).status, lp_feasible(c * a, c * b, TOL).status)

    def test_brute_force_oracle_on_tiny_instances(self):
        rng = np.random.default_rng(31)
        grid = [0.0, 0.5, 1.0, 1.5, 2.0]
        decided = 0
        for _ in range(400):
            k = int(rng.integers(1, 3))
            n = int(rng.integers(1, 4))
            a = rng.integers(-3, 4, size=(k, n)) / 2.0
            if rng.random() < 0.5:
                b = a @ rng.choice(grid, size=n)
            else:
                b = rng.integers(-3, 4, size=k) / 2.0
            res = lp_feasible(a, b, TOL)
            if grid_feasible(a, b, grid):
                self.assertTrue(res.feasible, f"A={a.tolist()} b={b.tolist()}")
                decided += 1
            elif sweep_certificate(a, b):
                self.assertFalse(res.feasible, f"A={a.tolist()} b={b.tolist()}")
                decided += 1
        self.assertGreater(decided, 250)


class TestDegenerateInstances(unittest.TestCase):
    """Rank-deficient rows, tiny columns and right-hand sides near the cone boundary"""

    def assertExactlyOne(self, a, b, res):
        if res.feasible:
            self.assertIsNone(res.certificate_y)
            self.assertTrue(is_valid_witness(a, b, res.witness_x, TOL), f"A={a.tolist()} b={b.tolist()}")
        else:
            self.assertIsNone(res.witness_x)
            self.assertTrue(is_valid_certificate(a, b, res.certificate_y, TOL), f"A={a.tolist()} b={b.tolist()}")

    def test_column_without_admissible_pivot_is_skipped(self):
        # Bland's rule would pick column 0 first, whose only entry is below tol
        a = np.array([[1e-10, 0.5]])
        b = np.array([1.0])
        res = lp_feasible(a, b, TOL)
        self.assertTrue(res.feasible)
        np.testing.assert_allclose(res.witness_x, [0.0, 2.0], atol=1e-12)

    def test_dependent_rows_with_tiny_column(self):
        a = np.array([[1e-10, 0.5], [2e-10, 1.0]])
        res = lp_feasible(a, np.array([1.0, 2.0]), TOL)
        self.assertTrue(res.feasible)
        self.assertExactlyOne(a, np.array([1.0, 2.0]), res)

    def test_near_boundary_right_hand_sides(self):
        rng = np.random.default_rng(11)
        counts = {FeasibilityStatus.FEASIBLE: 0, FeasibilityStatus.INFEASIBLE: 0}
        for delta in (1e-6, 1e-7, 1e-8, 1e-9, 1e-10):
            for _ in range(1000):
                k = int(rng.integers(1, 5))
                n = int(rng.integers(1, 7))
                a = rng.standard_normal((k, n))
                b = a @ rng.exponential(size=n) + delta * rng.standard_normal(k)
                res = lp_feasible(a, b, TOL)
                counts[res.status] += 1
                self.assertExactlyOne(a, b, res)
        print(f"✓ near-boundary instances: {counts[FeasibilityStatus.FEASIBLE]} feasible, "
              f"{counts[FeasibilityStatus.INFEASIBLE]} infeasible")

    def test_rank_deficient_rows(self):
        rng = np.random.default_rng(12)
        for _ in range(1000):
            k = int(rng.integers(2, 9))
            n = int(rng.integers(1, 13))
            r = int(rng.integers(1, k))
            a = rng.standard_normal((k, r)) @ rng.standard_normal((r, n))
            in_cone = rng.random() < 0.5
            if in_cone:
                b = a @ rng.exponential(size=n)
            else:
                b = rng.standard_normal(k)
            res = lp_feasible(a, b, TOL)
            self.assertExactlyOne(a, b, res)
            # a generic b lies outside the rank-r column space
            self.assertEqual(res.feasible, in_cone, f"A={a.tolist()} b={b.tolist()}")

    def test_certificate_scaled_to_unit_objective(self):
        solver = PhaseOneSimplex(TOL)
        a = np.array([[1.0], [0.0]])
        y = solver._normalise_certificate(a, np.array([0.0, -1.0]), np.array([0.0, 2.0]))
        np.testing.assert_allclose(y, [0.0, 1.0])

    def test_certificate_balanced_when_objective_is_tiny(self):
        solver = PhaseOneSimplex(TOL)
        a = np.array([[1.0], [0.0]])
        b = np.array([0.0, -1.0])
        # A^T y = -1e-12, b^T y = -2e-9: dividing by 2e-9 would leave A^T y at -5e-4
        y = solver._normalise_certificate(a, b, np.array([-1e-12, 2e-9]))
        self.assertIsNotNone(y)
        self.assertTrue(is_valid_certificate(a, b, y, TOL))

    def test_certificate_rejected_when_residual_dominates(self):
        solver = PhaseOneSimplex(TOL)
        a = np.array([[1.0], [0.0]])
        b = np.array([0.0, -1.0])
        self.assertIsNone(solver._normalise_certificate(a, b, np.array([-1.0, 0.5])))
        self.assertIsNone(solver._normalise_certificate(a, b, np.array([0.0, -1.0])))


if __name__ == "__main__":
    unittest.main()
