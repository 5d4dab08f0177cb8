#!/usr/bin/env python3

import os
import sys
import unittest

import numpy as np

# Add parent directory to path to enable imports
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from pruning_errors import (
    ConfigError,
    InvariantViolationError,
    NonFiniteEntryError,
    NormExceedsUnitError,
    PruningFailedError,
    ShapeMismatchError,
)
from token_matrix import (
    DocPruneStats,
    DominancePartition,
    Evidence,
    PruneConfig,
    PruneReport,
    QueryMatrix,
    Strategy,
    TokenMatrix,
    validate_query_matrix,
    validate_token_matrix,
)


class TestValidation(unittest.TestCase):
    """Numeric invariants of token and query matrices"""

    def test_unit_rows_accepted(self):
        m = TokenMatrix("a", [[1, 0], [0, 1]])
        self.assertIs(validate_token_matrix(m), m)
        self.assertEqual((m.n, m.d), (2, 2))

    def test_norm_above_one_rejected(self):
        with self.assertRaises(NormExceedsUnitError):
            validate_token_matrix(TokenMatrix("a", [[2, 0]]))

    def test_slack_above_one_accepted(self):
        validate_token_matrix(TokenMatrix("a", [[1.0 + 5e-7, 0.0]]))

    def test_empty_document_accepted(self):
        m = validate_token_matrix(TokenMatrix("empty", np.zeros((0, 4))))
        self.assertEqual(m.n, 0)
        self.assertEqual(m.d, 4)

    def test_non_finite_rejected(self):
        with self.assertRaises(NonFiniteEntryError):
            validate_token_matrix(TokenMatrix("a", [[np.nan, 0.0]]))
        with self.assertRaises(NonFiniteEntryError):
            validate_query_matrix(QueryMatrix("q", [[np.inf, 0.0]]))

    def test_bad_shapes(self):
        with self.assertRaises(ShapeMismatchError):
            TokenMatrix("a", [1.0, 0.0])
        with self.assertRaises(ShapeMismatchError):
            TokenMatrix("a", np.zeros((3, 0)))
        with self.assertRaises(ShapeMismatchError):
            QueryMatrix("q", np.zeros((0, 2)))

    def test_validation_is_idempotent(self):
        rng = np.random.default_rng(3)
        v = rng.standard_normal((5, 3))
        v /= 2 * np.linalg.norm(v, axis=1, keepdims=True)
        m = TokenMatrix("a", v)
        once = validate_token_matrix(m)
        twice = validate_token_matrix(once)
        np.testing.assert_array_equal(once.vectors, twice.vectors)

    def test_vectors_are_read_only_copies(self):
        source = np.array([[0.5, 0.5]])
        m = TokenMatrix("a", source)
        source[0, 0] = 0.9
        self.assertEqual(m.vectors[0, 0], 0.5)
        with self.assertRaises(ValueError):
            m.vectors[0, 0] = 0.1

    def test_subset_keeps_order(self):
        m = TokenMatrix("a", [[0.1, 0], [0.2, 0], [0.3, 0]])
        np.testing.assert_array_equal(m.subset([2, 0]).vectors[:, 0], [0.3, 0.1])
        self.assertEqual(m.subset([]).vectors.shape, (0, 2))


class TestDominancePartition(unittest.TestCase):

    def test_from_evidence(self):
        part = DominancePartition.from_evidence("a", [
            Evidence.SELF_MATCH, Evidence.LP_FEASIBLE, Evidence.LP_INFEASIBLE, Evidence.DUPLICATE,
        ])
        self.assertEqual(part.kept, (0, 2))
        self.assertEqual(part.pruned, (1, 3))
        self.assertEqual(part.evidence_counts()["self_match"], 1)
        self.assertEqual(part.to_dict()["evidence"][1], "lp_feasible")

    def test_overlap_rejected(self):
        with self.assertRaises(InvariantViolationError):
            DominancePartition("a", (0, 1), (1,), (Evidence.SELF_MATCH, Evidence.LP_FEASIBLE))

    def test_missing_index_rejected(self):
        with self.assertRaises(InvariantViolationError):
            DominancePartition("a", (0,), (), (Evidence.SELF_MATCH, Evidence.SELF_MATCH))

    def test_self_match_cannot_be_pruned(self):
        with self.assertRaises(InvariantViolationError):
            DominancePartition("a", (), (0,), (Evidence.SELF_MATCH,))


class TestPruneConfig(unittest.TestCase):

    def test_defaults(self):
        cfg = PruneConfig()
        self.assertIs(cfg.strategy, Strategy.LP)
        self.assertEqual(cfg.theta_lp, 1.0)
        self.assertEqual(cfg.lp_feas_tol, 1e-9)
        self.assertEqual(cfg.to_dict()["strategy"], "lp")

    def test_string_strategy(self):
        self.assertIs(PruneConfig(strategy="norm").strategy, Strategy.NORM)

    def test_out_of_range(self):
        for kwargs in ({"theta_lp": 0.0}, {"theta_lp": 1.5}, {"theta_n": -0.1},
                       {"theta_n": 1.01}, {"lp_feas_tol": 0}, {"svd_tol": -1},
                       {"rng_seed": -3}, {"strategy": "random"}):
            with self.assertRaises(ConfigError, msg=str(kwargs)):
                PruneConfig(**kwargs)


class TestPruneReport(unittest.TestCase):

    def test_remaining_ratio(self):
        report = PruneReport(
            per_doc=[
                DocPruneStats("a", 4, 2, {"self_match": 2, "lp_feasible": 2}),
                DocPruneStats("b", 4, 2, {"self_match": 1, "lp_infeasible": 1, "lp_feasible": 2}),
            ],
            wall_time_seconds=0.1,
        )
        self.assertEqual(report.remaining_ratio, 0.5)
        self.assertEqual(report.self_match_ratio, 3 / 8)
        self.assertEqual(report.lp_tests, 5)
        self.assertEqual(report.to_dict()["tokens_before"], 8)

    def test_empty_corpus(self):
        report = PruneReport(per_doc=[], wall_time_seconds=0.0)
        self.assertIsNone(report.remaining_ratio)
        self.assertIsNone(report.to_dict()["remaining_ratio"])


class TestErrors(unittest.TestCase):

    def test_pruning_failed_pickles(self):
        import pickle
        err = pickle.loads(pickle.dumps(PruningFailedError("doc-7", "boom")))
        self.assertEqual(err.doc_id, "doc-7")
        self.assertIn("doc-7", str(err))

    def test_hierarchy_is_value_error(self):
        self.assertTrue(issubclass(NormExceedsUnitError, ValueError))


if __name__ == "__main__":
    unittest.main()
