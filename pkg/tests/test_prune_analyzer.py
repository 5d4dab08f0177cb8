#!/usr/bin/env python3

import os
import shutil
import sys
import tempfile
import unittest

import matplotlib.pyplot as plt
import numpy as np

# Add parent directory to path to enable imports
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from corpus_io import CorpusIndex
from prune_analyzer import PruneAnalyzer
from token_matrix import DocPruneStats, PruneReport, Strategy, TokenMatrix


def small_index():
    index = CorpusIndex()
    index.add(TokenMatrix("a", [[1, 0], [0.9, 0], [0.1, 0.1]]))
    index.add(TokenMatrix("b", [[0, 1], [0.6, 0]]))
    return index


class TestPruneAnalyzer(unittest.TestCase):

    def setUp(self):
        self.test_dir = tempfile.mkdtemp()
        self.analyzer = PruneAnalyzer()

    def tearDown(self):
        shutil.rmtree(self.test_dir)
        plt.close("all")

    def test_norm_sweep(self):
        added = self.analyzer.sweep(small_index(), "norm", [0.0, 0.5, 0.95])
        self.assertEqual([r["remaining_ratio"] for r in added], [1.0, 0.8, 0.4])
        self.assertEqual(added[1]["tokens_after"], 4)

    def test_lp_sweep_default_thresholds(self):
        added = self.analyzer.sweep(small_index(), Strategy.LP)
        self.assertEqual(len(added), 7)
        self.assertEqual(added[-1]["threshold"], 1.0)
        # only (0.9, 0) is dominated
        self.assertEqual(added[-1]["tokens_after"], 4)
        self.assertTrue(all(r["strategy"] == "lp" for r in added))

    def test_summary(self):
        self.analyzer.sweep(small_index(), "norm", [0.0, 0.5])
        self.analyzer.add_result("lp", 1.0, PruneReport([DocPruneStats("x", 4, 1)], 0.0))
        summary = self.analyzer.get_summary_stats()
        self.assertEqual(summary["total_runs"], 3)
        self.assertEqual(summary["strategies"]["norm"]["min_remaining_ratio"], 0.8)
        self.assertEqual(summary["strategies"]["lp"]["max_remaining_ratio"], 0.25)

    def test_save_and_load(self):
        self.analyzer.sweep(small_index(), "norm", [0.5])
        path = os.path.join(self.test_dir, "sweep.json")
        self.analyzer.save_results(path)

        other = PruneAnalyzer()
        self.assertEqual(other.load_results(path), 1)
        self.assertEqual(other.results, self.analyzer.results)
        other.clear_results()
        self.assertEqual(other.results, [])

    def test_load_missing_file(self):
        self.assertEqual(self.analyzer.load_results(os.path.join(self.test_dir, "missing.json")), 0)

    def test_norm_histogram(self):
        hist = PruneAnalyzer.norm_histogram(small_index(), bins=4)
        self.assertEqual(hist["tokens"], 5)
        self.assertEqual(hist["counts"], [1, 0, 1, 3])
        np.testing.assert_allclose(hist["edges"], [0.0, 0.25, 0.5, 0.75, 1.0])

    def test_norm_histogram_empty(self):
        hist = PruneAnalyzer.norm_histogram(CorpusIndex(), bins=2)
        self.assertEqual(hist["tokens"], 0)
        self.assertEqual(hist["counts"], [0, 0])

    def test_plots(self):
        self.assertIsNone(self.analyzer.plot_remaining_ratio())
        self.analyzer.sweep(small_index(), "norm", [0.0, 0.5])
        self.assertIsNotNone(self.analyzer.plot_remaining_ratio())
        self.assertIsNotNone(self.analyzer.plot_norm_histogram(small_index(), bins=5))


if __name__ == "__main__":
    unittest.main()
