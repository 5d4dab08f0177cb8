import json
import time
import logging
from collections import defaultdict
from dataclasses import replace
from typing import Optional, Sequence

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from corpus_io import CorpusIndex
from token_matrix import PruneConfig, PruneReport, Strategy
from token_pruner import TokenPruner

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLDS = {
    Strategy.LP: (0.2, 0.35, 0.5, 0.65, 0.8, 0.95, 1.0),
    Strategy.NORM: (0.0, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999),
}


class PruneAnalyzer:
    """
    Threshold sweeps and corpus statistics for the pruning strategies.

    Each sweep point is stored as a plain dict so results can be saved to
    JSON, reloaded later and plotted as remaining-token ratio against the
    threshold.
    """

    def __init__(self):
        self.results = []

    def add_result(self, strategy, threshold, report: PruneReport):
        """
        Record one pruning run.

        Args:
            strategy (Strategy or str): strategy that produced the report
            threshold (float): theta_lp or theta_n used
            report (PruneReport): the run's report
        """
        self.results.append({
            "strategy": Strategy(strategy).value,
            "threshold": float(threshold),
            "documents": len(report.per_doc),
            "tokens_before": report.tokens_before,
            "tokens_after": report.tokens_after,
            "remaining_ratio": report.remaining_ratio,
            "self_match_ratio": report.self_match_ratio,
            "lp_tests": report.lp_tests,
            "wall_time_seconds": report.wall_time_seconds,
            "timestamp": time.time(),
        })

    def sweep(self, index: CorpusIndex, strategy, thresholds: Optional[Sequence[float]] = None,
              base_config: Optional[PruneConfig] = None, max_workers=None):
        """
        Prune the corpus once per threshold and record every run.

        Returns:
            list: the result dicts added by this sweep, in threshold order
        """
        strategy = Strategy(strategy)
        thresholds = DEFAULT_THRESHOLDS[strategy] if thresholds is None else thresholds
        base = base_config or PruneConfig()
        added = []
        for t in thresholds:
            if strategy is Strategy.LP:
                cfg = replace(base, strategy=Strategy.LP, theta_lp=t)
            else:
                cfg = replace(base, strategy=Strategy.NORM, theta_n=t)
            pruner = TokenPruner(cfg, show_progress=False)
            if max_workers and max_workers > 1:
                pruner.enable_multiprocessing(max_workers)
            _, report = pruner.prune(index)
            self.add_result(strategy, t, report)
            added.append(self.results[-1])
            logger.info(f"{strategy.value} threshold {t}: remaining ratio {report.remaining_ratio}")
        return added

    def save_results(self, filename):
        with open(filename, "w") as f:
            json.dump(self.results, f, indent=2)

    def load_results(self, filename):
        """
        Load results saved by save_results().

        Returns:
            int: number of results loaded (0 if the file could not be read)
        """
        try:
            with open(filename, "r") as f:
                self.results = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"Error loading results: {e}")
            self.results = []
            return 0
        logger.info(f"Loaded {len(self.results)} results")
        return len(self.results)

    def clear_results(self):
        self.results = []

    def get_summary_stats(self):
        """Best (lowest) remaining ratio and run count per strategy"""
        by_strategy = defaultdict(list)
        for r in self.results:
            by_strategy[r["strategy"]].append(r)
        summary = {"total_runs": len(self.results), "strategies": {}}
        for name, runs in by_strategy.items():
            ratios = [r["remaining_ratio"] for r in runs if r["remaining_ratio"] is not None]
            summary["strategies"][name] = {
                "runs": len(runs),
                "thresholds": sorted(r["threshold"] for r in runs),
                "min_remaining_ratio": min(ratios) if ratios else None,
                "max_remaining_ratio": max(ratios) if ratios else None,
            }
        return summary

    @staticmethod
    def norm_histogram(index: CorpusIndex, bins=20):
        """
        Histogram of token norms over the whole corpus.

        Returns:
            dict: {"edges": [...], "counts": [...], "tokens": int}
        """
        norms = np.concatenate([doc.norms() for doc in index] or [np.zeros(0)])
        upper = max(1.0, float(norms.max())) if norms.size else 1.0
        counts, edges = np.histogram(norms, bins=bins, range=(0.0, upper))
        return {"edges": edges.tolist(), "counts": counts.tolist(), "tokens": int(norms.size)}

    def plot_remaining_ratio(self, figsize=(10, 6)):
        """
        Remaining-token ratio against threshold, one line per strategy.

        Returns:
            matplotlib.figure.Figure: the figure, or None without results
        """
        if not self.results:
            return None
        fig, ax = plt.subplots(figsize=figsize)
        by_strategy = defaultdict(list)
        for r in self.results:
            if r["remaining_ratio"] is not None:
                by_strategy[r["strategy"]].append((r["threshold"], r["remaining_ratio"]))
        for name, points in sorted(by_strategy.items()):
            points.sort()
            xs, ys = zip(*points)
            ax.plot(xs, ys, marker="o", label=f"{name} pruning")
        ax.set_xlabel("Threshold")
        ax.set_ylabel("Remaining tokens (fraction)")
        ax.set_ylim(0, 1.05)
        ax.set_title("Remaining tokens vs. pruning threshold")
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        return fig

    def plot_norm_histogram(self, index: CorpusIndex, bins=20, figsize=(10, 6)):
        hist = self.norm_histogram(index, bins)
        fig, ax = plt.subplots(figsize=figsize)
        edges = np.asarray(hist["edges"])
        ax.bar(edges[:-1], hist["counts"], width=np.diff(edges), align="edge", edgecolor="black")
        ax.set_xlabel("Token norm")
        ax.set_ylabel("Tokens")
        ax.set_title(f"Token norm distribution ({hist['tokens']} tokens)")
        fig.tight_layout()
        return fig
