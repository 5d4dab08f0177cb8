import os
import sys
import json
import logging
import argparse

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from corpus_io import CorpusIndex, load_corpus, read_queries_jsonl, write_corpus_jsonl, write_index_binary
from dominance import oracle_2d
from lossless_verifier import verify_lossless
from prune_analyzer import PruneAnalyzer
from pruning_errors import ConfigError, TokenPruningError
from scoring import VARIANTS, project_matrix, rank_documents
from token_matrix import PruneConfig, Strategy, TokenMatrix
from token_pruner import TokenPruner

logger = logging.getLogger(__name__)

DEFAULT_THETA = {"lp": 1.0, "norm": 0.0}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dpprune",
        description="Lossless and approximate token pruning for late-interaction indexes"
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="Debug logging on stderr")
    verbosity.add_argument("--quiet", action="store_true", help="Only warnings and errors, no progress bars")
    subparsers = parser.add_subparsers(dest="command", help="Command to execute")

    prune_parser = subparsers.add_parser("prune", help="Prune a corpus and write the kept vectors")
    prune_parser.add_argument("--in", dest="input", required=True, help="Corpus (JSONL or DPR1)")
    prune_parser.add_argument("--out", required=True, help="Output index; .jsonl writes JSONL, anything else DPR1")
    prune_parser.add_argument("--strategy", choices=["lp", "norm"], default="lp")
    prune_parser.add_argument("--theta", type=float, default=None,
                              help="theta_lp for lp (default 1.0), theta_n for norm (default 0.0)")
    prune_parser.add_argument("--seed", type=int, default=0)
    prune_parser.add_argument("--workers", type=int, default=1, help="Worker processes")
    prune_parser.add_argument("--verify-samples", type=int, default=0,
                              help="Random queries per document for a losslessness check of the result")
    prune_parser.set_defaults(handler=cmd_prune)

    score_parser = subparsers.add_parser("score", help="Rank the documents of an index for each query")
    score_parser.add_argument("--index", required=True)
    score_parser.add_argument("--queries", required=True, help="JSONL of {query_id, vectors}")
    score_parser.add_argument("--variant", choices=list(VARIANTS), default="p")
    score_parser.add_argument("--top", type=int, default=None, help="Only print the top N documents")
    score_parser.set_defaults(handler=cmd_score)

    verify_parser = subparsers.add_parser("verify", help="Check that a pruned index scores like the original")
    verify_parser.add_argument("--original", required=True)
    verify_parser.add_argument("--pruned", required=True)
    verify_parser.add_argument("--samples", type=int, default=10000)
    verify_parser.add_argument("--seed", type=int, default=0)
    verify_parser.add_argument("--ranking-queries", type=int, default=0,
                               help="Random query matrices for the Kendall tau check")
    verify_parser.add_argument("--workers", type=int, default=1)
    verify_parser.set_defaults(handler=cmd_verify)

    stats_parser = subparsers.add_parser("stats", help="Token counts and norm histogram of an index")
    stats_parser.add_argument("--index", required=True)
    stats_parser.add_argument("--original", default=None, help="Unpruned index, adds the remaining ratio")
    stats_parser.add_argument("--bins", type=int, default=20)
    stats_parser.set_defaults(handler=cmd_stats)

    oracle_parser = subparsers.add_parser("oracle2d", help="Exact partitions of a 2-D corpus")
    oracle_parser.add_argument("--in", dest="input", required=True)
    oracle_parser.set_defaults(handler=cmd_oracle2d)

    sweep_parser = subparsers.add_parser("sweep", help="Remaining ratio over a range of thresholds")
    sweep_parser.add_argument("--in", dest="input", required=True)
    sweep_parser.add_argument("--strategy", choices=["lp", "norm"], default="lp")
    sweep_parser.add_argument("--thresholds", default=None, help="Comma-separated thresholds")
    sweep_parser.add_argument("--output-dir", default="sweep_output", help="Directory for sweep.json and plots")
    sweep_parser.add_argument("--workers", type=int, default=1)
    sweep_parser.set_defaults(handler=cmd_sweep)

    generate_parser = subparsers.add_parser("generate", help="Write a random projected corpus")
    generate_parser.add_argument("--out", required=True)
    generate_parser.add_argument("--docs", type=int, default=10)
    generate_parser.add_argument("--tokens", type=int, default=32)
    generate_parser.add_argument("--dim", type=int, default=8)
    generate_parser.add_argument("--extra", type=int, default=8, help="Rows of the discarded projection")
    generate_parser.add_argument("--hidden", type=int, default=16)
    generate_parser.add_argument("--seed", type=int, default=0)
    generate_parser.set_defaults(handler=cmd_generate)

    return parser


def _configure_logging(args):
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(
        stream=sys.stderr,
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def _emit(obj):
    sys.stdout.write(json.dumps(obj) + "\n")


def _write_index(index, path):
    if path.endswith(".jsonl"):
        write_corpus_jsonl(index, path)
    else:
        write_index_binary(index, path)
    logger.info(f"Wrote {len(index)} documents to {path}")


def cmd_prune(args):
    theta = DEFAULT_THETA[args.strategy] if args.theta is None else args.theta
    if args.strategy == "lp":
        cfg = PruneConfig(strategy=Strategy.LP, theta_lp=theta, rng_seed=args.seed)
    else:
        cfg = PruneConfig(strategy=Strategy.NORM, theta_n=theta, rng_seed=args.seed)
    if args.workers < 1 or args.verify_samples < 0:
        raise ConfigError("--workers must be >= 1 and --verify-samples >= 0")

    index = load_corpus(args.input)
    pruner = TokenPruner(cfg, show_progress=not args.quiet)
    if args.workers > 1:
        pruner.enable_multiprocessing(args.workers)
    pruned, report = pruner.prune(index)
    _write_index(pruned, args.out)

    if args.verify_samples:
        check = verify_lossless(index, pruned, samples=args.verify_samples, seed=cfg.rng_seed,
                                max_workers=args.workers)
        report.score_delta_max = check.max_abs_score_delta
    _emit(report.to_dict())
    return 0


def cmd_score(args):
    index = load_corpus(args.index)
    for q in read_queries_jsonl(args.queries):
        ranking = rank_documents(q, index.docs, args.variant)
        if args.top is not None:
            ranking = ranking[:args.top]
        _emit({
            "query_id": q.query_id,
            "variant": args.variant,
            "ranking": [{"doc_id": doc_id, "score": s} for doc_id, s in ranking],
        })
    return 0


def cmd_verify(args):
    if args.samples < 1 or args.workers < 1 or args.ranking_queries < 0:
        raise ConfigError("--samples and --workers must be >= 1, --ranking-queries >= 0")
    original = load_corpus(args.original)
    pruned = load_corpus(args.pruned)
    report = verify_lossless(
        original, pruned, samples=args.samples, seed=args.seed,
        ranking_queries=args.ranking_queries, max_workers=args.workers,
        show_progress=not args.quiet,
    )
    _emit(report.to_dict())
    return 0 if report.lossless else 1


def cmd_stats(args):
    index = load_corpus(args.index)
    out = {
        "documents": len(index),
        "dim": index.dim,
        "tokens": index.total_tokens,
        "tokens_per_doc": {doc.doc_id: doc.n for doc in index},
        "norm_histogram": PruneAnalyzer.norm_histogram(index, args.bins),
    }
    if args.original:
        original = load_corpus(args.original)
        total = original.total_tokens
        out["original_tokens"] = total
        out["remaining_ratio"] = index.total_tokens / total if total else None
    _emit(out)
    return 0


def cmd_oracle2d(args):
    index = load_corpus(args.input)
    for doc in index:
        _emit(oracle_2d(doc).to_dict())
    return 0


def cmd_sweep(args):
    thresholds = None
    if args.thresholds:
        try:
            thresholds = [float(t) for t in args.thresholds.split(",") if t.strip()]
        except ValueError:
            raise ConfigError(f"bad --thresholds value {args.thresholds!r}") from None
    index = load_corpus(args.input)
    analyzer = PruneAnalyzer()
    analyzer.sweep(index, args.strategy, thresholds, max_workers=args.workers)

    os.makedirs(args.output_dir, exist_ok=True)
    analyzer.save_results(os.path.join(args.output_dir, "sweep.json"))
    plots = [
        ("remaining_ratio", analyzer.plot_remaining_ratio),
        ("norm_histogram", lambda: analyzer.plot_norm_histogram(index)),
    ]
    for name, plot_func in plots:
        fig = plot_func()
        if fig:
            path = os.path.join(args.output_dir, f"{name}.png")
            fig.savefig(path)
            plt.close(fig)
            logger.info(f"Saved {name} plot to {path}")
    _emit(analyzer.get_summary_stats())
    return 0


def cmd_generate(args):
    if min(args.docs, args.tokens, args.dim, args.hidden) < 1 or args.extra < 0:
        raise ConfigError("--docs, --tokens, --dim and --hidden must be >= 1, --extra >= 0")
    rng = np.random.default_rng(args.seed)
    w1 = rng.standard_normal((args.dim, args.hidden))
    w2 = rng.standard_normal((args.extra, args.hidden))
    index = CorpusIndex(dim=args.dim)
    for i in range(args.docs):
        hidden = rng.standard_normal((args.tokens, args.hidden))
        index.add(TokenMatrix(f"doc{i}", project_matrix(hidden, w1, w2)))
    _write_index(index, args.out)
    _emit({"documents": len(index), "tokens": index.total_tokens, "dim": args.dim, "out": args.out})
    return 0


def main(argv=None):
    """
    Command-line entry point.

    Returns:
        int: 0 on success, 1 on data errors (or counterexamples from verify),
        2 on usage and configuration errors
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    _configure_logging(args)
    if args.command is None:
        parser.print_help(sys.stderr)
        return 2

    try:
        return args.handler(args)
    except ConfigError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 2
    except (TokenPruningError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
