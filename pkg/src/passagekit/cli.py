"""Command-line surface for reproducible retrieval experiments.

Subcommands: index, search, fuse, hier, contextualize, evaluate, sweep,
analyze-jaccard, depth-stats. A config file of key = value lines (keys match
flag names, '#' comments allowed) supplies defaults; flags override it. All
commands are deterministic for identical inputs and write outputs
atomically.
"""

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from functools import partial
from pathlib import Path

from .contextualize import (
    annotate_coref,
    extract_corpus_keyphrases,
    load_keyphrase_cache,
    load_mentions,
    prepend_keyphrases,
    prepend_title,
    save_keyphrase_cache,
)
from .corpus import (
    depth_stats,
    load_corpus,
    load_judgments,
    load_queries,
    load_query_subset,
    write_corpus,
)
from .errors import ParseError, PassageKitError
from .evaluation import DEFAULT_METRICS, evaluate_run, jaccard_analysis
from .fileio import atomic_write_lines
from .fusion import (
    DEFAULT_ALPHA_GRID,
    DocToPassageMap,
    FusionConfig,
    convex_fuse,
    hierarchical_retrieve,
    sweep_alpha,
)
from .index import DEFAULT_B, DEFAULT_K1, build_index, load_index, save_index, search
from .ranking import Ranking, load_run, save_run


def _pmap(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _coerce(raw: str):
    lowered = raw.lower()
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def load_config(path: str | Path) -> dict:
    """Parse a key = value config file into a flat dict."""
    config = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected key = value")
            key, value = line.split("=", 1)
            config[key.strip().replace("-", "_")] = _coerce(value.strip())
    return config


def _alpha_grid(spec: str | None):
    if not spec:
        return DEFAULT_ALPHA_GRID
    return [float(v) for v in str(spec).split(",") if v.strip()]


def _load_mapping(corpus_path: str) -> DocToPassageMap:
    return DocToPassageMap.from_corpus(load_corpus(corpus_path))


def cmd_index(args) -> int:
    corpus = load_corpus(args.corpus)
    index = build_index(corpus, args.granularity, include_titles=not args.no_titles)
    save_index(index, args.out)
    print(f"indexed {index.num_candidates} {args.granularity} candidates into {args.out}")
    return 0


def cmd_search(args) -> int:
    index = load_index(args.index)
    queries = load_queries(args.queries)

    def run_one(query):
        return search(index, query, args.k, k1=args.k1, b=args.b)

    rankings = _pmap(run_one, queries, args.threads)
    save_run({r.query_id: r for r in rankings}, args.out, tag=args.run_tag)
    print(f"wrote {sum(len(r) for r in rankings)} rows for {len(queries)} queries to {args.out}")
    return 0


def _run_fusion(args, fuse_fn, tag: str) -> int:
    mapping = _load_mapping(args.corpus)
    doc_runs = load_run(args.doc_run)
    passage_runs = load_run(args.passage_run)
    unresolved = sorted({
        pid
        for ranking in passage_runs.values()
        for pid, _ in ranking.items
        if not mapping.has_passage(pid)
    })
    if unresolved:
        raise PassageKitError(
            f"{len(unresolved)} passage id(s) in {args.passage_run} do not resolve "
            f"to the corpus, e.g. {', '.join(unresolved[:3])}"
        )
    cfg = FusionConfig(
        alpha=args.alpha,
        cutoff_bm25=args.cutoff_doc,
        cutoff_neural=args.cutoff_passage,
        output_k=args.k,
    )
    query_ids = sorted(set(doc_runs) | set(passage_runs))

    def fuse_one(qid):
        return fuse_fn(
            doc_runs.get(qid, Ranking(qid)),
            passage_runs.get(qid, Ranking(qid)),
            mapping,
            cfg,
        )

    fused = _pmap(fuse_one, query_ids, args.threads)
    save_run({r.query_id: r for r in fused}, args.out, tag=args.run_tag or tag)
    print(f"fused {len(query_ids)} queries (alpha={cfg.alpha}) into {args.out}")
    return 0


def cmd_fuse(args) -> int:
    return _run_fusion(args, convex_fuse, "fuse")


def cmd_hier(args) -> int:
    return _run_fusion(args, hierarchical_retrieve, "hier")


def cmd_contextualize(args) -> int:
    corpus = load_corpus(args.corpus)
    if args.transform == "none":
        out = corpus
    elif args.transform == "title":
        out = prepend_title(corpus)
    elif args.transform == "keyphrase":
        cache_path = args.keyphrase_cache
        if cache_path and Path(cache_path).exists():
            keyphrases = load_keyphrase_cache(cache_path)
        else:
            keyphrases = extract_corpus_keyphrases(corpus, n=args.top_n)
            if cache_path:
                save_keyphrase_cache(keyphrases, cache_path)
        out = prepend_keyphrases(corpus, keyphrases)
    else:  # coref
        if not args.mentions:
            raise PassageKitError("transform=coref requires --mentions")
        out = annotate_coref(corpus, load_mentions(args.mentions))
    write_corpus(out, args.out)
    print(f"wrote {out.num_passages} passages ({args.transform}) to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    runs = load_run(args.run)
    judgments = load_judgments(args.qrels, args.scale)
    subset = load_query_subset(args.subset) if args.subset else None
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    reports = evaluate_run(runs, judgments, metrics=metrics, subset=subset,
                           exponential=args.exponential_gain)

    out_dir = Path(args.out_dir)
    per_query = ["query_id,metric,value"]
    summary = ["metric,mean_x100,num_queries,num_excluded"]
    for report in reports:
        for qid in sorted(report.per_query):
            per_query.append(f"{qid},{report.label},{report.per_query[qid]:.6f}")
        summary.append(
            f"{report.label},{100.0 * report.mean:.1f},{report.num_queries},{report.num_excluded}"
        )
        print(f"{report.label}: {100.0 * report.mean:.1f} ({report.num_queries} queries)")
    atomic_write_lines(out_dir / "per_query.csv", per_query)
    atomic_write_lines(out_dir / "summary.csv", summary)
    return 0


def cmd_sweep(args) -> int:
    mapping = _load_mapping(args.corpus)
    doc_runs = load_run(args.doc_run)
    passage_runs = load_run(args.passage_run)
    judgments = load_judgments(args.qrels, args.scale)
    cfg = FusionConfig(
        cutoff_bm25=args.cutoff_doc,
        cutoff_neural=args.cutoff_passage,
        output_k=args.k,
    )
    best, table = sweep_alpha(
        doc_runs, passage_runs, mapping, judgments,
        grid=_alpha_grid(args.grid), cfg=cfg, threads=args.threads,
    )
    rows = ["alpha,mean_ndcg10"]
    rows.extend(f"{alpha!r},{mean:.6f}" for alpha, mean in table.items())
    atomic_write_lines(args.out, rows)
    print(f"best_alpha={best!r}")
    return 0


def cmd_analyze_jaccard(args) -> int:
    corpus = load_corpus(args.corpus)
    queries = load_queries(args.queries)
    judgments = load_judgments(args.qrels, args.scale)
    transform = None
    if args.transform == "title":
        transform = prepend_title
    elif args.transform == "keyphrase":
        if args.keyphrase_cache and Path(args.keyphrase_cache).exists():
            keyphrases = load_keyphrase_cache(args.keyphrase_cache)
        else:
            keyphrases = extract_corpus_keyphrases(corpus, n=args.top_n)
            if args.keyphrase_cache:
                save_keyphrase_cache(keyphrases, args.keyphrase_cache)
        transform = partial(prepend_keyphrases, keyphrases=keyphrases)
    elif args.transform == "coref":
        if not args.mentions:
            raise PassageKitError("transform=coref requires --mentions")
        transform = partial(annotate_coref, mentions=load_mentions(args.mentions))

    report = jaccard_analysis(
        queries, corpus, judgments, transform=transform, use_analyzer=not args.raw_tokens
    )
    print(f"tokenization: {report.tokenization}")
    print(f"pairs: {report.num_pairs} (skipped {report.num_skipped}, missing {report.num_missing})")
    print(f"without transform: {report.mean_raw:.1f}")
    lines = ["variant,mean_jaccard_x100", f"raw,{report.mean_raw:.1f}"]
    if report.mean_transformed is not None:
        print(f"with {args.transform}:     {report.mean_transformed:.1f}")
        print(f"delta:             {report.delta:+.1f}")
        lines.append(f"{args.transform},{report.mean_transformed:.1f}")
        lines.append(f"delta,{report.delta:+.1f}")
    if args.out:
        atomic_write_lines(args.out, lines)
    return 0


def cmd_depth_stats(args) -> int:
    corpus = load_corpus(args.corpus)
    judgments = load_judgments(args.qrels, args.scale)
    summary = depth_stats(corpus, judgments)
    if summary.empty:
        print("no relevant judgments")
        return 0
    print(f"relevant pairs: {summary.num_pairs} (missing {summary.num_missing})")
    print(f"depth mean: {summary.mean:.1f}")
    print(f"depth stddev: {summary.stddev:.1f}")
    if args.out:
        rows = ["position,count"]
        rows.extend(f"{pos},{count}" for pos, count in summary.histogram.items())
        atomic_write_lines(args.out, rows)
    return 0


def _add_fusion_flags(sub):
    sub.add_argument("--doc-run", required=True, help="TREC run of document ids")
    sub.add_argument("--passage-run", required=True, help="TREC run of passage ids")
    sub.add_argument("--corpus", required=True, help="corpus JSONL (for doc/passage mapping)")
    sub.add_argument("--alpha", type=float, default=0.3, help="weight on the document side")
    sub.add_argument("--cutoff-doc", type=int, default=1000)
    sub.add_argument("--cutoff-passage", type=int, default=1000)
    sub.add_argument("--k", type=int, default=1000, help="output depth")
    sub.add_argument("--run-tag", default=None)
    sub.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    sub.add_argument("--out", required=True)


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="passagekit",
        description="Passage retrieval with document context.",
    )
    parser.add_argument("--config", default=None, help="key = value defaults file")
    commands = parser.add_subparsers(dest="command", required=True)
    subparsers = {}

    sub = subparsers["index"] = commands.add_parser("index", help="build an inverted index")
    sub.add_argument("--corpus", required=True)
    sub.add_argument("--granularity", choices=("passage", "document"), default="passage")
    sub.add_argument("--no-titles", action="store_true",
                     help="exclude titles from document-granularity text")
    sub.add_argument("--out", required=True, help="index directory")
    sub.set_defaults(func=cmd_index)

    sub = subparsers["search"] = commands.add_parser("search", help="BM25 exact search")
    sub.add_argument("--index", required=True)
    sub.add_argument("--queries", required=True)
    sub.add_argument("--k", type=int, default=1000)
    sub.add_argument("--k1", type=float, default=DEFAULT_K1)
    sub.add_argument("--b", type=float, default=DEFAULT_B)
    sub.add_argument("--run-tag", default="bm25")
    sub.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=cmd_search)

    sub = subparsers["fuse"] = commands.add_parser("fuse", help="convex rank fusion")
    _add_fusion_flags(sub)
    sub.set_defaults(func=cmd_fuse)

    sub = subparsers["hier"] = commands.add_parser(
        "hier", help="hierarchical retrieval (fusion restricted to retrieved documents)"
    )
    _add_fusion_flags(sub)
    sub.set_defaults(func=cmd_hier)

    sub = subparsers["contextualize"] = commands.add_parser(
        "contextualize", help="rewrite passage texts with document context"
    )
    sub.add_argument("--corpus", required=True)
    sub.add_argument("--transform", choices=("none", "title", "keyphrase", "coref"),
                     required=True)
    sub.add_argument("--mentions", default=None, help="mention sidecar JSONL (coref)")
    sub.add_argument("--keyphrase-cache", default=None, help="keyphrase cache JSONL")
    sub.add_argument("--top-n", type=int, default=10, help="keyphrases per document")
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=cmd_contextualize)

    sub = subparsers["evaluate"] = commands.add_parser("evaluate", help="score a run file")
    sub.add_argument("--run", required=True)
    sub.add_argument("--qrels", required=True)
    sub.add_argument("--scale", choices=("binary", "three_scale"), default="binary")
    sub.add_argument("--metrics", default=",".join(DEFAULT_METRICS))
    sub.add_argument("--subset", default=None, help="query id list to slice on")
    sub.add_argument("--exponential-gain", action="store_true")
    sub.add_argument("--out-dir", required=True)
    sub.set_defaults(func=cmd_evaluate)

    sub = subparsers["sweep"] = commands.add_parser("sweep", help="tune the fusion weight")
    sub.add_argument("--doc-run", required=True)
    sub.add_argument("--passage-run", required=True)
    sub.add_argument("--corpus", required=True)
    sub.add_argument("--qrels", required=True)
    sub.add_argument("--scale", choices=("binary", "three_scale"), default="binary")
    sub.add_argument("--grid", default=None, help="comma-separated alphas (default 0.0..1.0)")
    sub.add_argument("--cutoff-doc", type=int, default=1000)
    sub.add_argument("--cutoff-passage", type=int, default=1000)
    sub.add_argument("--k", type=int, default=1000)
    sub.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=cmd_sweep)

    sub = subparsers["analyze-jaccard"] = commands.add_parser(
        "analyze-jaccard", help="query/gold-passage token overlap, with and without a transform"
    )
    sub.add_argument("--corpus", required=True)
    sub.add_argument("--queries", required=True)
    sub.add_argument("--qrels", required=True)
    sub.add_argument("--scale", choices=("binary", "three_scale"), default="binary")
    sub.add_argument("--transform", choices=("none", "title", "keyphrase", "coref"),
                     default="none")
    sub.add_argument("--mentions", default=None)
    sub.add_argument("--keyphrase-cache", default=None)
    sub.add_argument("--top-n", type=int, default=10)
    sub.add_argument("--raw-tokens", action="store_true",
                     help="whitespace tokens instead of the index analyzer")
    sub.add_argument("--out", default=None)
    sub.set_defaults(func=cmd_analyze_jaccard)

    sub = subparsers["depth-stats"] = commands.add_parser(
        "depth-stats", help="position statistics of relevant passages"
    )
    sub.add_argument("--corpus", required=True)
    sub.add_argument("--qrels", required=True)
    sub.add_argument("--scale", choices=("binary", "three_scale"), default="binary")
    sub.add_argument("--out", default=None, help="histogram CSV")
    sub.set_defaults(func=cmd_depth_stats)

    return parser, subparsers


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="%(message)s")
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()

    # resolve --config before the real parse so its values become defaults
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config", default=None)
    probed, _ = probe.parse_known_args(argv)
    if probed.config:
        try:
            config = load_config(probed.config)
        except (OSError, PassageKitError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        for sub in subparsers.values():
            dests = set()
            for action in sub._actions:
                dests.add(action.dest)
                if action.dest in config:
                    action.required = False
            sub.set_defaults(**{k: v for k, v in config.items() if k in dests})

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PassageKitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
