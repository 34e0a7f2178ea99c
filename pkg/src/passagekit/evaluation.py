"""Graded-relevance metrics and diagnostic analyses.

nDCG uses linear gain (gain = grade) and a log2(rank + 1) discount, the
trec_eval convention; exponential gain (2^grade - 1) is available behind a
flag for sensitivity checks. Queries without any relevant judgment are
excluded from aggregate means and counted.
"""

import logging
import math
from dataclasses import dataclass, field

from .corpus import Corpus, JudgmentSet, Query, QuerySubset
from .errors import ValidationError
from .ranking import Ranking

log = logging.getLogger(__name__)

METRICS = ("ndcg", "recall")
DEFAULT_METRICS = ("ndcg@10", "recall@100")


def parse_metric(spec: str) -> tuple[str, int]:
    """Parse a metric spec like "ndcg@10" into (name, k)."""
    name, sep, k_str = spec.partition("@")
    if not sep or name not in METRICS:
        raise ValidationError(f"unknown metric spec {spec!r}, expected ndcg@k or recall@k")
    try:
        k = int(k_str)
    except ValueError:
        raise ValidationError(f"metric cutoff {k_str!r} is not an integer") from None
    if k < 1:
        raise ValidationError(f"metric cutoff must be >= 1, got {k}")
    return name, k


def map_grades(judgments: JudgmentSet) -> JudgmentSet:
    """Validate that grades conform to the declared 0-1 / 0-1-2 label scheme.

    Conforming sets are returned unchanged (the label mapping is identity);
    an out-of-scale grade raises.
    """
    judgments.validate()
    return judgments


def _gain(grade: int, exponential: bool) -> float:
    return float(2**grade - 1) if exponential else float(grade)


def ndcg_at_k(
    ranking: Ranking,
    judgments: JudgmentSet,
    k: int = 10,
    exponential: bool = False,
) -> float:
    """nDCG@k for one query; 0.0 when the query has no relevant judgment."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    grades = judgments.grades_for(ranking.query_id)
    dcg = 0.0
    for i, (cid, _) in enumerate(ranking.items[:k]):
        grade = grades.get(cid, 0)
        if grade > 0:
            dcg += _gain(grade, exponential) / math.log2(i + 2)
    ideal = sorted((g for g in grades.values() if g > 0), reverse=True)[:k]
    idcg = sum(_gain(g, exponential) / math.log2(i + 2) for i, g in enumerate(ideal))
    if idcg == 0.0:
        return 0.0
    return dcg / idcg


def recall_at_k(ranking: Ranking, judgments: JudgmentSet, k: int = 100) -> float:
    """Fraction of the query's relevant passages present in the top k."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    relevant = judgments.relevant_for(ranking.query_id)
    if not relevant:
        return 0.0
    hits = sum(1 for cid, _ in ranking.items[:k] if cid in relevant)
    return hits / len(relevant)


@dataclass
class MetricReport:
    metric: str
    k: int
    per_query: dict[str, float] = field(default_factory=dict)
    mean: float = 0.0
    num_queries: int = 0
    num_excluded: int = 0  # judged queries without any relevant label

    @property
    def label(self) -> str:
        return f"{self.metric}@{self.k}"


def evaluate_run(
    runs: dict[str, Ranking],
    judgments: JudgmentSet,
    metrics=DEFAULT_METRICS,
    subset: QuerySubset | None = None,
    exponential: bool = False,
) -> list[MetricReport]:
    """Score a per-query run against judgments, one report per metric.

    Evaluation is run-driven: queries present in the run and carrying at
    least one relevant judgment contribute; run queries with no judgments at
    all are warned about. Means are plain fractions in [0, 1]; presentation
    layers multiply by 100.
    """
    parsed = [parse_metric(m) for m in metrics]
    unjudged = [qid for qid in runs if qid not in judgments.entries]
    if unjudged:
        log.warning("%d run query(ies) have no judgments, e.g. %r", len(unjudged), unjudged[0])

    effective = []
    excluded = 0
    for qid in sorted(runs):
        if subset is not None and qid not in subset:
            continue
        if qid not in judgments.entries:
            continue
        if judgments.relevant_for(qid):
            effective.append(qid)
        else:
            excluded += 1
    if not effective:
        raise ValidationError("no evaluable queries (judged, relevant, in subset)")

    reports = []
    for name, k in parsed:
        per_query = {}
        for qid in effective:
            if name == "ndcg":
                per_query[qid] = ndcg_at_k(runs[qid], judgments, k, exponential)
            else:
                per_query[qid] = recall_at_k(runs[qid], judgments, k)
        mean = sum(per_query.values()) / len(per_query)
        reports.append(MetricReport(name, k, per_query, mean, len(per_query), excluded))
    return reports


@dataclass
class JaccardReport:
    """Mean query/gold-passage token overlap, reported x100 as in summary tables."""

    mean_raw: float
    mean_transformed: float | None
    delta: float | None
    num_pairs: int
    num_skipped: int
    num_missing: int
    tokenization: str


def jaccard_analysis(
    queries: list[Query],
    corpus: Corpus,
    judgments: JudgmentSet,
    transform=None,
    use_analyzer: bool = True,
) -> JaccardReport:
    """Mean Jaccard similarity between each query and its relevant passages.

    transform, when given, is a Corpus -> Corpus function (e.g. title
    prepending); the report then carries both means and their delta. Token
    sets come from the index analyzer by default, or raw whitespace splitting
    with use_analyzer=False. Pairs with empty token sets on both sides are
    skipped and counted, as are judged passages missing from the corpus.
    """
    from .analysis import tokenize

    token_fn = tokenize if use_analyzer else str.split
    transformed = transform(corpus) if transform is not None else None

    raw_sum = 0.0
    tr_sum = 0.0
    pairs = 0
    skipped = 0
    missing = 0
    for query in queries:
        query_tokens = set(token_fn(query.text))
        for pid in sorted(judgments.relevant_for(query.query_id)):
            if not corpus.has_passage(pid):
                missing += 1
                continue
            raw_tokens = set(token_fn(corpus.passage(pid).text))
            if not query_tokens and not raw_tokens:
                skipped += 1
                continue
            raw_sum += _jaccard(query_tokens, raw_tokens)
            if transformed is not None:
                tr_tokens = set(token_fn(transformed.passage(pid).text))
                tr_sum += _jaccard(query_tokens, tr_tokens)
            pairs += 1
    mean_raw = 100.0 * raw_sum / pairs if pairs else 0.0
    if transformed is not None and pairs:
        mean_tr = 100.0 * tr_sum / pairs
        return JaccardReport(
            mean_raw, mean_tr, mean_tr - mean_raw, pairs, skipped, missing,
            "analyzer" if use_analyzer else "whitespace",
        )
    return JaccardReport(
        mean_raw, None, None, pairs, skipped, missing,
        "analyzer" if use_analyzer else "whitespace",
    )


def _jaccard(a: set, b: set) -> float:
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)
