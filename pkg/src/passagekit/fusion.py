"""Score normalization, rank fusion, hierarchical retrieval and MaxP.

Fusion combines a document ranking with a passage ranking as a convex
combination of min-max normalized scores:

    score(p) = alpha * doc_score(parent(p)) + (1 - alpha) * passage_score(p)

with zero substituted for whichever side is missing a candidate. Both input
rankings are truncated to their cutoffs before normalization, so the min and
max are taken over the surviving candidates.
"""

from dataclasses import dataclass, replace

from .corpus import Corpus, JudgmentSet
from .errors import ValidationError
from .ranking import Ranking

DEFAULT_CUTOFF = 1000
DEFAULT_OUTPUT_K = 1000
DEFAULT_ALPHA_GRID = tuple(round(0.1 * i, 1) for i in range(11))


@dataclass(frozen=True)
class FusionConfig:
    alpha: float = 0.3
    cutoff_bm25: int = DEFAULT_CUTOFF
    cutoff_neural: int = DEFAULT_CUTOFF
    output_k: int = DEFAULT_OUTPUT_K

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"alpha must be in [0, 1], got {self.alpha}")
        for name in ("cutoff_bm25", "cutoff_neural", "output_k"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1, got {getattr(self, name)}")


class DocToPassageMap:
    """Bidirectional document <-> passage association."""

    def __init__(self, doc_to_passages: dict[str, list[str]]):
        self._by_doc: dict[str, tuple[str, ...]] = {}
        self._parent: dict[str, str] = {}
        for doc_id, passage_ids in doc_to_passages.items():
            self._by_doc[doc_id] = tuple(passage_ids)
            for pid in passage_ids:
                if pid in self._parent:
                    raise ValidationError(f"passage {pid!r} maps to more than one document")
                self._parent[pid] = doc_id

    @classmethod
    def from_corpus(cls, corpus: Corpus) -> "DocToPassageMap":
        return cls({d.doc_id: [p.passage_id for p in d.passages] for d in corpus.documents()})

    def passages_of(self, doc_id: str) -> tuple[str, ...]:
        return self._by_doc.get(doc_id, ())

    def parent_of(self, passage_id: str) -> str:
        try:
            return self._parent[passage_id]
        except KeyError:
            raise ValidationError(f"passage {passage_id!r} has no parent document") from None

    def has_passage(self, passage_id: str) -> bool:
        return passage_id in self._parent


def normalize(ranking: Ranking) -> Ranking:
    """Min-max normalize a ranking's scores onto [0, 1] in place of order.

    The min and max are taken over the ranking's own items. A degenerate
    ranking (all scores equal, including single-item rankings) maps to all
    1.0: its sole score level is the maximum of the ranking.
    """
    if not ranking.items:
        return ranking
    high = ranking.items[0][1]
    low = ranking.items[-1][1]
    if high == low:
        items = tuple((cid, 1.0) for cid, _ in ranking.items)
    else:
        span = high - low
        items = tuple((cid, (score - low) / span) for cid, score in ranking.items)
    return Ranking(ranking.query_id, items)


def _fused_scores(
    doc_ranking: Ranking,
    passage_ranking: Ranking,
    mapping: DocToPassageMap,
    cfg: FusionConfig,
    restrict_to_docs: bool,
) -> dict[str, float]:
    if doc_ranking.query_id != passage_ranking.query_id:
        raise ValidationError(
            f"query mismatch: {doc_ranking.query_id!r} vs {passage_ranking.query_id!r}"
        )
    doc_scores = normalize(doc_ranking.truncate(cfg.cutoff_bm25)).scores()
    psg_scores = normalize(passage_ranking.truncate(cfg.cutoff_neural)).scores()
    for pid in psg_scores:
        mapping.parent_of(pid)  # corpus inconsistency -> error

    candidates: set[str] = set()
    for doc_id in doc_scores:
        candidates.update(mapping.passages_of(doc_id))
    if not restrict_to_docs:
        candidates.update(psg_scores)

    alpha = cfg.alpha
    fused = {}
    for pid in candidates:
        doc_side = doc_scores.get(mapping.parent_of(pid), 0.0)
        psg_side = psg_scores.get(pid, 0.0)
        fused[pid] = alpha * doc_side + (1.0 - alpha) * psg_side
    return fused


def _top_k(query_id: str, scores: dict[str, float], k: int) -> Ranking:
    items = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return Ranking(query_id, tuple(items[:k]))


def convex_fuse(
    doc_ranking: Ranking,
    passage_ranking: Ranking,
    mapping: DocToPassageMap,
    cfg: FusionConfig,
) -> Ranking:
    """Fuse a document ranking with a passage ranking.

    Candidates are the passages of retrieved documents plus the passages of
    the passage ranking; a side that is missing a candidate contributes 0.
    """
    scores = _fused_scores(doc_ranking, passage_ranking, mapping, cfg, restrict_to_docs=False)
    return _top_k(passage_ranking.query_id, scores, cfg.output_k)


def hierarchical_retrieve(
    doc_ranking: Ranking,
    passage_ranking: Ranking,
    mapping: DocToPassageMap,
    cfg: FusionConfig,
) -> Ranking:
    """Two-step retrieval: fuse as convex_fuse, but only passages whose parent
    document was retrieved are eligible."""
    scores = _fused_scores(doc_ranking, passage_ranking, mapping, cfg, restrict_to_docs=True)
    return _top_k(passage_ranking.query_id, scores, cfg.output_k)


def maxp_doc_ranking(passage_ranking: Ranking, mapping: DocToPassageMap) -> Ranking:
    """Project a passage ranking onto documents: each document scores the
    maximum of its passages present in the ranking."""
    best: dict[str, float] = {}
    for pid, score in passage_ranking.items:
        doc_id = mapping.parent_of(pid)
        if doc_id not in best or score > best[doc_id]:
            best[doc_id] = score
    return Ranking.from_scores(passage_ranking.query_id, best)


def sweep_alpha(
    doc_runs: dict[str, Ranking],
    passage_runs: dict[str, Ranking],
    mapping: DocToPassageMap,
    judgments: JudgmentSet,
    grid=DEFAULT_ALPHA_GRID,
    cfg: FusionConfig | None = None,
    threads: int = 1,
) -> tuple[float, dict[float, float]]:
    """Evaluate convex_fuse at each grid alpha by mean nDCG@10.

    Returns (best_alpha, {alpha: mean_ndcg10}); ties pick the smaller alpha.
    Grid points are independent and may be evaluated on a thread pool.
    """
    from .evaluation import evaluate_run  # local import: evaluation is a sibling layer

    grid = sorted(set(grid))
    if not grid:
        raise ValidationError("alpha grid is empty")
    for alpha in grid:
        if not 0.0 <= alpha <= 1.0:
            raise ValidationError(f"grid alpha {alpha} outside [0, 1]")
    query_ids = sorted(set(doc_runs) | set(passage_runs))
    if not query_ids:
        raise ValidationError("no queries to sweep over")
    base = cfg or FusionConfig()

    def evaluate_point(alpha: float) -> float:
        step_cfg = replace(base, alpha=alpha)
        fused = {
            qid: convex_fuse(
                doc_runs.get(qid, Ranking(qid)),
                passage_runs.get(qid, Ranking(qid)),
                mapping,
                step_cfg,
            )
            for qid in query_ids
        }
        return evaluate_run(fused, judgments, metrics=("ndcg@10",))[0].mean

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            means = list(pool.map(evaluate_point, grid))
    else:
        means = [evaluate_point(alpha) for alpha in grid]

    table = dict(zip(grid, means))
    best_alpha, best_score = None, None
    for alpha, mean in table.items():
        if best_score is None or mean > best_score:
            best_alpha, best_score = alpha, mean
    return best_alpha, table
