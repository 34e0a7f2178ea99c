"""Ranked candidate lists and TREC run file I/O.

A Ranking is the exchange type between retrievers, fusers and evaluators.
Its order contract: scores non-increasing, ties broken by ascending
candidate id, candidate ids unique. Run files loaded from disk are
re-sorted into this canonical order (external systems may order ties
arbitrarily).
"""

import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ParseError, ValidationError
from .fileio import atomic_write_lines

RUN_TAG_DEFAULT = "passagekit"


@dataclass(frozen=True)
class Ranking:
    query_id: str
    items: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "items", tuple((cid, float(s)) for cid, s in self.items))
        seen = set()
        prev_id = None
        prev_score = None
        for cid, score in self.items:
            if cid in seen:
                raise ValidationError(f"duplicate candidate {cid!r} in ranking {self.query_id!r}")
            seen.add(cid)
            if prev_score is not None:
                if score > prev_score:
                    raise ValidationError(
                        f"ranking {self.query_id!r} scores increase at {cid!r}"
                    )
                if score == prev_score and cid < prev_id:
                    raise ValidationError(
                        f"ranking {self.query_id!r} breaks id tie order at {cid!r}"
                    )
            prev_id, prev_score = cid, score

    @classmethod
    def from_scores(cls, query_id: str, scores) -> "Ranking":
        """Build a canonical ranking from a mapping or iterable of (id, score)."""
        pairs = scores.items() if hasattr(scores, "items") else list(scores)
        ordered = sorted(pairs, key=lambda kv: (-kv[1], kv[0]))
        return cls(query_id, tuple(ordered))

    def truncate(self, k: int) -> "Ranking":
        if k < 0:
            raise ValidationError(f"cannot truncate ranking to k={k}")
        return Ranking(self.query_id, self.items[:k])

    def ids(self) -> list[str]:
        return [cid for cid, _ in self.items]

    def scores(self) -> dict[str, float]:
        return dict(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __bool__(self) -> bool:
        return bool(self.items)


def save_run(rankings, path: str | Path, tag: str = RUN_TAG_DEFAULT) -> None:
    """Write rankings as a TREC run file: query_id Q0 id rank score tag.

    Scores use repr formatting so the file reloads to the exact floats.
    Queries are written in sorted id order; rows in rank order.
    """
    if hasattr(rankings, "values"):
        rankings = rankings.values()
    lines = []
    for ranking in sorted(rankings, key=lambda r: r.query_id):
        for rank, (cid, score) in enumerate(ranking.items, start=1):
            lines.append(f"{ranking.query_id} Q0 {cid} {rank} {score!r} {tag}")
    atomic_write_lines(path, lines)


def load_run(path: str | Path) -> dict[str, Ranking]:
    """Load a TREC run file, canonicalizing each query's tie order."""
    path = Path(path)
    by_query: dict[str, dict[str, float]] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) < 6:
                raise ParseError(f"{path}:{lineno}: expected 6 fields, got {len(fields)}")
            query_id, _, candidate_id, _, score_str = fields[:5]
            try:
                score = float(score_str)
            except ValueError:
                raise ParseError(f"{path}:{lineno}: score {score_str!r} is not a number") from None
            if not math.isfinite(score):
                raise ParseError(f"{path}:{lineno}: non-finite score {score_str!r}")
            per_query = by_query.setdefault(query_id, {})
            if candidate_id in per_query:
                raise ParseError(
                    f"{path}:{lineno}: duplicate candidate {candidate_id!r} for query {query_id!r}"
                )
            per_query[candidate_id] = score
    return {qid: Ranking.from_scores(qid, scores) for qid, scores in by_query.items()}
