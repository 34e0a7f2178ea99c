"""Inverted indexing and BM25 scoring at passage or document granularity.

The scoring function is the non-negative variant:

    score(q, c) = sum over query tokens t of
                  idf(t) * tf / (tf + k1 * (1 - b + b * dl / avgdl))
    idf(t)      = ln(1 + (N - df + 0.5) / (df + 0.5))

with defaults k1 = 0.9, b = 0.4. Indexes persist to a directory of JSON
files with a versioned manifest and round-trip exactly.
"""

import json
import math
from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .analysis import TOKENIZER_VERSION, tokenize
from .corpus import Corpus, Query, document_text
from .errors import ParseError, ValidationError
from .fileio import atomic_write_text
from .ranking import Ranking

DEFAULT_K1 = 0.9
DEFAULT_B = 0.4
INDEX_FORMAT_VERSION = 1
GRANULARITIES = ("passage", "document")


@dataclass
class InvertedIndex:
    granularity: str
    num_candidates: int
    avg_length: float
    postings: dict[str, list[tuple[str, int]]]  # term -> [(candidate_id, tf)], sorted by id
    lengths: dict[str, int]

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def tf(self, term: str, candidate_id: str) -> int:
        plist = self.postings.get(term)
        if not plist:
            return 0
        i = bisect_left(plist, (candidate_id,))
        if i < len(plist) and plist[i][0] == candidate_id:
            return plist[i][1]
        return 0

    def validate(self) -> None:
        if self.granularity not in GRANULARITIES:
            raise ValidationError(f"unknown granularity {self.granularity!r}")
        if self.num_candidates != len(self.lengths):
            raise ValidationError("num_candidates does not match lengths table")
        if self.num_candidates == 0:
            raise ValidationError("index has no candidates")
        expected = sum(self.lengths.values()) / self.num_candidates
        if abs(expected - self.avg_length) > 1e-9:
            raise ValidationError("avg_length inconsistent with lengths table")
        for term, plist in self.postings.items():
            ids = [cid for cid, _ in plist]
            if ids != sorted(ids) or len(ids) != len(set(ids)):
                raise ValidationError(f"postings for {term!r} not sorted/unique")
            for cid in ids:
                if cid not in self.lengths:
                    raise ValidationError(f"postings for {term!r} reference unknown {cid!r}")


def build_index(corpus: Corpus, granularity: str, include_titles: bool = True) -> InvertedIndex:
    """Index a corpus at the requested granularity.

    Passage granularity indexes each passage text alone; document granularity
    indexes title (optional) plus all passage texts in position order.
    """
    if granularity not in GRANULARITIES:
        raise ValidationError(f"unknown granularity {granularity!r}")
    if granularity == "passage":
        candidates = [(p.passage_id, p.text) for p in corpus.passages()]
    else:
        candidates = [
            (d.doc_id, document_text(d, include_title=include_titles))
            for d in corpus.documents()
        ]
    if not candidates:
        raise ValidationError("cannot index an empty corpus")

    postings: dict[str, list[tuple[str, int]]] = {}
    lengths: dict[str, int] = {}
    for candidate_id, text in candidates:
        tokens = tokenize(text)
        lengths[candidate_id] = len(tokens)
        for term, tf in Counter(tokens).items():
            postings.setdefault(term, []).append((candidate_id, tf))
    for plist in postings.values():
        plist.sort()
    avg_length = sum(lengths.values()) / len(lengths)
    index = InvertedIndex(granularity, len(lengths), avg_length, postings, lengths)
    index.validate()
    return index


def _idf(num_candidates: int, df: int) -> float:
    return math.log(1.0 + (num_candidates - df + 0.5) / (df + 0.5))


def bm25_score(
    index: InvertedIndex,
    query_tokens: list[str],
    candidate_id: str,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
) -> float:
    """Score one candidate against a tokenized query."""
    if candidate_id not in index.lengths:
        raise ValidationError(f"unknown candidate {candidate_id!r}")
    dl = index.lengths[candidate_id]
    norm = k1 * (1.0 - b + b * dl / index.avg_length)
    score = 0.0
    for term in query_tokens:
        tf = index.tf(term, candidate_id)
        if tf == 0:
            continue
        score += _idf(index.num_candidates, index.df(term)) * tf / (tf + norm)
    return score


def search(
    index: InvertedIndex,
    query: Query,
    k: int,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
) -> Ranking:
    """Exhaustive BM25 search over all candidates sharing a term with the query."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    scores: dict[str, float] = {}
    for term in tokenize(query.text):
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = _idf(index.num_candidates, len(plist))
        for candidate_id, tf in plist:
            dl = index.lengths[candidate_id]
            norm = k1 * (1.0 - b + b * dl / index.avg_length)
            scores[candidate_id] = scores.get(candidate_id, 0.0) + idf * tf / (tf + norm)
    items = sorted(
        ((cid, s) for cid, s in scores.items() if s > 0.0),
        key=lambda kv: (-kv[1], kv[0]),
    )
    return Ranking(query.query_id, tuple(items[:k]))


def save_index(index: InvertedIndex, directory: str | Path) -> None:
    """Persist an index as manifest.json + postings.json + lengths.json."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": INDEX_FORMAT_VERSION,
        "granularity": index.granularity,
        "num_candidates": index.num_candidates,
        "avg_length": index.avg_length,
        "tokenizer": TOKENIZER_VERSION,
    }
    atomic_write_text(directory / "manifest.json", json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    postings = {term: [[cid, tf] for cid, tf in plist] for term, plist in index.postings.items()}
    atomic_write_text(
        directory / "postings.json",
        json.dumps(postings, sort_keys=True, separators=(",", ":")) + "\n",
    )
    atomic_write_text(
        directory / "lengths.json",
        json.dumps(index.lengths, sort_keys=True, separators=(",", ":")) + "\n",
    )


def load_index(directory: str | Path) -> InvertedIndex:
    directory = Path(directory)
    try:
        manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{directory}/manifest.json: {exc}") from None
    version = manifest.get("format_version")
    if version != INDEX_FORMAT_VERSION:
        raise ValidationError(f"unsupported index format version {version!r}")
    tokenizer = manifest.get("tokenizer")
    if tokenizer != TOKENIZER_VERSION:
        raise ValidationError(
            f"index was built with tokenizer {tokenizer!r}, expected {TOKENIZER_VERSION!r}"
        )
    raw_postings = json.loads((directory / "postings.json").read_text(encoding="utf-8"))
    lengths = json.loads((directory / "lengths.json").read_text(encoding="utf-8"))
    postings = {term: [(cid, tf) for cid, tf in plist] for term, plist in raw_postings.items()}
    index = InvertedIndex(
        granularity=manifest["granularity"],
        num_candidates=manifest["num_candidates"],
        avg_length=manifest["avg_length"],
        postings=postings,
        lengths=lengths,
    )
    index.validate()
    return index
