"""Corpus data model, file ingestion and depth statistics.

File formats:
  corpus     JSON-lines, one document per line:
             {"doc_id": str, "title": str|null,
              "passages": [{"text": str, "position": int?, "passage_id": str?}]}
  queries    TSV: query_id<TAB>text
  judgments  TREC qrels: "query_id iter passage_id grade" (whitespace separated)
  subsets    one query_id per line, '#' comments allowed

A loaded Corpus is immutable and safe to share across threads.
"""

import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError, ValidationError
from .fileio import atomic_write_lines

log = logging.getLogger(__name__)

SPLITS = ("train", "dev", "test")
SCALE_GRADES = {"binary": (0, 1), "three_scale": (0, 1, 2)}

_WHITESPACE_RE = re.compile(r"\s")


def _check_id(kind: str, value) -> str:
    # ids travel through whitespace-separated run/qrels files
    if not isinstance(value, str) or not value:
        raise ValidationError(f"{kind} must be a non-empty string, got {value!r}")
    if _WHITESPACE_RE.search(value):
        raise ValidationError(f"{kind} {value!r} must not contain whitespace")
    return value


@dataclass(frozen=True)
class Passage:
    passage_id: str
    text: str
    doc_id: str
    position: int  # 1-based index within the parent document


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str | None
    passages: tuple[Passage, ...]


@dataclass(frozen=True)
class Query:
    query_id: str
    text: str
    split: str = "test"

    def __post_init__(self):
        _check_id("query_id", self.query_id)
        if self.split not in SPLITS:
            raise ValidationError(f"unknown split {self.split!r} for query {self.query_id!r}")
        if not self.text.strip():
            raise ValidationError(f"query {self.query_id!r} has empty text")


@dataclass(frozen=True)
class QuerySubset:
    name: str
    query_ids: frozenset[str]

    def __contains__(self, query_id: str) -> bool:
        return query_id in self.query_ids


@dataclass
class JudgmentSet:
    """Graded query -> passage relevance labels on a declared scale."""

    scale: str
    entries: dict[str, dict[str, int]]
    duplicate_count: int = 0

    def __post_init__(self):
        if self.scale not in SCALE_GRADES:
            raise ValidationError(f"unknown judgment scale {self.scale!r}")

    def validate(self) -> None:
        allowed = SCALE_GRADES[self.scale]
        for query_id, grades in self.entries.items():
            for passage_id, grade in grades.items():
                if grade not in allowed:
                    raise ValidationError(
                        f"grade {grade} for ({query_id!r}, {passage_id!r}) "
                        f"outside {self.scale} scale {allowed}"
                    )

    def grades_for(self, query_id: str) -> dict[str, int]:
        return self.entries.get(query_id, {})

    def relevant_for(self, query_id: str) -> set[str]:
        return {pid for pid, grade in self.grades_for(query_id).items() if grade > 0}

    def query_ids(self) -> list[str]:
        return list(self.entries)


class Corpus:
    """Immutable collection of documents with globally unique passage ids."""

    def __init__(self, documents):
        self._docs: dict[str, Document] = {}
        self._passages: dict[str, Passage] = {}
        for doc in documents:
            self._add(doc)

    def _add(self, doc: Document) -> None:
        _check_id("doc_id", doc.doc_id)
        if doc.doc_id in self._docs:
            raise ValidationError(f"duplicate doc_id {doc.doc_id!r}")
        if not doc.passages:
            raise ValidationError(f"document {doc.doc_id!r} has no passages")
        ordered = tuple(sorted(doc.passages, key=lambda p: p.position))
        if [p.position for p in ordered] != list(range(1, len(ordered) + 1)):
            raise ValidationError(
                f"document {doc.doc_id!r} passage positions are not contiguous from 1"
            )
        for passage in ordered:
            _check_id("passage_id", passage.passage_id)
            if passage.doc_id != doc.doc_id:
                raise ValidationError(
                    f"passage {passage.passage_id!r} carries doc_id {passage.doc_id!r} "
                    f"inside document {doc.doc_id!r}"
                )
            if not passage.text.strip():
                raise ValidationError(f"passage {passage.passage_id!r} has empty text")
            if passage.passage_id in self._passages:
                raise ValidationError(f"duplicate passage_id {passage.passage_id!r}")
            self._passages[passage.passage_id] = passage
        self._docs[doc.doc_id] = Document(doc.doc_id, doc.title, ordered)

    def __eq__(self, other) -> bool:
        return isinstance(other, Corpus) and self._docs == other._docs

    def __len__(self) -> int:
        return len(self._docs)

    @property
    def num_documents(self) -> int:
        return len(self._docs)

    @property
    def num_passages(self) -> int:
        return len(self._passages)

    def documents(self):
        return self._docs.values()

    def document(self, doc_id: str) -> Document:
        try:
            return self._docs[doc_id]
        except KeyError:
            raise ValidationError(f"unknown doc_id {doc_id!r}") from None

    def has_document(self, doc_id: str) -> bool:
        return doc_id in self._docs

    def passages(self):
        return self._passages.values()

    def passage(self, passage_id: str) -> Passage:
        try:
            return self._passages[passage_id]
        except KeyError:
            raise ValidationError(f"unknown passage_id {passage_id!r}") from None

    def has_passage(self, passage_id: str) -> bool:
        return passage_id in self._passages


def document_text(doc: Document, include_title: bool = True) -> str:
    """Render a document as one string: title (when present) then passages in order."""
    parts = []
    if include_title and doc.title:
        parts.append(doc.title)
    parts.extend(p.text for p in doc.passages)
    return " ".join(parts)


def _clean_title(raw) -> str | None:
    # empty and whitespace-only titles are normalized to absent
    if raw is None:
        return None
    if not isinstance(raw, str):
        raise ValidationError(f"title must be a string or null, got {type(raw).__name__}")
    return raw if raw.strip() else None


def load_corpus(path: str | Path, strict: bool = True) -> Corpus:
    """Load a JSON-lines corpus file.

    Passage ids default to "<doc_id>#<position>" when the input omits them.
    With strict=False, documents failing validation are skipped (counted in
    a warning) instead of aborting the load; parse errors always abort.
    """
    path = Path(path)
    documents = []
    skipped = 0
    seen_docs = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: malformed JSON: {exc}") from None
            try:
                doc = _document_from_record(record, lineno, path)
                if doc.doc_id in seen_docs:
                    raise ValidationError(f"{path}:{lineno}: duplicate doc_id {doc.doc_id!r}")
                seen_docs.add(doc.doc_id)
            except ValidationError:
                if strict:
                    raise
                skipped += 1
                continue
            documents.append(doc)
    if skipped:
        log.warning("skipped %d invalid document(s) while loading %s", skipped, path)
    try:
        return Corpus(documents)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def _document_from_record(record: dict, lineno: int, path: Path) -> Document:
    where = f"{path}:{lineno}"
    if not isinstance(record, dict) or "doc_id" not in record:
        raise ParseError(f"{where}: document record must be an object with a doc_id")
    doc_id = record["doc_id"]
    title = _clean_title(record.get("title"))
    raw_passages = record.get("passages")
    try:
        _check_id("doc_id", doc_id)
        if not isinstance(raw_passages, list) or not raw_passages:
            raise ValidationError(f"document {doc_id!r} has no passages")
        passages = []
        for i, entry in enumerate(raw_passages):
            if not isinstance(entry, dict) or "text" not in entry:
                raise ParseError(f"{where}: passage {i} of {doc_id!r} must be an object with text")
            position = entry.get("position", i + 1)
            if not isinstance(position, int):
                raise ParseError(f"{where}: passage position must be an integer")
            passage_id = entry.get("passage_id") or f"{doc_id}#{position}"
            _check_id("passage_id", passage_id)
            passages.append(Passage(passage_id, entry["text"], doc_id, position))
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from None
    return Document(doc_id, title, tuple(passages))


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back to the JSON-lines format accepted by load_corpus."""
    lines = []
    for doc in corpus.documents():
        record = {
            "doc_id": doc.doc_id,
            "title": doc.title,
            "passages": [
                {"passage_id": p.passage_id, "position": p.position, "text": p.text}
                for p in doc.passages
            ],
        }
        lines.append(json.dumps(record, ensure_ascii=False))
    atomic_write_lines(path, lines)


def load_queries(path: str | Path, split: str = "test") -> list[Query]:
    """Load a query TSV, preserving file order."""
    path = Path(path)
    queries = []
    seen = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if "\t" not in line:
                raise ParseError(f"{path}:{lineno}: expected query_id<TAB>text")
            query_id, text = line.split("\t", 1)
            if query_id in seen:
                raise ValidationError(f"{path}:{lineno}: duplicate query_id {query_id!r}")
            if not text.strip():
                raise ValidationError(f"{path}:{lineno}: query {query_id!r} has empty text")
            seen.add(query_id)
            queries.append(Query(query_id, text, split))
    return queries


def load_judgments(path: str | Path, scale: str) -> JudgmentSet:
    """Load TREC qrels. Duplicate (query, passage) pairs keep the last grade."""
    if scale not in SCALE_GRADES:
        raise ValidationError(f"unknown judgment scale {scale!r}")
    allowed = SCALE_GRADES[scale]
    path = Path(path)
    entries: dict[str, dict[str, int]] = {}
    duplicates = 0
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 4:
                raise ParseError(f"{path}:{lineno}: expected 4 fields, got {len(fields)}")
            query_id, _iter, passage_id, grade_str = fields
            try:
                grade = int(grade_str)
            except ValueError:
                raise ParseError(f"{path}:{lineno}: grade {grade_str!r} is not an integer") from None
            if grade not in allowed:
                raise ValidationError(
                    f"{path}:{lineno}: grade {grade} outside {scale} scale {allowed}"
                )
            per_query = entries.setdefault(query_id, {})
            if passage_id in per_query:
                duplicates += 1
            per_query[passage_id] = grade
    if duplicates:
        log.warning("%s: %d duplicate (query, passage) pair(s), kept last", path, duplicates)
    return JudgmentSet(scale, entries, duplicate_count=duplicates)


def load_query_subset(path: str | Path, name: str | None = None) -> QuerySubset:
    path = Path(path)
    ids = set()
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line and not line.startswith("#"):
                ids.add(line)
    return QuerySubset(name or path.stem, frozenset(ids))


@dataclass
class DepthSummary:
    """Distribution of the in-document position of relevant passages."""

    mean: float | None
    stddev: float | None  # population standard deviation
    histogram: dict[int, int] = field(default_factory=dict)
    num_pairs: int = 0
    num_missing: int = 0
    empty: bool = False


def depth_stats(corpus: Corpus, judgments: JudgmentSet) -> DepthSummary:
    """Collect positions of relevant (grade > 0) judged passages.

    Judged passages missing from the corpus are skipped and tallied.
    """
    positions = []
    missing = 0
    for query_id in judgments.entries:
        for passage_id, grade in judgments.grades_for(query_id).items():
            if grade <= 0:
                continue
            if not corpus.has_passage(passage_id):
                missing += 1
                continue
            positions.append(corpus.passage(passage_id).position)
    if not positions:
        return DepthSummary(None, None, {}, 0, missing, empty=True)
    mean = sum(positions) / len(positions)
    variance = sum((p - mean) ** 2 for p in positions) / len(positions)
    histogram = dict(sorted(Counter(positions).items()))
    return DepthSummary(mean, math.sqrt(variance), histogram, len(positions), missing)
