"""Corpus-to-corpus transforms that fold document context into passage text.

Three transforms: prepend the document title, prepend extracted keyphrases
(semicolon-joined), or insert coreference antecedents after their mentions.
All transforms preserve corpus shape (ids, positions, counts) and build a
fresh Corpus, leaving the input untouched.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus, Document, Passage
from .errors import ParseError, ValidationError
from .fileio import atomic_write_lines
from .topicrank import DEFAULT_TOP_N, KeyphraseSet, extract_keyphrases

log = logging.getLogger(__name__)


def _rebuild(corpus: Corpus, text_for) -> Corpus:
    documents = []
    for doc in corpus.documents():
        passages = tuple(
            Passage(p.passage_id, text_for(doc, p), p.doc_id, p.position)
            for p in doc.passages
        )
        documents.append(Document(doc.doc_id, doc.title, passages))
    return Corpus(documents)


def prepend_title(corpus: Corpus) -> Corpus:
    """Prefix each passage with its document title and a space separator.

    Documents without a title (absent or whitespace-only, normalized at load
    time) pass through unchanged.
    """
    def text_for(doc, passage):
        if doc.title:
            return f"{doc.title} {passage.text}"
        return passage.text

    return _rebuild(corpus, text_for)


def extract_corpus_keyphrases(corpus: Corpus, n: int = DEFAULT_TOP_N) -> dict[str, KeyphraseSet]:
    """Run keyphrase extraction over every document."""
    return {doc.doc_id: extract_keyphrases(doc, n) for doc in corpus.documents()}


def prepend_keyphrases(corpus: Corpus, keyphrases: dict[str, KeyphraseSet]) -> Corpus:
    """Prefix each passage with semicolon-joined document keyphrases.

    Passages of documents with no keyphrase entry (or an empty one) pass
    through unchanged; missing documents are counted in a warning.
    """
    missing = sum(1 for doc in corpus.documents() if doc.doc_id not in keyphrases)
    if missing:
        log.warning("keyphrases missing for %d document(s); passages left unchanged", missing)

    def text_for(doc, passage):
        entry = keyphrases.get(doc.doc_id)
        if entry is None or not entry.phrases:
            return passage.text
        return f"{';'.join(entry.phrases)} {passage.text}"

    return _rebuild(corpus, text_for)


@dataclass(frozen=True)
class MentionRecord:
    """One predicted mention -> antecedent link inside a document."""

    doc_id: str
    passage_position: int
    start: int
    end: int  # exclusive character offset of the mention span
    antecedent_text: str
    antecedent_passage_position: int
    antecedent_start: int

    def __post_init__(self):
        if self.end <= self.start or self.start < 0:
            raise ValidationError(f"bad mention span [{self.start}, {self.end}) in {self.doc_id!r}")
        if (self.antecedent_passage_position, self.antecedent_start) >= (
            self.passage_position,
            self.start,
        ):
            raise ValidationError(
                f"antecedent does not precede mention at {self.doc_id!r} "
                f"passage {self.passage_position} offset {self.start}"
            )


_MENTION_FIELDS = (
    "doc_id", "passage_position", "start", "end",
    "antecedent_text", "antecedent_passage_position", "antecedent_start",
)


def load_mentions(path: str | Path) -> list[MentionRecord]:
    """Load a JSON-lines mention sidecar produced by an external resolver."""
    path = Path(path)
    records = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: malformed JSON: {exc}") from None
            missing = [f for f in _MENTION_FIELDS if f not in obj]
            if missing:
                raise ParseError(f"{path}:{lineno}: missing field(s) {missing}")
            try:
                records.append(MentionRecord(**{f: obj[f] for f in _MENTION_FIELDS}))
            except ValidationError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
    return records


def annotate_coref(corpus: Corpus, mentions: list[MentionRecord]) -> Corpus:
    """Insert " (antecedent)" after each mention whose earliest antecedent
    lies in a different passage.

    Per mention span, the earliest antecedent by (passage position, character
    start) wins. Mentions resolved within their own passage are skipped: only
    across-passage links add document context. Overlapping spans keep the
    outer mention; insertions apply right to left so offsets stay valid.
    """
    chosen: dict[tuple[str, int, int, int], MentionRecord] = {}
    for record in mentions:
        key = (record.doc_id, record.passage_position, record.start, record.end)
        current = chosen.get(key)
        if current is None or _antecedent_order(record) < _antecedent_order(current):
            chosen[key] = record

    by_passage: dict[tuple[str, int], list[MentionRecord]] = {}
    for record in chosen.values():
        if record.antecedent_passage_position == record.passage_position:
            continue  # in-passage coreference adds no document context
        by_passage.setdefault((record.doc_id, record.passage_position), []).append(record)

    new_texts: dict[str, str] = {}
    for (doc_id, position), passage_mentions in by_passage.items():
        if not corpus.has_document(doc_id):
            raise ValidationError(f"mention references unknown document {doc_id!r}")
        doc = corpus.document(doc_id)
        if position < 1 or position > len(doc.passages):
            raise ValidationError(
                f"mention references passage {position} of {doc_id!r} "
                f"which has {len(doc.passages)} passages"
            )
        passage = doc.passages[position - 1]
        for record in passage_mentions:
            if record.end > len(passage.text):
                raise ValidationError(
                    f"mention span [{record.start}, {record.end}) exceeds text of "
                    f"{passage.passage_id!r} (length {len(passage.text)})"
                )
        kept = _drop_inner_spans(passage_mentions)
        text = passage.text
        for record in sorted(kept, key=lambda r: -r.end):
            text = f"{text[:record.end]} ({record.antecedent_text}){text[record.end:]}"
        new_texts[passage.passage_id] = text

    def text_for(doc, passage):
        return new_texts.get(passage.passage_id, passage.text)

    return _rebuild(corpus, text_for)


def _antecedent_order(record: MentionRecord) -> tuple:
    return (
        record.antecedent_passage_position,
        record.antecedent_start,
        record.antecedent_text,
    )


def _drop_inner_spans(records: list[MentionRecord]) -> list[MentionRecord]:
    # outer span wins; an overlapping later span is dropped
    kept: list[MentionRecord] = []
    for record in sorted(records, key=lambda r: (r.start, -r.end)):
        if kept and record.start < kept[-1].end:
            continue
        kept.append(record)
    return kept


def save_keyphrase_cache(keyphrases: dict[str, KeyphraseSet], path: str | Path) -> None:
    lines = [
        json.dumps({"doc_id": doc_id, "phrases": list(entry.phrases)}, ensure_ascii=False)
        for doc_id, entry in sorted(keyphrases.items())
    ]
    atomic_write_lines(path, lines)


def load_keyphrase_cache(path: str | Path) -> dict[str, KeyphraseSet]:
    path = Path(path)
    cache = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: malformed JSON: {exc}") from None
            if "doc_id" not in obj or "phrases" not in obj:
                raise ParseError(f"{path}:{lineno}: expected doc_id and phrases fields")
            cache[obj["doc_id"]] = KeyphraseSet(obj["doc_id"], tuple(obj["phrases"]))
    return cache
