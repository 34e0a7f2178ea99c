"""Analysis chain for lexical retrieval: lowercase, split, stop, stem.

The chain is deterministic by construction; TOKENIZER_VERSION is written
into index manifests so persisted indexes can refuse mismatched tokenizers.
"""

import re

from .porter import stem

# Classic 33-term English stopword list (Lucene's StandardAnalyzer set).
STOPWORDS = frozenset(
    {
        "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "if",
        "in", "into", "is", "it", "no", "not", "of", "on", "or", "such",
        "that", "the", "their", "then", "there", "these", "they", "this",
        "to", "was", "will", "with",
    }
)

# Alphanumeric runs; underscore is excluded on purpose.
WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)

TOKENIZER_VERSION = "lucene33-porter-v1"


def tokenize(text: str) -> list[str]:
    """Split text into normalized index terms.

    Lowercases, splits on non-alphanumeric boundaries, removes stopwords,
    then Porter-stems each surviving token. Empty input yields [].
    """
    tokens = []
    for match in WORD_RE.finditer(text.lower()):
        token = match.group()
        if token in STOPWORDS:
            continue
        tokens.append(stem(token))
    return tokens
