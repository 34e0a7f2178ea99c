"""Passage retrieval with document context.

BM25 inverted indexing, rank fusion of document and passage rankings,
hierarchical retrieval, contextualized passage construction and graded
TREC-style evaluation over document-segmented corpora.
"""

from .analysis import STOPWORDS, tokenize
from .contextualize import (
    MentionRecord,
    annotate_coref,
    extract_corpus_keyphrases,
    load_keyphrase_cache,
    load_mentions,
    prepend_keyphrases,
    prepend_title,
    save_keyphrase_cache,
)
from .corpus import (
    Corpus,
    DepthSummary,
    Document,
    JudgmentSet,
    Passage,
    Query,
    QuerySubset,
    depth_stats,
    document_text,
    load_corpus,
    load_judgments,
    load_queries,
    load_query_subset,
    write_corpus,
)
from .errors import ParseError, PassageKitError, ValidationError
from .evaluation import (
    JaccardReport,
    MetricReport,
    evaluate_run,
    jaccard_analysis,
    map_grades,
    ndcg_at_k,
    recall_at_k,
)
from .fusion import (
    DEFAULT_ALPHA_GRID,
    DocToPassageMap,
    FusionConfig,
    convex_fuse,
    hierarchical_retrieve,
    maxp_doc_ranking,
    normalize,
    sweep_alpha,
)
from .index import (
    InvertedIndex,
    bm25_score,
    build_index,
    load_index,
    save_index,
    search,
)
from .ranking import Ranking, load_run, save_run
from .topicrank import KeyphraseSet, TopicGraph, extract_keyphrases

__version__ = "0.1.0"

__all__ = [
    "Corpus", "Document", "Passage", "Query", "JudgmentSet", "QuerySubset",
    "DepthSummary", "depth_stats", "document_text", "load_corpus",
    "write_corpus", "load_queries", "load_judgments", "load_query_subset",
    "tokenize", "STOPWORDS",
    "InvertedIndex", "build_index", "bm25_score", "search", "save_index",
    "load_index",
    "Ranking", "load_run", "save_run",
    "FusionConfig", "DocToPassageMap", "normalize", "convex_fuse",
    "hierarchical_retrieve", "maxp_doc_ranking", "sweep_alpha",
    "DEFAULT_ALPHA_GRID",
    "KeyphraseSet", "TopicGraph", "extract_keyphrases",
    "MentionRecord", "load_mentions", "annotate_coref", "prepend_title",
    "prepend_keyphrases", "extract_corpus_keyphrases",
    "save_keyphrase_cache", "load_keyphrase_cache",
    "MetricReport", "map_grades", "ndcg_at_k", "recall_at_k", "evaluate_run",
    "JaccardReport", "jaccard_analysis",
    "PassageKitError", "ParseError", "ValidationError",
]
