"""Graph-based keyphrase extraction over topic clusters.

Pipeline per document:
  1. candidate phrases: maximal runs of content words (alphabetic tokens not
     on the chunker's function-word list) over the full document text;
  2. candidates sharing similar stem sets are merged into topics by
     average-linkage agglomerative clustering (Jaccard over stem sets,
     merge threshold 0.25);
  3. topics form a complete graph weighted by reciprocal word-offset
     distances between candidate occurrences;
  4. topics are ranked by a damped random-walk score (damping 0.85,
     iterated until the L1 change drops below 1e-6 or 100 iterations);
  5. each top topic emits the candidate whose first occurrence is earliest.

Candidate selection uses a stopword-delimited noun-chunk heuristic rather
than a POS tagger, so the stage is a configuration seam; the clustering,
graph and ranking stages are exact.
"""

from dataclasses import dataclass, field

from .analysis import WORD_RE
from .corpus import Document
from .porter import stem

DEFAULT_TOP_N = 10
CLUSTER_THRESHOLD = 0.25
DAMPING = 0.85
CONVERGENCE_TOL = 1e-6
MAX_ITERATIONS = 100

# Function words that terminate candidate chunks. Deliberately broader than
# the 33-term index stopword list: chunk boundaries need verbs, pronouns and
# prepositions too.
CHUNK_FUNCTION_WORDS = frozenset(
    """
    a about above after again against all also although am among amongst an
    and any are around as at back be because been before being below between
    both but by came can cannot come could did do does doing down during each
    either enough even ever every few first for from further get gets got had
    has have having he her here hers herself him himself his how however i if
    in include includes including into is it its itself just last less like
    made make makes many may me might more most much must my myself near
    neither never new next no nor not now of off often on once one only onto
    or other others otherwise our ours ourselves out over own per perhaps
    rather same second several shall she should since so some still such than
    that the their theirs them themselves then there therefore these they
    this those though three through thus to together too toward towards two
    under until up upon us use used using very via was we well were what when
    where whether which while who whom whose why will within without would
    yet you your yours yourself yourselves
    """.split()
)


@dataclass(frozen=True)
class PhraseCandidate:
    stems: tuple[str, ...]
    surface: str  # lowercased words of the earliest occurrence
    first_offset: int  # word offset of the earliest occurrence
    offsets: tuple[int, ...]  # word offsets of every occurrence

    @property
    def stem_set(self) -> frozenset:
        return frozenset(self.stems)


@dataclass(frozen=True)
class KeyphraseSet:
    doc_id: str
    phrases: tuple[str, ...]


@dataclass
class TopicGraph:
    """Clustered candidates with their complete weighted graph and rank scores."""

    topics: list[list[PhraseCandidate]]
    weights: dict[tuple[int, int], float] = field(default_factory=dict)  # key i < j
    scores: list[float] = field(default_factory=list)

    def weight(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        return self.weights.get((min(i, j), max(i, j)), 0.0)


def extract_candidates(text: str) -> list[PhraseCandidate]:
    """Chunk document text into candidate phrases with word offsets.

    A chunk is broken by function words, non-alphabetic tokens, and any
    punctuation between adjacent words.
    """
    matches = list(WORD_RE.finditer(text))
    runs: list[tuple[int, list[str]]] = []
    current: list[str] = []
    start = 0
    prev_end = None
    for offset, match in enumerate(matches):
        word = match.group().lower()
        punctuated = prev_end is not None and text[prev_end:match.start()].strip() != ""
        prev_end = match.end()
        if word.isalpha() and word not in CHUNK_FUNCTION_WORDS:
            if current and punctuated:
                runs.append((start, current))
                current = []
            if not current:
                start = offset
            current.append(word)
        elif current:
            runs.append((start, current))
            current = []
    if current:
        runs.append((start, current))

    by_stems: dict[tuple[str, ...], dict] = {}
    for offset, chunk in runs:
        stems = tuple(stem(w) for w in chunk)
        entry = by_stems.setdefault(stems, {"surface": " ".join(chunk), "offsets": []})
        entry["offsets"].append(offset)
    candidates = []
    for stems, entry in by_stems.items():
        offsets = tuple(sorted(entry["offsets"]))
        candidates.append(PhraseCandidate(stems, entry["surface"], offsets[0], offsets))
    candidates.sort(key=lambda c: (c.first_offset, c.stems))
    return candidates


def _stem_jaccard(a: frozenset, b: frozenset) -> float:
    return len(a & b) / len(a | b)


def cluster_topics(
    candidates: list[PhraseCandidate],
    threshold: float = CLUSTER_THRESHOLD,
) -> list[list[PhraseCandidate]]:
    """Average-linkage agglomerative clustering over stem-set similarity.

    Merging continues while the most similar cluster pair reaches the
    threshold. Cluster similarities are maintained with the Lance-Williams
    update for average linkage; ties pick the smallest index pair, keeping
    the result deterministic.
    """
    n = len(candidates)
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    sim: dict[tuple[int, int], float] = {}
    for i in range(n):
        for j in range(i + 1, n):
            sim[(i, j)] = _stem_jaccard(candidates[i].stem_set, candidates[j].stem_set)

    while len(members) > 1:
        best_pair = None
        best_sim = -1.0
        for pair in sorted(sim):
            if sim[pair] > best_sim:
                best_sim = sim[pair]
                best_pair = pair
        if best_pair is None or best_sim < threshold:
            break
        a, b = best_pair
        size_a, size_b = len(members[a]), len(members[b])
        for c in members:
            if c == a or c == b:
                continue
            key_ac = (min(a, c), max(a, c))
            key_bc = (min(b, c), max(b, c))
            sim[key_ac] = (size_a * sim[key_ac] + size_b * sim[key_bc]) / (size_a + size_b)
            del sim[key_bc]
        del sim[(a, b)]
        members[a].extend(members[b])
        del members[b]

    topics = []
    for key in sorted(members):
        topic = sorted(
            (candidates[i] for i in members[key]), key=lambda c: (c.first_offset, c.stems)
        )
        topics.append(topic)
    topics.sort(key=lambda t: (t[0].first_offset, t[0].stems))
    return topics


def _chunking_text(document: Document, include_title: bool) -> str:
    # join with " . " so title and passage boundaries terminate chunks
    # without adding word offsets
    parts = []
    if include_title and document.title:
        parts.append(document.title)
    parts.extend(p.text for p in document.passages)
    return " . ".join(parts)


def build_topic_graph(document: Document, include_title: bool = True) -> TopicGraph:
    """Extract, cluster and rank a document's topics."""
    candidates = extract_candidates(_chunking_text(document, include_title))
    topics = cluster_topics(candidates)
    graph = TopicGraph(topics)
    for i in range(len(topics)):
        for j in range(i + 1, len(topics)):
            weight = 0.0
            for ci in topics[i]:
                for cj in topics[j]:
                    for pi in ci.offsets:
                        for pj in cj.offsets:
                            if pi != pj:
                                weight += 1.0 / abs(pi - pj)
            if weight > 0.0:
                graph.weights[(i, j)] = weight
    graph.scores = _rank(graph)
    return graph


def _rank(graph: TopicGraph) -> list[float]:
    n = len(graph.topics)
    if n == 0:
        return []
    out_sum = [sum(graph.weight(j, k) for k in range(n)) for j in range(n)]
    scores = [1.0] * n
    for _ in range(MAX_ITERATIONS):
        updated = []
        for i in range(n):
            incoming = sum(
                graph.weight(i, j) / out_sum[j] * scores[j]
                for j in range(n)
                if j != i and out_sum[j] > 0.0
            )
            updated.append((1.0 - DAMPING) + DAMPING * incoming)
        change = sum(abs(a - b) for a, b in zip(updated, scores))
        scores = updated
        if change < CONVERGENCE_TOL:
            break
    return scores


def extract_keyphrases(
    document: Document,
    n: int = DEFAULT_TOP_N,
    include_title: bool = True,
) -> KeyphraseSet:
    """Top-n keyphrases for a document; empty set when it has no candidates."""
    graph = build_topic_graph(document, include_title=include_title)
    if not graph.topics:
        return KeyphraseSet(document.doc_id, ())
    order = sorted(
        range(len(graph.topics)),
        key=lambda i: (-graph.scores[i], graph.topics[i][0].first_offset, graph.topics[i][0].stems),
    )
    phrases: list[str] = []
    for i in order:
        representative = min(graph.topics[i], key=lambda c: (c.first_offset, c.stems))
        if representative.surface not in phrases:
            phrases.append(representative.surface)
        if len(phrases) == n:
            break
    return KeyphraseSet(document.doc_id, tuple(phrases))
