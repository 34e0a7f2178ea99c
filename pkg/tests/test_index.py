import math
import random

import pytest

from conftest import make_corpus, random_corpus
from oracles import bm25_oracle, rank_oracle
from passagekit.analysis import tokenize
from passagekit.corpus import Query, document_text
from passagekit.errors import ValidationError
from passagekit.index import bm25_score, build_index, load_index, save_index, search


def test_avg_length_is_mean_token_count():
    # two passages of 3 and 5 tokens (no stopwords, stemming-neutral tokens)
    corpus = make_corpus({"d": (None, ["aa bb cc", "dd ee ff gg hh"])})
    index = build_index(corpus, "passage")
    assert index.avg_length == 4.0
    assert index.num_candidates == 2


def test_document_granularity_concatenates_title_and_passages():
    corpus = make_corpus({"d": ("aa bb", ["cc"])})
    index = build_index(corpus, "document")
    assert index.num_candidates == 1
    assert index.lengths["d"] == 3
    without_titles = build_index(corpus, "document", include_titles=False)
    assert without_titles.lengths["d"] == 1


def test_document_text_rendering(tiny_corpus):
    doc = tiny_corpus.document("d1")
    assert document_text(doc) == "Alpha Title quark lepton boson gluon photon"
    assert document_text(doc, include_title=False) == "quark lepton boson gluon photon"
    assert document_text(tiny_corpus.document("d2")).startswith("meson")


def test_df_matches_brute_force_count():
    rng = random.Random(11)
    corpus = random_corpus(rng, num_docs=50)
    index = build_index(corpus, "document")
    token_lists = {
        d.doc_id: tokenize(document_text(d)) for d in corpus.documents()
    }
    for term in index.postings:
        expected = sum(1 for tokens in token_lists.values() if term in tokens)
        assert index.df(term) == expected


def test_invariants_hold_after_build():
    rng = random.Random(5)
    index = build_index(random_corpus(rng, num_docs=20), "passage")
    index.validate()
    total = sum(index.lengths.values())
    assert abs(total / index.num_candidates - index.avg_length) <= 1e-9


def test_empty_corpus_rejected():
    with pytest.raises(ValidationError):
        build_index(make_corpus({}), "passage")


def test_bm25_single_candidate_hand_value():
    # N=1, df=1, dl=avgdl, tf=1, k1=0.9, b=0.4 -> ln(4/3) / 1.9
    corpus = make_corpus({"d": (None, ["quark"])})
    index = build_index(corpus, "passage")
    score = bm25_score(index, ["quark"], "d#1")
    assert abs(score - math.log(4 / 3) / 1.9) < 1e-12


def test_bm25_absent_terms_contribute_zero():
    corpus = make_corpus({"d": (None, ["quark lepton"]), "e": (None, ["boson"])})
    index = build_index(corpus, "passage")
    present = bm25_score(index, ["quark"], "d#1")
    padded = bm25_score(index, ["quark", "gluon"], "d#1")
    assert present == padded
    assert bm25_score(index, ["gluon", "photon"], "d#1") == 0.0


def test_bm25_unknown_candidate():
    corpus = make_corpus({"d": (None, ["quark"])})
    index = build_index(corpus, "passage")
    with pytest.raises(ValidationError, match="ghost"):
        bm25_score(index, ["quark"], "ghost")


def test_bm25_matches_independent_oracle():
    rng = random.Random(23)
    corpus = random_corpus(rng, num_docs=5, max_passages=1)
    index = build_index(corpus, "passage")
    candidates = [(p.passage_id, tokenize(p.text)) for p in corpus.passages()]
    query_tokens = ["quark", "lepton", "boson", "quark"]  # repeated term on purpose
    expected = bm25_oracle(candidates, query_tokens)
    for cid, want in expected.items():
        assert abs(bm25_score(index, query_tokens, cid) - want) < 1e-12


def test_bm25_monotone_in_tf():
    # same candidate length, tf of "quark" grows, everything else fixed
    low = make_corpus({"d": (None, ["quark aa bb cc"]), "e": (None, ["dd ee ff gg"])})
    high = make_corpus({"d": (None, ["quark quark bb cc"]), "e": (None, ["dd ee ff gg"])})
    s_low = bm25_score(build_index(low, "passage"), ["quark"], "d#1")
    s_high = bm25_score(build_index(high, "passage"), ["quark"], "d#1")
    assert s_high >= s_low


def test_search_matches_score_all_then_sort_oracle():
    rng = random.Random(29)
    corpus = random_corpus(rng, num_docs=20, max_passages=1)
    index = build_index(corpus, "passage")
    query = Query("q", "quark lepton muon")
    result = search(index, query, 5)
    candidates = [(p.passage_id, tokenize(p.text)) for p in corpus.passages()]
    oracle_scores = bm25_oracle(candidates, tokenize(query.text))
    expected = [(cid, s) for cid, s in rank_oracle(oracle_scores) if s > 0][:5]
    assert result.ids() == [cid for cid, _ in expected]
    for (_, got), (_, want) in zip(result.items, expected):
        assert abs(got - want) < 1e-12


def test_search_no_indexed_terms():
    corpus = make_corpus({"d": (None, ["quark"])})
    index = build_index(corpus, "passage")
    assert search(index, Query("q", "xylophone zebra"), 10).items == ()


def test_search_k_larger_than_candidates():
    corpus = make_corpus({"d": (None, ["quark"]), "e": (None, ["quark quark"])})
    index = build_index(corpus, "passage")
    result = search(index, Query("q", "quark"), 100)
    assert len(result) == 2


def test_search_rejects_bad_k():
    corpus = make_corpus({"d": (None, ["quark"])})
    index = build_index(corpus, "passage")
    with pytest.raises(ValidationError):
        search(index, Query("q", "quark"), 0)


def test_search_prefix_stability():
    rng = random.Random(31)
    corpus = random_corpus(rng, num_docs=30)
    index = build_index(corpus, "passage")
    query = Query("q", "quark boson gluon photon")
    small = search(index, query, 4)
    large = search(index, query, 15)
    assert large.items[: len(small)] == small.items


def test_unrelated_candidate_does_not_enter_results():
    corpus = make_corpus({
        "d1": (None, ["quark lepton"]),
        "d2": (None, ["quark boson"]),
    })
    extended = make_corpus({
        "d1": (None, ["quark lepton"]),
        "d2": (None, ["quark boson"]),
        "zz": (None, ["xylophone marimba"]),
    })
    query = Query("q", "quark lepton")
    before = search(build_index(corpus, "passage"), query, 10)
    after = search(build_index(extended, "passage"), query, 10)
    # collection statistics shift scores, but membership and order hold here
    assert after.ids() == before.ids()
    assert "zz#1" not in after.ids()


def test_index_round_trip_exact(tmp_path):
    rng = random.Random(41)
    index = build_index(random_corpus(rng, num_docs=12), "passage")
    save_index(index, tmp_path / "idx")
    reloaded = load_index(tmp_path / "idx")
    assert reloaded == index


def test_rebuild_is_byte_identical(tmp_path):
    corpus = make_corpus({"d": ("T", ["quark lepton", "boson"])})
    for name in ("a", "b"):
        save_index(build_index(corpus, "passage"), tmp_path / name)
    for fname in ("manifest.json", "postings.json", "lengths.json"):
        assert (tmp_path / "a" / fname).read_bytes() == (tmp_path / "b" / fname).read_bytes()


def test_load_rejects_wrong_version(tmp_path):
    corpus = make_corpus({"d": (None, ["quark"])})
    save_index(build_index(corpus, "passage"), tmp_path / "idx")
    manifest = tmp_path / "idx" / "manifest.json"
    manifest.write_text(manifest.read_text().replace('"format_version": 1', '"format_version": 99'))
    with pytest.raises(ValidationError, match="version"):
        load_index(tmp_path / "idx")
