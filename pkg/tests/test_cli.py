import json
from pathlib import Path

from passagekit.cli import main
from passagekit.corpus import load_corpus, load_judgments, load_queries
from passagekit.evaluation import evaluate_run
from passagekit.fusion import DocToPassageMap, FusionConfig, convex_fuse
from passagekit.index import load_index
from passagekit.ranking import Ranking, load_run, save_run

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS = str(FIXTURES / "corpus.jsonl")
QUERIES = str(FIXTURES / "queries.tsv")
QRELS = str(FIXTURES / "qrels.txt")
NEURAL = str(FIXTURES / "neural_run.trec")
MENTIONS = str(FIXTURES / "mentions.jsonl")
SUBSET = str(FIXTURES / "subset.txt")


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_index_manifest_counts(tmp_path):
    corpus = load_corpus(CORPUS)
    assert run_cli("index", "--corpus", CORPUS, "--granularity", "passage",
                   "--out", tmp_path / "pidx") == 0
    assert run_cli("index", "--corpus", CORPUS, "--granularity", "document",
                   "--out", tmp_path / "didx") == 0
    p_manifest = json.loads((tmp_path / "pidx" / "manifest.json").read_text())
    d_manifest = json.loads((tmp_path / "didx" / "manifest.json").read_text())
    assert p_manifest["num_candidates"] == corpus.num_passages
    assert d_manifest["num_candidates"] == corpus.num_documents


def test_index_rebuild_byte_identical(tmp_path):
    for name in ("one", "two"):
        run_cli("index", "--corpus", CORPUS, "--out", tmp_path / name)
    assert (tmp_path / "one" / "manifest.json").read_bytes() == \
        (tmp_path / "two" / "manifest.json").read_bytes()


def test_search_row_counts_and_determinism(tmp_path):
    run_cli("index", "--corpus", CORPUS, "--out", tmp_path / "idx")
    out_a = tmp_path / "a.trec"
    out_b = tmp_path / "b.trec"
    assert run_cli("search", "--index", tmp_path / "idx", "--queries", QUERIES,
                   "--k", 10, "--out", out_a) == 0
    run_cli("search", "--index", tmp_path / "idx", "--queries", QUERIES,
            "--k", 10, "--out", out_b)
    assert out_a.read_bytes() == out_b.read_bytes()
    runs = load_run(out_a)
    assert len(out_a.read_text().splitlines()) == sum(len(r) for r in runs.values())
    assert all(len(r) <= 10 for r in runs.values())


def test_search_matches_library(tmp_path):
    from passagekit.index import search

    run_cli("index", "--corpus", CORPUS, "--out", tmp_path / "idx")
    out = tmp_path / "run.trec"
    run_cli("search", "--index", tmp_path / "idx", "--queries", QUERIES,
            "--k", 20, "--out", out)
    runs = load_run(out)
    index = load_index(tmp_path / "idx")
    for query in load_queries(QUERIES)[:3]:
        expected = search(index, query, 20)
        assert runs[query.query_id] == expected


def test_fuse_alpha_zero_matches_normalized_neural(tmp_path):
    run_cli("index", "--corpus", CORPUS, "--granularity", "document",
            "--out", tmp_path / "didx")
    doc_run = tmp_path / "docs.trec"
    run_cli("search", "--index", tmp_path / "didx", "--queries", QUERIES,
            "--k", 100, "--out", doc_run)
    fused_path = tmp_path / "fused.trec"
    assert run_cli("fuse", "--doc-run", doc_run, "--passage-run", NEURAL,
                   "--corpus", CORPUS, "--alpha", 0.0, "--out", fused_path) == 0
    fused = load_run(fused_path)
    from passagekit.fusion import normalize

    neural = load_run(NEURAL)
    for qid, ranking in neural.items():
        numbered = dict(fused[qid].items)
        for pid, score in normalize(ranking).items:
            assert abs(numbered[pid] - score) < 1e-12


def test_fuse_matches_library_convex_fuse(tmp_path):
    run_cli("index", "--corpus", CORPUS, "--granularity", "document",
            "--out", tmp_path / "didx")
    doc_run = tmp_path / "docs.trec"
    run_cli("search", "--index", tmp_path / "didx", "--queries", QUERIES,
            "--k", 100, "--out", doc_run)
    fused_path = tmp_path / "fused.trec"
    run_cli("fuse", "--doc-run", doc_run, "--passage-run", NEURAL,
            "--corpus", CORPUS, "--alpha", 0.3, "--out", fused_path)
    fused = load_run(fused_path)
    mapping = DocToPassageMap.from_corpus(load_corpus(CORPUS))
    doc_runs = load_run(doc_run)
    neural = load_run(NEURAL)
    cfg = FusionConfig(alpha=0.3)
    for qid in fused:
        expected = convex_fuse(
            doc_runs.get(qid, Ranking(qid)), neural.get(qid, Ranking(qid)), mapping, cfg
        )
        assert fused[qid] == expected


def test_fuse_reports_unresolved_passage_count(tmp_path, capsys):
    doc_run = tmp_path / "docs.trec"
    doc_run.write_text("q00 Q0 coral-00 1 1.0 bm25\n", encoding="utf-8")
    bad = tmp_path / "bad.trec"
    bad.write_text(
        "q00 Q0 ghost-1 1 2.0 neural\nq00 Q0 ghost-2 2 1.0 neural\n", encoding="utf-8"
    )
    assert run_cli("fuse", "--doc-run", doc_run, "--passage-run", bad,
                   "--corpus", CORPUS, "--out", tmp_path / "f.trec") == 2
    err = capsys.readouterr().err
    assert "2 passage id(s)" in err and "ghost-1" in err


def test_hier_with_empty_doc_run_is_empty(tmp_path):
    empty = tmp_path / "empty.trec"
    empty.write_text("", encoding="utf-8")
    out = tmp_path / "hier.trec"
    assert run_cli("hier", "--doc-run", empty, "--passage-run", NEURAL,
                   "--corpus", CORPUS, "--out", out) == 0
    assert out.read_text() == ""


def test_contextualize_none_round_trips(tmp_path):
    out = tmp_path / "out.jsonl"
    assert run_cli("contextualize", "--corpus", CORPUS, "--transform", "none",
                   "--out", out) == 0
    assert load_corpus(out) == load_corpus(CORPUS)


def test_contextualize_title_prefixes_every_titled_passage(tmp_path):
    out = tmp_path / "titled.jsonl"
    run_cli("contextualize", "--corpus", CORPUS, "--transform", "title", "--out", out)
    before = load_corpus(CORPUS)
    after = load_corpus(out)
    for doc in before.documents():
        for passage in doc.passages:
            expected = f"{doc.title} {passage.text}" if doc.title else passage.text
            assert after.passage(passage.passage_id).text == expected


def test_contextualize_keyphrase_cache_determinism(tmp_path):
    outs = []
    for name in ("kp1.jsonl", "kp2.jsonl"):
        out = tmp_path / name
        run_cli("contextualize", "--corpus", CORPUS, "--transform", "keyphrase",
                "--keyphrase-cache", tmp_path / "cache.jsonl", "--out", out)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert (tmp_path / "cache.jsonl").exists()


def test_contextualize_coref_inserts_antecedent(tmp_path):
    out = tmp_path / "coref.jsonl"
    assert run_cli("contextualize", "--corpus", CORPUS, "--transform", "coref",
                   "--mentions", MENTIONS, "--out", out) == 0
    after = load_corpus(out)
    assert "the mountain (Mount Vapor)" in after.passage("volcano-coref#2").text


def test_evaluate_perfect_run_scores_100(tmp_path, capsys):
    judgments = load_judgments(QRELS, "binary")
    rankings = {}
    for qid in judgments.entries:
        rankings[qid] = Ranking.from_scores(qid, {pid: 1.0 for pid in judgments.relevant_for(qid)})
    run_path = tmp_path / "perfect.trec"
    save_run(rankings, run_path)
    assert run_cli("evaluate", "--run", run_path, "--qrels", QRELS,
                   "--out-dir", tmp_path / "eval") == 0
    captured = capsys.readouterr().out
    assert "ndcg@10: 100.0" in captured
    assert "recall@100: 100.0" in captured
    summary = (tmp_path / "eval" / "summary.csv").read_text().splitlines()
    assert summary[0] == "metric,mean_x100,num_queries,num_excluded"
    assert summary[1].startswith("ndcg@10,100.0")


def test_evaluate_subset_singleton(tmp_path, capsys):
    judgments = load_judgments(QRELS, "binary")
    qid = sorted(judgments.entries)[0]
    rankings = {
        q: Ranking.from_scores(q, {pid: 1.0 for pid in judgments.relevant_for(q)})
        for q in judgments.entries
    }
    run_path = tmp_path / "run.trec"
    save_run(rankings, run_path)
    subset = tmp_path / "one.txt"
    subset.write_text(qid + "\n", encoding="utf-8")
    run_cli("evaluate", "--run", run_path, "--qrels", QRELS,
            "--subset", subset, "--out-dir", tmp_path / "eval")
    per_query = (tmp_path / "eval" / "per_query.csv").read_text().splitlines()
    assert len([line for line in per_query if line.startswith(qid)]) == 2  # both metrics
    assert len(per_query) == 1 + 2  # header + one query x two metrics


def test_evaluate_matches_library(tmp_path):
    run_cli("index", "--corpus", CORPUS, "--out", tmp_path / "idx")
    run_path = tmp_path / "run.trec"
    run_cli("search", "--index", tmp_path / "idx", "--queries", QUERIES,
            "--k", 50, "--out", run_path)
    run_cli("evaluate", "--run", run_path, "--qrels", QRELS, "--out-dir", tmp_path / "eval")
    reports = evaluate_run(load_run(run_path), load_judgments(QRELS, "binary"))
    summary = (tmp_path / "eval" / "summary.csv").read_text().splitlines()[1:]
    for report, line in zip(reports, summary):
        assert line == (
            f"{report.label},{100.0 * report.mean:.1f},{report.num_queries},{report.num_excluded}"
        )


def test_sweep_outputs_grid_sized_csv(tmp_path, capsys):
    run_cli("index", "--corpus", CORPUS, "--granularity", "document",
            "--out", tmp_path / "didx")
    doc_run = tmp_path / "docs.trec"
    run_cli("search", "--index", tmp_path / "didx", "--queries", QUERIES,
            "--k", 100, "--out", doc_run)
    out = tmp_path / "sweep.csv"
    assert run_cli("sweep", "--doc-run", doc_run, "--passage-run", NEURAL,
                   "--corpus", CORPUS, "--qrels", QRELS,
                   "--grid", "0.0,0.5,1.0", "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "alpha,mean_ndcg10"
    assert len(lines) == 4
    assert "best_alpha=" in capsys.readouterr().out


def test_analyze_jaccard_reports_delta(tmp_path, capsys):
    out = tmp_path / "jaccard.csv"
    assert run_cli("analyze-jaccard", "--corpus", CORPUS, "--queries", QUERIES,
                   "--qrels", QRELS, "--transform", "title", "--out", out) == 0
    captured = capsys.readouterr().out
    assert "delta:" in captured
    assert out.read_text().startswith("variant,mean_jaccard_x100")


def test_analyze_jaccard_other_transforms(tmp_path, capsys):
    assert run_cli("analyze-jaccard", "--corpus", CORPUS, "--queries", QUERIES,
                   "--qrels", QRELS, "--transform", "keyphrase",
                   "--keyphrase-cache", tmp_path / "cache.jsonl") == 0
    assert run_cli("analyze-jaccard", "--corpus", CORPUS, "--queries", QUERIES,
                   "--qrels", QRELS, "--transform", "coref",
                   "--mentions", MENTIONS) == 0
    assert capsys.readouterr().out.count("delta:") == 2


def test_depth_stats_histogram(tmp_path, capsys):
    out = tmp_path / "depth.csv"
    assert run_cli("depth-stats", "--corpus", CORPUS, "--qrels", QRELS, "--out", out) == 0
    captured = capsys.readouterr().out
    assert "depth mean:" in captured
    lines = out.read_text().splitlines()
    assert lines[0] == "position,count"
    assert len(lines) > 1


def test_config_file_supplies_defaults(tmp_path):
    config = tmp_path / "exp.cfg"
    config.write_text(
        f"corpus = {CORPUS}\n"
        "granularity = document\n"
        f"out = {tmp_path / 'idx'}\n",
        encoding="utf-8",
    )
    assert run_cli("--config", config, "index") == 0
    manifest = json.loads((tmp_path / "idx" / "manifest.json").read_text())
    assert manifest["granularity"] == "document"


def test_flags_override_config(tmp_path):
    config = tmp_path / "exp.cfg"
    config.write_text(f"corpus = {CORPUS}\ngranularity = document\n", encoding="utf-8")
    assert run_cli("--config", config, "index", "--granularity", "passage",
                   "--out", tmp_path / "idx") == 0
    manifest = json.loads((tmp_path / "idx" / "manifest.json").read_text())
    assert manifest["granularity"] == "passage"


def test_errors_exit_nonzero(tmp_path, capsys):
    assert run_cli("index", "--corpus", tmp_path / "missing.jsonl",
                   "--out", tmp_path / "idx") == 2
    assert "error:" in capsys.readouterr().err
    bad_qrels = tmp_path / "bad.txt"
    bad_qrels.write_text("q1 0 p1 9\n", encoding="utf-8")
    assert run_cli("depth-stats", "--corpus", CORPUS, "--qrels", bad_qrels) == 2
