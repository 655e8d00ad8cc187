import json
import os

import pytest
from click.testing import CliRunner

from seqnovel.cli import main
from seqnovel.corpus import load_corpus
from seqnovel.detector import load_detector


runner = CliRunner()


def invoke(*args):
    result = runner.invoke(main, [str(a) for a in args])
    assert result.exit_code == 0, result.output
    return result


@pytest.fixture(scope="module")
def chain(tmp_path_factory):
    """synth -> lda -> cluster -> train, shared by the command tests."""
    root = tmp_path_factory.mktemp("cli-chain")
    data = root / "data"
    invoke("synth", "--components", 2, "--vocab-size", 24,
           "--shared-fraction", 0.1, "--n-train", 40,
           "--n-test-normal", 12, "--n-test-novel", 12,
           "--len-min", 8, "--len-max", 14, "--seed", 3,
           "--out-dir", data)
    invoke("lda", "--corpus", data / "train.json", "--k", 2,
           "--iterations", 15, "--burn-in", 3, "--seed", 1,
           "-o", root / "topics.json")
    invoke("cluster", "--topicset", root / "topics.json", "--auto", "lda",
           "-o", root / "def.json")
    invoke("train", "--corpus", data / "train.json",
           "--topicset", root / "topics.json",
           "--definition", root / "def.json",
           "--epochs", 2, "--batch-size", 16, "--embed-dim", 8,
           "--hidden-dim", 12, "--fold-iterations", 20, "--quiet",
           "-o", root / "bundle")
    return root


def test_synth_writes_corpora(chain):
    train = load_corpus(str(chain / "data" / "train.json"))
    test = load_corpus(str(chain / "data" / "test.json"))
    assert len(train.sequences) == 40
    assert len(test.sequences) == 24
    assert sum(s.label == "novel" for s in test.sequences) == 12
    assert test.vocabulary.word_to_id == train.vocabulary.word_to_id


def test_synth_deterministic(tmp_path):
    args = ("synth", "--components", 2, "--vocab-size", 20, "--n-train", 10,
            "--n-test-normal", 4, "--n-test-novel", 4, "--len-min", 6,
            "--len-max", 9, "--seed", 7)
    invoke(*args, "--out-dir", tmp_path / "a")
    invoke(*args, "--out-dir", tmp_path / "b")
    for name in ("train.json", "test.json"):
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes()


def test_synth_optional_validation_split(tmp_path):
    result = invoke("synth", "--components", 2, "--vocab-size", 20,
                    "--n-train", 8, "--n-val-normal", 3, "--n-val-novel", 3,
                    "--n-test-normal", 3, "--n-test-novel", 3,
                    "--len-min", 6, "--len-max", 9, "--seed", 0,
                    "--out-dir", tmp_path)
    assert "val.json" in result.output
    assert len(load_corpus(str(tmp_path / "val.json")).sequences) == 6


def test_ingest_with_labels(tmp_path):
    seq = tmp_path / "seqs.txt"
    seq.write_text("a b a\nb c\n")
    labels = tmp_path / "labels.txt"
    labels.write_text("normal\nnovel\n")
    out = tmp_path / "corpus.json"
    result = invoke("ingest", "--sequences", seq, "--labels", labels,
                    "-o", out)
    assert "2 sequences" in result.output
    corpus = load_corpus(str(out))
    assert [s.label for s in corpus.sequences] == ["normal", "novel"]
    assert corpus.sequences[0].id == "seq-0"


def test_ingest_label_count_mismatch(tmp_path):
    seq = tmp_path / "seqs.txt"
    seq.write_text("a b\nc d\n")
    labels = tmp_path / "labels.txt"
    labels.write_text("normal\n")
    result = runner.invoke(main, ["ingest", "--sequences", str(seq),
                                  "--labels", str(labels),
                                  "-o", str(tmp_path / "out.json")])
    assert result.exit_code != 0
    assert "label sidecar has 1 lines" in result.output


def test_discretize_windows_and_anomalies(tmp_path):
    series = tmp_path / "series.txt"
    series.write_text("\n".join(f"{v / 10:.1f}" for v in range(100)) + "\n")
    anomalies = tmp_path / "anomalies.json"
    anomalies.write_text("[55]")
    out = tmp_path / "windows.json"
    result = invoke("discretize", "--series", series, "--anomalies", anomalies,
                    "--low", 0.0, "--high", 10.0, "--bin-width", 0.1,
                    "--window-length", 40, "-o", out)
    assert "2 windows (1 novel)" in result.output
    corpus = load_corpus(str(out))
    assert [s.label for s in corpus.sequences] == ["normal", "novel"]
    assert corpus.sequences[0].id == "win-0"


def test_discretize_anomaly_out_of_range(tmp_path):
    series = tmp_path / "series.txt"
    series.write_text("1.0\n2.0\n")
    anomalies = tmp_path / "anomalies.json"
    anomalies.write_text("[5]")
    result = runner.invoke(main, ["discretize", "--series", str(series),
                                  "--anomalies", str(anomalies),
                                  "--window-length", 1,
                                  "-o", str(tmp_path / "o.json")])
    assert result.exit_code != 0
    assert "anomaly index 5 outside series of 2" in result.output


def test_lda_echoes_topic_count(chain):
    result = invoke("lda", "--corpus", chain / "data" / "train.json",
                    "--k", 2, "--k", 3, "--iterations", 5, "--burn-in", 0,
                    "-o", chain / "topics23.json")
    assert "5 topics" in result.output


def test_cluster_requires_one_mode(chain):
    result = runner.invoke(main, ["cluster", "--topicset",
                                  str(chain / "topics.json"),
                                  "-o", str(chain / "x.json")])
    assert result.exit_code != 0
    assert "exactly one of" in result.output
    result = runner.invoke(main, ["cluster", "--topicset",
                                  str(chain / "topics.json"),
                                  "--definition", str(chain / "def.json"),
                                  "--auto", "kmeans",
                                  "-o", str(chain / "x.json")])
    assert result.exit_code != 0


def test_cluster_auto_kmeans(chain):
    out = chain / "def-kmeans.json"
    result = invoke("cluster", "--topicset", chain / "topics23.json",
                    "--auto", "kmeans", "--k", 2, "--seed", 0, "-o", out)
    assert "k=2" in result.output
    definition = json.loads(out.read_text())
    assert sorted(int(a["topic_id"]) for a in definition["assignment"]) == \
        list(range(5))


def test_train_echoes_bundle_hash(chain):
    assert (chain / "bundle" / "manifest.json").exists()
    detector = load_detector(str(chain / "bundle"))
    assert detector.cluster_definition.k == len(detector.models)


def test_score_prints_rows(chain):
    result = invoke("score", "--bundle", chain / "bundle",
                    "--corpus", chain / "data" / "test.json")
    lines = result.output.strip().splitlines()
    assert len(lines) == 24
    sid, cluster, pp = lines[0].split("\t")
    assert sid == "normal-0"
    assert float(pp) > 1.0


def test_score_json_output(chain, tmp_path):
    out = tmp_path / "scores.json"
    invoke("score", "--bundle", chain / "bundle",
           "--corpus", chain / "data" / "test.json", "-o", out)
    body = json.loads(out.read_text())
    assert len(body["scores"]) == 24
    assert set(body["scores"][0]) == {"id", "cluster", "perplexity"}


def test_eval_prints_table_and_compares(chain, tmp_path):
    report_a = tmp_path / "a.json"
    result = invoke("eval", "--bundle", chain / "bundle",
                    "--test", chain / "data" / "test.json",
                    "--method", "first-pass", "-o", report_a)
    assert "Method" in result.output and "AUC" in result.output
    assert "first-pass" in result.output
    result = invoke("eval", "--bundle", chain / "bundle",
                    "--test", chain / "data" / "test.json",
                    "--validation", chain / "data" / "test.json",
                    "--method", "second-pass", "--compare", report_a)
    assert "first-pass" in result.output and "second-pass" in result.output
    report = json.loads(report_a.read_text())
    assert 0.0 <= report["auc"] <= 1.0


def test_baseline_knn(chain, tmp_path):
    out = tmp_path / "knn.json"
    result = invoke("baseline", "knn", "--train", chain / "data" / "train.json",
                    "--test", chain / "data" / "test.json", "--k", 3, "-o", out)
    assert "knn(k=3,p=2)" in result.output
    assert 0.0 <= json.loads(out.read_text())["auc"] <= 1.0


def test_baseline_knn_lcs(chain):
    result = invoke("baseline", "knn-lcs",
                    "--train", chain / "data" / "train.json",
                    "--test", chain / "data" / "test.json", "--k", 3)
    assert "knn-lcs(k=3)" in result.output


def test_baseline_isoforest_with_patterns(chain, tmp_path):
    patterns_out = tmp_path / "patterns.json"
    result = invoke("baseline", "isoforest",
                    "--train", chain / "data" / "train.json",
                    "--test", chain / "data" / "test.json",
                    "--features", "bow+sp", "--trees", 20,
                    "--top-patterns", 50, "--max-pattern-length", 2,
                    "--patterns-out", patterns_out)
    assert "mined" in result.output
    assert "isoforest(bow+sp)" in result.output
    patterns = json.loads(patterns_out.read_text())
    assert patterns and all("support" in p for p in patterns)


def test_project_topics_writes_payload(chain, tmp_path):
    out = tmp_path / "projection.json"
    invoke("project-topics", "--topicset", chain / "topics.json",
           "--corpus", chain / "data" / "train.json",
           "--iterations", 30, "--perplexity", 1.0, "-o", out)
    body = json.loads(out.read_text())
    assert set(body) >= {"coords", "glyphs", "chord", "topics", "runs"}
    assert len(body["coords"]) == 2
