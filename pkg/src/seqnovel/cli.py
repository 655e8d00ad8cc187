"""Command line front end. Every pipeline stage runs headlessly: ingest or
synthesize a corpus, fit the topic ensemble, build or load a cluster
definition, train, score, evaluate, and run the classical baselines. `serve`
starts the HTTP service."""
from __future__ import annotations

import functools
import json
import os

import click
import numpy as np

from . import baselines as bl
from . import clustering as cl
from . import corpus as cp
from . import detector as det
from . import lda as lda_mod
from .lstm import TrainConfig


def forward_errors(fn):
    @functools.wraps(fn)
    def inner(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, RuntimeError, OSError, KeyError) as exc:
            raise click.ClickException(str(exc))
    return inner


def _load_vocab_from(corpus_path: str | None):
    if corpus_path is None:
        return None
    return cp.load_corpus(corpus_path).vocabulary


@click.group()
def main():
    """Novelty detection for discrete sequences: topic-ensemble clustering
    with one language model per cluster, plus classical baselines."""


@main.command()
@click.option("--sequences", "seq_path", required=True, type=click.Path(exists=True),
              help="text file, one whitespace-separated sequence per line")
@click.option("--labels", "label_path", type=click.Path(exists=True),
              help="sidecar file with normal/novel/unlabeled per line")
@click.option("--min-frequency", default=1, show_default=True,
              help="tokens rarer than this in the input map to the unknown id")
@click.option("--vocabulary-from", "vocab_path", type=click.Path(exists=True),
              help="reuse the vocabulary of an existing corpus file")
@click.option("--id-prefix", default="seq", show_default=True)
@click.option("-o", "--output", required=True, type=click.Path())
@forward_errors
def ingest(seq_path, label_path, min_frequency, vocab_path, id_prefix, output):
    """Read raw token sequences into an encoded corpus file."""
    vocab = _load_vocab_from(vocab_path)
    corpus = cp.corpus_from_files(seq_path, label_path,
                                  min_frequency=min_frequency,
                                  vocabulary=vocab, id_prefix=id_prefix)
    cp.save_corpus(corpus, output)
    click.echo(f"{len(corpus)} sequences, vocabulary {len(corpus.vocabulary)} -> {output}")


@main.command()
@click.option("--series", "series_path", required=True, type=click.Path(exists=True),
              help="numeric file, one value per line")
@click.option("--anomalies", "anomaly_path", type=click.Path(exists=True),
              help="JSON sidecar holding the list of anomalous line indices")
@click.option("--low", default=0.0, show_default=True)
@click.option("--high", default=100.0, show_default=True)
@click.option("--bin-width", default=0.1, show_default=True)
@click.option("--window-length", default=40, show_default=True)
@click.option("--vocabulary-from", "vocab_path", type=click.Path(exists=True))
@click.option("--id-prefix", default="win", show_default=True)
@click.option("-o", "--output", required=True, type=click.Path())
@forward_errors
def discretize(series_path, anomaly_path, low, high, bin_width, window_length,
               vocab_path, id_prefix, output):
    """Bin a real-valued series into symbols and cut it into fixed windows;
    a window holding any flagged value is labeled novel."""
    values = cp.read_series_file(series_path)
    flags = [False] * len(values)
    if anomaly_path:
        with open(anomaly_path, encoding="utf-8") as fh:
            indices = json.load(fh)
        for idx in indices:
            if not 0 <= idx < len(values):
                raise ValueError(f"anomaly index {idx} outside series of {len(values)}")
            flags[idx] = True
    cfg = cp.BinConfig(low=low, high=high, bin_width=bin_width,
                       window_length=window_length)
    symbols = cp.discretize_time_series(values, cfg)
    windows = cp.windowize(symbols, flags, window_length, id_prefix=id_prefix)
    if not windows:
        raise ValueError("series shorter than one window")
    vocab = _load_vocab_from(vocab_path)
    if vocab is None:
        vocab = cp.build_vocabulary([w.tokens for w in windows])
    sequences = [cp.LabeledSequence(w.id, cp.encode(w.tokens, vocab), w.label)
                 for w in windows]
    corpus = cp.Corpus(vocab, sequences)
    cp.save_corpus(corpus, output)
    novel = sum(1 for s in sequences if s.label is cp.Label.NOVEL)
    click.echo(f"{len(sequences)} windows ({novel} novel), "
               f"{len(vocab)} symbols -> {output}")


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--k", "k_values", multiple=True, type=int,
              help="topic count per run; repeat for an ensemble")
@click.option("--num-runs", type=int, help="draw this many runs with random K")
@click.option("--k-min", default=2, show_default=True)
@click.option("--k-max", default=10, show_default=True)
@click.option("--alpha", type=float, help="document-topic prior, default 50/K")
@click.option("--beta", default=0.01, show_default=True)
@click.option("--iterations", default=200, show_default=True)
@click.option("--burn-in", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("-o", "--output", required=True, type=click.Path())
@forward_errors
def lda(corpus_path, k_values, num_runs, k_min, k_max, alpha, beta, iterations,
        burn_in, seed, output):
    """Fit the topic ensemble by collapsed Gibbs sampling."""
    corpus = cp.load_corpus(corpus_path)
    topic_set = lda_mod.run_ensemble(
        corpus, list(k_values) or None, num_runs=num_runs, k_min=k_min,
        k_max=k_max, alpha=alpha, beta=beta, iterations=iterations,
        burn_in=burn_in, seed=seed,
        progress=lambda done, total: click.echo(f"run {done}/{total} fitted"))
    lda_mod.save_topicset(topic_set, output)
    ks = [r.num_topics for r in topic_set.runs]
    click.echo(f"{topic_set.num_topics} topics from runs K={ks} -> {output}")


@main.command("project-topics")
@click.option("--topicset", "ts_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", type=click.Path(exists=True),
              help="corpus file supplying word strings for glyphs")
@click.option("--top-words", default=8, show_default=True)
@click.option("--perplexity", default=5.0, show_default=True)
@click.option("--iterations", default=500, show_default=True)
@click.option("--word-classes", "classes_path", type=click.Path(exists=True),
              help="JSON file mapping word -> class label")
@click.option("--seed", default=0, show_default=True)
@click.option("-o", "--output", required=True, type=click.Path())
@forward_errors
def project_topics(ts_path, corpus_path, top_words, perplexity, iterations,
                   classes_path, seed, output):
    """Emit the exploration payload: 2-d layout, glyph word lists, chord
    counts."""
    topic_set = lda_mod.load_topicset(ts_path)
    vocab = _load_vocab_from(corpus_path)
    classes = None
    if classes_path:
        with open(classes_path, encoding="utf-8") as fh:
            classes = json.load(fh)
    payload = cl.projection_payload(topic_set, vocab, top_words=top_words,
                                    word_classes=classes, perplexity=perplexity,
                                    iterations=iterations, seed=seed)
    with open(output, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
    click.echo(f"projection of {topic_set.num_topics} topics -> {output}")


@main.command()
@click.option("--topicset", "ts_path", required=True, type=click.Path(exists=True))
@click.option("--definition", "def_path", type=click.Path(exists=True),
              help="cluster definition JSON to validate against the topic set")
@click.option("--auto", "auto_mode", type=click.Choice(["kmeans", "lda"]),
              help="build the definition automatically instead")
@click.option("--k", type=int, help="cluster count for --auto kmeans; "
              "default picks it by silhouette")
@click.option("--name", default=None, help="definition name")
@click.option("--seed", default=0, show_default=True)
@click.option("-o", "--output", required=True, type=click.Path())
@forward_errors
def cluster(ts_path, def_path, auto_mode, k, name, seed, output):
    """Validate an expert cluster definition, or derive one automatically."""
    if (def_path is None) == (auto_mode is None):
        raise click.ClickException("provide exactly one of --definition or --auto")
    topic_set = lda_mod.load_topicset(ts_path)
    if def_path:
        definition = cl.load_definition(def_path)
        definition.validate_total(topic_set)
        if name:
            definition.name = name
    elif auto_mode == "kmeans":
        definition = cl.auto_definition_kmeans(topic_set, k=k, seed=seed,
                                               name=name or "kmeans-topics")
    else:
        definition = cl.auto_definition_lda(topic_set, name=name or "lda-topics")
    cl.save_definition(definition, output)
    click.echo(f"definition '{definition.name}' with k={definition.k} -> {output}")


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--topicset", "ts_path", required=True, type=click.Path(exists=True))
@click.option("--definition", "def_path", required=True, type=click.Path(exists=True))
@click.option("--epochs", default=20, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--learning-rate", default=1e-3, show_default=True)
@click.option("--clip-norm", default=5.0, show_default=True)
@click.option("--max-len", default=200, show_default=True)
@click.option("--embed-dim", default=32, show_default=True)
@click.option("--hidden-dim", default=64, show_default=True)
@click.option("--fold-iterations", default=100, show_default=True)
@click.option("--fold-seed", default=0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--quiet", is_flag=True)
@click.option("-o", "--output", "bundle_dir", required=True, type=click.Path())
@forward_errors
def train(corpus_path, ts_path, def_path, epochs, batch_size, learning_rate,
          clip_norm, max_len, embed_dim, hidden_dim, fold_iterations,
          fold_seed, seed, quiet, bundle_dir):
    """Partition the corpus by the definition and train one model per
    cluster; write the detector bundle."""
    corpus = cp.load_corpus(corpus_path)
    topic_set = lda_mod.load_topicset(ts_path)
    definition = cl.load_definition(def_path)
    cfg = TrainConfig(epochs=epochs, batch_size=batch_size,
                      learning_rate=learning_rate, clip_norm=clip_norm,
                      max_len=max_len, seed=seed)

    def progress(c, epoch, total, loss):
        if not quiet:
            click.echo(f"cluster {c}: epoch {epoch}/{total} loss {loss:.4f}")

    detector = det.train_detector(corpus, topic_set, definition, cfg,
                                  embed_dim=embed_dim, hidden_dim=hidden_dim,
                                  fold_iterations=fold_iterations,
                                  fold_seed=fold_seed, progress=progress)
    bundle_hash = det.save_detector(detector, bundle_dir)
    sizes = cl.partition_corpus(corpus, topic_set, definition).sizes
    click.echo(f"trained k={definition.k} (subset sizes {sizes}) -> {bundle_dir} "
               f"[{bundle_hash[:12]}]")


@main.command()
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("-o", "--output", type=click.Path(), help="write scores as JSON")
@forward_errors
def score(bundle_dir, corpus_path, output):
    """Score each sequence: inferred cluster and perplexity."""
    detector = det.load_detector(bundle_dir)
    corpus = cp.load_corpus(corpus_path)
    rows = det.score_corpus(detector, corpus)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            json.dump({"scores": rows}, fh)
        click.echo(f"{len(rows)} scores -> {output}")
    else:
        for row in rows:
            click.echo(f"{row['id']}\t{row['cluster']}\t{row['perplexity']:.6f}")


@main.command("eval")
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True))
@click.option("--test", "test_path", required=True, type=click.Path(exists=True))
@click.option("--validation", "val_path", type=click.Path(exists=True),
              help="labeled corpus for threshold selection; without it the "
              "threshold is tuned on the test set itself")
@click.option("--method", default="informed-cluster-lstm", show_default=True)
@click.option("--compare", "compare_paths", multiple=True, type=click.Path(exists=True),
              help="extra report JSON files to include in the table")
@click.option("-o", "--output", type=click.Path(), help="write the report as JSON")
@forward_errors
def eval_cmd(bundle_dir, test_path, val_path, method, compare_paths, output):
    """Evaluate a detector on a labeled test corpus and print the
    method/AUC/sensitivity/specificity table."""
    detector = det.load_detector(bundle_dir)
    test_corpus = cp.load_corpus(test_path)
    rows = det.score_corpus(detector, test_corpus)
    pairs = [(r["perplexity"], s.label) for r, s in zip(rows, test_corpus.sequences)]
    validation_pairs = None
    if val_path:
        val_corpus = cp.load_corpus(val_path)
        val_rows = det.score_corpus(detector, val_corpus)
        validation_pairs = [(r["perplexity"], s.label)
                            for r, s in zip(val_rows, val_corpus.sequences)]
    report = det.evaluate(pairs, validation_pairs=validation_pairs,
                          clusters=[r["cluster"] for r in rows], method=method)
    reports = [report]
    for path in compare_paths:
        with open(path, encoding="utf-8") as fh:
            reports.append(det.EvalReport.from_json(json.load(fh)))
    click.echo(det.format_table(reports))
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh)
        click.echo(f"report -> {output}")


def _evaluate_baseline(scores, test_corpus, val_scores, val_corpus, method, output):
    pairs = list(zip(scores, test_corpus.labels()))
    validation_pairs = None
    if val_corpus is not None:
        validation_pairs = list(zip(val_scores, val_corpus.labels()))
    report = det.evaluate(pairs, validation_pairs=validation_pairs, method=method)
    click.echo(det.format_table([report]))
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh)
        click.echo(f"report -> {output}")


@main.group()
def baseline():
    """Classical comparators scored on a labeled test corpus."""


@baseline.command()
@click.option("--train", "train_path", required=True, type=click.Path(exists=True))
@click.option("--test", "test_path", required=True, type=click.Path(exists=True))
@click.option("--validation", "val_path", type=click.Path(exists=True))
@click.option("--k", default=5, show_default=True)
@click.option("--p", default=2.0, show_default=True, help="Minkowski order")
@click.option("-o", "--output", type=click.Path())
@forward_errors
def knn(train_path, test_path, val_path, k, p, output):
    """Mean distance to the k nearest training sequences (zero-padded ids)."""
    train_c = cp.load_corpus(train_path)
    test_c = cp.load_corpus(test_path)
    train_tokens = [s.tokens for s in train_c.sequences]
    scores = [bl.knn_score(s.tokens, train_tokens, k, p=p) for s in test_c.sequences]
    val_c = cp.load_corpus(val_path) if val_path else None
    val_scores = ([bl.knn_score(s.tokens, train_tokens, k, p=p) for s in val_c.sequences]
                  if val_c else None)
    _evaluate_baseline(scores, test_c, val_scores, val_c, f"knn(k={k},p={p:g})", output)


@baseline.command("knn-lcs")
@click.option("--train", "train_path", required=True, type=click.Path(exists=True))
@click.option("--test", "test_path", required=True, type=click.Path(exists=True))
@click.option("--validation", "val_path", type=click.Path(exists=True))
@click.option("--k", default=5, show_default=True)
@click.option("-o", "--output", type=click.Path())
@forward_errors
def knn_lcs(train_path, test_path, val_path, k, output):
    """kNN with the longest-common-subsequence distance."""
    train_c = cp.load_corpus(train_path)
    test_c = cp.load_corpus(test_path)
    train_tokens = [s.tokens for s in train_c.sequences]
    scores = [bl.knn_score(s.tokens, train_tokens, k, metric="lcs")
              for s in test_c.sequences]
    val_c = cp.load_corpus(val_path) if val_path else None
    val_scores = ([bl.knn_score(s.tokens, train_tokens, k, metric="lcs")
                   for s in val_c.sequences] if val_c else None)
    _evaluate_baseline(scores, test_c, val_scores, val_c, f"knn-lcs(k={k})", output)


@baseline.command()
@click.option("--train", "train_path", required=True, type=click.Path(exists=True))
@click.option("--test", "test_path", required=True, type=click.Path(exists=True))
@click.option("--validation", "val_path", type=click.Path(exists=True))
@click.option("--features", default="bow", show_default=True,
              type=click.Choice(["bow", "sp", "bow+sp"]))
@click.option("--trees", default=100, show_default=True)
@click.option("--subsample", default=256, show_default=True)
@click.option("--top-patterns", default=800, show_default=True)
@click.option("--min-support", default=2, show_default=True)
@click.option("--max-pattern-length", type=int)
@click.option("--patterns-out", type=click.Path(), help="save mined patterns as JSON")
@click.option("--seed", default=0, show_default=True)
@click.option("-o", "--output", type=click.Path())
@forward_errors
def isoforest(train_path, test_path, val_path, features, trees, subsample,
              top_patterns, min_support, max_pattern_length, patterns_out,
              seed, output):
    """Isolation forest over bag-of-words and/or sequential-pattern
    features."""
    train_c = cp.load_corpus(train_path)
    test_c = cp.load_corpus(test_path)
    patterns = None
    if features in ("sp", "bow+sp"):
        patterns = bl.prefixspan_top_k([s.tokens for s in train_c.sequences],
                                       top_k=top_patterns,
                                       min_support=min_support,
                                       max_length=max_pattern_length)
        click.echo(f"mined {len(patterns)} patterns")
        if patterns_out:
            with open(patterns_out, "w", encoding="utf-8") as fh:
                json.dump(bl.patterns_to_json(patterns, train_c.vocabulary), fh)
    forest = bl.isoforest_fit(bl.feature_matrix(train_c, features, patterns),
                              tree_count=trees, subsample=subsample, seed=seed)
    scores = bl.isoforest_scores(forest, bl.feature_matrix(test_c, features, patterns))
    val_c = cp.load_corpus(val_path) if val_path else None
    val_scores = (bl.isoforest_scores(forest, bl.feature_matrix(val_c, features, patterns))
                  if val_c else None)
    _evaluate_baseline(scores, test_c, val_scores, val_c,
                       f"isoforest({features})", output)


@main.command()
@click.option("--components", default=3, show_default=True)
@click.option("--vocab-size", default=60, show_default=True)
@click.option("--shared-fraction", default=0.1, show_default=True)
@click.option("--concentration", default=0.4, show_default=True)
@click.option("--perturbation-rate", default=0.3, show_default=True)
@click.option("--n-train", default=600, show_default=True)
@click.option("--n-val-normal", default=0, show_default=True)
@click.option("--n-val-novel", default=0, show_default=True)
@click.option("--n-test-normal", default=150, show_default=True)
@click.option("--n-test-novel", default=150, show_default=True)
@click.option("--len-min", default=20, show_default=True)
@click.option("--len-max", default=40, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
@forward_errors
def synth(components, vocab_size, shared_fraction, concentration,
          perturbation_rate, n_train, n_val_normal, n_val_novel,
          n_test_normal, n_test_novel, len_min, len_max, seed, out_dir):
    """Sample train/validation/test corpora from a mixture of Markov
    generators with partially disjoint vocabularies."""
    os.makedirs(out_dir, exist_ok=True)
    gen = cp.make_partially_disjoint_mixture(
        num_components=components, vocab_size=vocab_size,
        shared_fraction=shared_fraction, concentration=concentration,
        perturbation_rate=perturbation_rate, seed=seed)
    train_c = cp.generate_synthetic_mixture(gen, n_train, 0, (len_min, len_max),
                                            seed=seed)
    cp.save_corpus(train_c, os.path.join(out_dir, "train.json"))
    written = ["train.json"]
    if n_val_normal or n_val_novel:
        val_c = cp.generate_synthetic_mixture(gen, n_val_normal, n_val_novel,
                                              (len_min, len_max), seed=seed + 1,
                                              vocabulary=train_c.vocabulary)
        cp.save_corpus(val_c, os.path.join(out_dir, "val.json"))
        written.append("val.json")
    test_c = cp.generate_synthetic_mixture(gen, n_test_normal, n_test_novel,
                                           (len_min, len_max), seed=seed + 2,
                                           vocabulary=train_c.vocabulary)
    cp.save_corpus(test_c, os.path.join(out_dir, "test.json"))
    written.append("test.json")
    click.echo(f"wrote {', '.join(written)} to {out_dir} "
               f"(vocabulary {len(train_c.vocabulary)})")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="JSON or TOML service config")
@click.option("--root", "root_dir", type=click.Path(), help="data directory")
@click.option("--ui", "ui_dir", type=click.Path(), help="built UI bundle to serve at /")
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@forward_errors
def serve(config_path, root_dir, ui_dir, host, port):
    """Run the HTTP service. Flags override the config file; the
    SEQNOVEL_PORT environment variable overrides the configured port when no
    --port flag is given."""
    import uvicorn
    from .service import create_app, load_config

    cfg = load_config(config_path, root_dir=root_dir, ui_dir=ui_dir,
                      host=host, port=port)
    if port is None and os.environ.get("SEQNOVEL_PORT"):
        cfg.port = int(os.environ["SEQNOVEL_PORT"])
    app = create_app(cfg.root_dir, cfg.ui_dir)
    click.echo(f"serving on {cfg.host}:{cfg.port} (data in {cfg.root_dir})")
    uvicorn.run(app, host=cfg.host, port=cfg.port)


if __name__ == "__main__":
    main()
