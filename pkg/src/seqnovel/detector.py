"""Cluster-routed novelty detection.

Training partitions the normal corpus by cluster definition and fits one
language model per subset. Scoring infers the cluster of a new sequence and
returns that model's perplexity; higher means more novel. With k=1 the whole
pipeline collapses to a single global model trained on all data, bit for bit.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .corpus import Corpus, Label
from .clustering import (ClusterDefinition, assign_cluster, partition_corpus,
                         subset_corpora, save_definition, load_definition)
from .lda import TopicSet, save_topicset, load_topicset
from .lstm import (LstmLanguageModel, TrainConfig, init_model, train,
                   perplexity, save_model, load_model)

MANIFEST_FORMAT = "seqnovel-detector-v1"


@dataclass
class NoveltyDetector:
    topic_set: TopicSet
    cluster_definition: ClusterDefinition
    models: list[LstmLanguageModel]      # index-aligned with cluster indices
    train_config: TrainConfig
    fold_iterations: int = 100
    fold_seed: int = 0

    def __post_init__(self):
        if len(self.models) != self.cluster_definition.k:
            raise ValueError(
                f"{len(self.models)} models for k={self.cluster_definition.k} clusters")

    @property
    def k(self) -> int:
        return self.cluster_definition.k


def train_detector(corpus: Corpus, topic_set: TopicSet,
                   definition: ClusterDefinition, train_config: TrainConfig,
                   embed_dim: int = 32, hidden_dim: int = 64,
                   fold_iterations: int = 100, fold_seed: int = 0,
                   progress: Callable[[int, int, int, float], None] | None = None
                   ) -> NoveltyDetector:
    """Partition the corpus and train one model per cluster. Cluster i's
    model is seeded with train_config.seed + i, so a k=1 detector equals a
    single model trained directly with the given config. Novel-labeled
    training sequences and clusters with no training data are rejected."""
    novel = [s.id for s in corpus.sequences if s.label is Label.NOVEL]
    if novel:
        shown = ", ".join(novel[:5]) + ("..." if len(novel) > 5 else "")
        raise ValueError(f"training corpus contains novel-labeled sequences: {shown}")
    definition.validate_total(topic_set)
    partition = partition_corpus(corpus, topic_set, definition)
    for c, ids in enumerate(partition.subsets):
        if not ids:
            raise ValueError(f"cluster {c} received no training sequences")

    models = []
    for c, sub in enumerate(subset_corpora(corpus, partition)):
        cfg = replace(train_config, seed=train_config.seed + c)
        model = init_model(len(corpus.vocabulary), embed_dim, hidden_dim, seed=cfg.seed)
        cb = None
        if progress is not None:
            cb = lambda e, t, l, _c=c: progress(_c, e, t, l)
        trained, _ = train(model, [s.tokens for s in sub.sequences], cfg, progress=cb)
        models.append(trained)
    return NoveltyDetector(topic_set=topic_set, cluster_definition=definition,
                           models=models, train_config=train_config,
                           fold_iterations=fold_iterations, fold_seed=fold_seed)


def score(detector: NoveltyDetector, tokens: Sequence[int]) -> tuple[int, float]:
    """Route to the best-matching cluster, then ask only that cluster's model
    for the sequence's perplexity."""
    cluster, _ = assign_cluster(tokens, detector.topic_set,
                                detector.cluster_definition,
                                iterations=detector.fold_iterations,
                                seed=detector.fold_seed)
    return cluster, perplexity(detector.models[cluster], tokens)


def score_corpus(detector: NoveltyDetector, corpus: Corpus,
                 progress: Callable[[int, int], None] | None = None) -> list[dict]:
    out = []
    for i, seq in enumerate(corpus.sequences):
        cluster, pp = score(detector, seq.tokens)
        out.append({"id": seq.id, "cluster": cluster, "perplexity": pp})
        if progress is not None:
            progress(i + 1, len(corpus.sequences))
    return out


# ---------------------------------------------------------------------------
# evaluation

def _novel_flag(label) -> bool:
    if isinstance(label, Label):
        return label is Label.NOVEL
    if isinstance(label, bool):
        return label
    if isinstance(label, str):
        return Label(label) is Label.NOVEL
    raise TypeError(f"cannot interpret label {label!r}")


def _score_groups(scores: Sequence[float], flags: Sequence[bool]) -> list[tuple[float, int, int]]:
    """Distinct scores in descending order with (score, novel count, normal
    count) per tie group."""
    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    groups = []
    i = 0
    while i < len(order):
        j = i
        dp = dn = 0
        while j < len(order) and scores[order[j]] == scores[order[i]]:
            if flags[order[j]]:
                dp += 1
            else:
                dn += 1
            j += 1
        groups.append((scores[order[i]], dp, dn))
        i = j
    return groups


def auc_score(scores: Sequence[float], flags: Sequence[bool]) -> float:
    """Area under the ROC curve by the trapezoidal rule over the full
    threshold sweep. The numerator is accumulated in integers (each tie group
    contributes normals*(2*true_positives + novels)), which makes the result
    equal to the tie-aware pair-counting statistic exactly, not just
    approximately."""
    p = sum(1 for f in flags if f)
    n = len(flags) - p
    if p == 0 or n == 0:
        raise ValueError("AUC needs both a normal and a novel class")
    tp = 0
    numer = 0
    for _, dp, dn in _score_groups(scores, flags):
        numer += dn * (2 * tp + dp)
        tp += dp
    return numer / (2 * n * p)


def roc_curve(scores: Sequence[float], flags: Sequence[bool]) -> list[tuple[float, float, float]]:
    """(fpr, tpr, threshold) triples sweeping the threshold down through the
    observed scores; a sequence is flagged novel when its score >= threshold.
    Starts at (0, 0, inf) and ends at (1, 1, min score)."""
    p = sum(1 for f in flags if f)
    n = len(flags) - p
    points = [(0.0, 0.0, math.inf)]
    tp = fp = 0
    for thr, dp, dn in _score_groups(scores, flags):
        tp += dp
        fp += dn
        points.append((fp / n if n else 0.0, tp / p if p else 0.0, thr))
    return points


def youden_threshold(scores: Sequence[float], flags: Sequence[bool]) -> float:
    """Threshold maximizing tpr - fpr along the sweep; the first (highest)
    maximizing threshold wins."""
    best_thr = math.inf
    best_j = 0.0
    for fpr, tpr, thr in roc_curve(scores, flags):
        j = tpr - fpr
        if j > best_j:
            best_j = j
            best_thr = thr
    return best_thr


def sens_spec_at(scores: Sequence[float], flags: Sequence[bool],
                 threshold: float) -> tuple[float, float]:
    p = sum(1 for f in flags if f)
    n = len(flags) - p
    tp = sum(1 for s, f in zip(scores, flags) if f and s >= threshold)
    fp = sum(1 for s, f in zip(scores, flags) if not f and s >= threshold)
    sens = tp / p if p else 0.0
    spec = 1.0 - (fp / n if n else 0.0)
    return sens, spec


@dataclass
class EvalReport:
    method: str
    roc: list[tuple[float, float, float]]
    auc: float
    threshold: float
    sensitivity: float
    specificity: float
    threshold_policy: str
    per_cluster: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "auc": self.auc,
            "threshold": None if math.isinf(self.threshold) else self.threshold,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "threshold_policy": self.threshold_policy,
            "roc": [[fpr, tpr, None if math.isinf(thr) else thr]
                    for fpr, tpr, thr in self.roc],
            "per_cluster": self.per_cluster,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EvalReport":
        thr = obj["threshold"]
        return cls(
            method=obj["method"],
            roc=[(r[0], r[1], math.inf if r[2] is None else r[2]) for r in obj["roc"]],
            auc=obj["auc"],
            threshold=math.inf if thr is None else thr,
            sensitivity=obj["sensitivity"],
            specificity=obj["specificity"],
            threshold_policy=obj["threshold_policy"],
            per_cluster=list(obj.get("per_cluster", [])),
        )


def evaluate(pairs: Sequence[tuple[float, object]],
             validation_pairs: Sequence[tuple[float, object]] | None = None,
             clusters: Sequence[int] | None = None,
             method: str = "detector") -> EvalReport:
    """Score a labeled test set. The operating threshold maximizes Youden's J
    on the validation pairs when given; otherwise it is tuned on the test
    pairs themselves and the policy name says so."""
    scores = [float(s) for s, _ in pairs]
    flags = [_novel_flag(l) for _, l in pairs]
    auc = auc_score(scores, flags)
    roc = roc_curve(scores, flags)
    if validation_pairs is not None:
        v_scores = [float(s) for s, _ in validation_pairs]
        v_flags = [_novel_flag(l) for _, l in validation_pairs]
        threshold = youden_threshold(v_scores, v_flags)
        policy = "youden-validation"
    else:
        threshold = youden_threshold(scores, flags)
        policy = "youden-test-optimistic"
    sens, spec = sens_spec_at(scores, flags, threshold)

    per_cluster = []
    if clusters is not None:
        if len(clusters) != len(pairs):
            raise ValueError("clusters must align with pairs")
        for c in sorted(set(int(c) for c in clusters)):
            idx = [i for i, ci in enumerate(clusters) if ci == c]
            sub_flags = [flags[i] for i in idx]
            if all(sub_flags) or not any(sub_flags):
                sub_auc = None
            else:
                sub_auc = auc_score([scores[i] for i in idx], sub_flags)
            per_cluster.append({"cluster": c, "size": len(idx), "auc": sub_auc})
    return EvalReport(method=method, roc=roc, auc=auc, threshold=threshold,
                      sensitivity=sens, specificity=spec,
                      threshold_policy=policy, per_cluster=per_cluster)


def per_cluster_report(detector: NoveltyDetector, corpus: Corpus,
                       global_detector: NoveltyDetector) -> list[dict]:
    """Group test sequences by their assigned cluster and compare the routed
    model's discrimination against the global model on the same subset. AUC
    is None wherever a subset lacks one of the classes."""
    if global_detector.k != 1:
        raise ValueError("comparison detector must have a single cluster")
    routed = score_corpus(detector, corpus)
    global_pp = {s.id: perplexity(global_detector.models[0], s.tokens)
                 for s in corpus.sequences}
    flags = {s.id: _novel_flag(s.label) for s in corpus.sequences}

    by_cluster: dict[int, list[dict]] = {}
    for row in routed:
        by_cluster.setdefault(row["cluster"], []).append(row)

    report = []
    for c in sorted(by_cluster):
        rows = by_cluster[c]
        sub_flags = [flags[r["id"]] for r in rows]
        if all(sub_flags) or not any(sub_flags):
            auc = g_auc = None
        else:
            auc = auc_score([r["perplexity"] for r in rows], sub_flags)
            g_auc = auc_score([global_pp[r["id"]] for r in rows], sub_flags)
        report.append({"cluster": c, "size": len(rows), "auc": auc, "global_auc": g_auc})
    assert sum(r["size"] for r in report) == len(corpus.sequences)
    return report


def format_table(reports: Sequence[EvalReport]) -> str:
    """Plain-text comparison table: one row per method with AUC, sensitivity
    and specificity."""
    rows = [("Method", "AUC", "Sens.", "Spec.")]
    for r in reports:
        rows.append((r.method, f"{r.auc:.3f}", f"{r.sensitivity:.3f}",
                     f"{r.specificity:.3f}"))
    widths = [max(len(row[i]) for row in rows) for i in range(4)]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * widths[j] for j in range(4)))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# bundle persistence

def _file_sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def save_detector(detector: NoveltyDetector, dirpath: str) -> str:
    """Write a self-contained bundle: cluster_definition.json, topicset.json,
    one checkpoint per cluster, and a manifest holding config plus the sha256
    of every file. Returns the manifest hash (a stable content id)."""
    os.makedirs(dirpath, exist_ok=True)
    save_definition(detector.cluster_definition, os.path.join(dirpath, "cluster_definition.json"))
    save_topicset(detector.topic_set, os.path.join(dirpath, "topicset.json"))
    names = ["cluster_definition.json", "topicset.json"]
    for i, model in enumerate(detector.models):
        name = f"model_{i}.ckpt"
        save_model(model, os.path.join(dirpath, name))
        names.append(name)
    manifest = {
        "format": MANIFEST_FORMAT,
        "k": detector.k,
        "train_config": detector.train_config.to_json(),
        "fold_iterations": detector.fold_iterations,
        "fold_seed": detector.fold_seed,
        "files": {name: _file_sha256(os.path.join(dirpath, name)) for name in names},
    }
    with open(os.path.join(dirpath, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return hashlib.sha256(canonical_json(manifest).encode()).hexdigest()


def load_detector(dirpath: str) -> NoveltyDetector:
    with open(os.path.join(dirpath, "manifest.json"), encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != MANIFEST_FORMAT:
        raise ValueError(f"unknown bundle format {manifest.get('format')!r}")
    for name, want in manifest["files"].items():
        got = _file_sha256(os.path.join(dirpath, name))
        if got != want:
            raise ValueError(f"bundle file {name} hash mismatch")
    definition = load_definition(os.path.join(dirpath, "cluster_definition.json"))
    topic_set = load_topicset(os.path.join(dirpath, "topicset.json"))
    models = [load_model(os.path.join(dirpath, f"model_{i}.ckpt"))
              for i in range(manifest["k"])]
    return NoveltyDetector(topic_set=topic_set, cluster_definition=definition,
                           models=models,
                           train_config=TrainConfig.from_json(manifest["train_config"]),
                           fold_iterations=manifest["fold_iterations"],
                           fold_seed=manifest["fold_seed"])
