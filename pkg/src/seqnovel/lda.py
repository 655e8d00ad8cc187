"""Topic modeling by collapsed Gibbs sampling.

An ensemble pools topics from several independently fitted runs with varying
topic counts into one TopicSet holding a stacked topic-word matrix and a
stacked sequence-topic matrix. New sequences get topic probabilities by
fold-in: Gibbs sampling with the trained topic-word statistics frozen.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .corpus import Corpus

SweepCallback = Callable[[int, np.ndarray, np.ndarray, np.ndarray], None]


@dataclass
class LdaRun:
    run_id: int
    num_topics: int
    alpha: float
    beta: float
    iterations: int
    burn_in: int
    seed: int
    phi: np.ndarray            # (K, V) topic-word probabilities
    theta: np.ndarray          # (n, K) document-topic probabilities
    assignments: list[np.ndarray] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not np.allclose(self.phi.sum(axis=1), 1.0, atol=1e-9):
            raise ValueError("phi rows must sum to 1")
        if self.theta.size and not np.allclose(self.theta.sum(axis=1), 1.0, atol=1e-9):
            raise ValueError("theta rows must sum to 1")

    def params_json(self) -> dict:
        return {
            "run_id": self.run_id,
            "num_topics": self.num_topics,
            "alpha": self.alpha,
            "beta": self.beta,
            "iterations": self.iterations,
            "burn_in": self.burn_in,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class TopicInfo:
    global_id: int
    run_id: int
    topic_index: int


@dataclass
class TopicSet:
    vocab_size: int
    runs: list[LdaRun]
    topics: list[TopicInfo]
    topic_word_matrix: np.ndarray       # (|T|, V), stacked phi rows
    sequence_topic_matrix: np.ndarray   # (n, |T|), stacked theta blocks
    sequence_ids: list[str]
    corpus_hash: str = ""

    def __post_init__(self):
        for run_id, (lo, hi) in enumerate(self.run_slices()):
            block = self.sequence_topic_matrix[:, lo:hi]
            if block.size and not np.allclose(block.sum(axis=1), 1.0, atol=1e-9):
                raise ValueError(f"per-run theta block of run {run_id} does not sum to 1")

    @property
    def num_topics(self) -> int:
        return len(self.topics)

    def run_slices(self) -> list[tuple[int, int]]:
        """Global-topic-id column range [lo, hi) of each run."""
        out = []
        lo = 0
        for run in self.runs:
            out.append((lo, lo + run.num_topics))
            lo += run.num_topics
        return out

    def to_json(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "corpus_hash": self.corpus_hash,
            "sequence_ids": self.sequence_ids,
            "topics": [
                {"id": t.global_id, "run_id": t.run_id, "topic_index": t.topic_index}
                for t in self.topics
            ],
            "runs": [run.params_json() for run in self.runs],
            "topic_word_matrix": self.topic_word_matrix.tolist(),
            "sequence_topic_matrix": self.sequence_topic_matrix.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TopicSet":
        topic_word = np.asarray(obj["topic_word_matrix"], dtype=np.float64)
        seq_topic = np.asarray(obj["sequence_topic_matrix"], dtype=np.float64)
        runs = []
        lo = 0
        for params in obj["runs"]:
            k = params["num_topics"]
            runs.append(LdaRun(
                run_id=params["run_id"], num_topics=k, alpha=params["alpha"],
                beta=params["beta"], iterations=params["iterations"],
                burn_in=params["burn_in"], seed=params["seed"],
                phi=topic_word[lo:lo + k],
                theta=seq_topic[:, lo:lo + k] if seq_topic.size else np.zeros((0, k)),
            ))
            lo += k
        topics = [TopicInfo(t["id"], t["run_id"], t["topic_index"]) for t in obj["topics"]]
        return cls(vocab_size=obj["vocab_size"], runs=runs, topics=topics,
                   topic_word_matrix=topic_word, sequence_topic_matrix=seq_topic,
                   sequence_ids=list(obj["sequence_ids"]),
                   corpus_hash=obj.get("corpus_hash", ""))


def default_alpha(num_topics: int) -> float:
    return 50.0 / num_topics


def fit_lda(corpus: Corpus, num_topics: int, alpha: float | None = None,
            beta: float = 0.01, iterations: int = 200, burn_in: int = 50,
            seed: int = 0, run_id: int = 0,
            sweep_callback: SweepCallback | None = None) -> LdaRun:
    """Collapsed Gibbs sampling over token-topic assignments. Point estimates
    phi/theta come from the final sweep's counts:

        phi[k][w]   = (count[k][w] + beta) / (count[k] + V*beta)
        theta[d][k] = (count[d][k] + alpha) / (len(d) + K*alpha)

    Deterministic given the seed."""
    if num_topics < 1:
        raise ValueError("num_topics must be >= 1")
    if not corpus.sequences:
        raise ValueError("empty corpus")
    if not 0 <= burn_in <= iterations:
        raise ValueError("burn_in must lie in [0, iterations]")
    if alpha is None:
        alpha = default_alpha(num_topics)

    docs = [np.asarray(s.tokens, dtype=np.int64) for s in corpus.sequences]
    doc_lens = np.array([len(d) for d in docs], dtype=np.int64)
    total_tokens = int(doc_lens.sum())
    if num_topics > total_tokens:
        raise ValueError(
            f"num_topics={num_topics} exceeds corpus token count {total_tokens}")

    v = len(corpus.vocabulary)
    k = num_topics
    rng = np.random.default_rng(seed)

    n_dk = np.zeros((len(docs), k), dtype=np.int64)
    n_kw = np.zeros((k, v), dtype=np.int64)
    n_k = np.zeros(k, dtype=np.int64)
    z: list[np.ndarray] = []
    for d, doc in enumerate(docs):
        zd = rng.integers(0, k, size=len(doc))
        z.append(zd)
        for w, t in zip(doc, zd):
            n_dk[d, t] += 1
            n_kw[t, w] += 1
            n_k[t] += 1

    vbeta = v * beta
    for sweep in range(iterations):
        u = rng.random(total_tokens)
        pos = 0
        for d, doc in enumerate(docs):
            zd = z[d]
            row = n_dk[d]
            for i in range(len(doc)):
                w = doc[i]
                t = zd[i]
                row[t] -= 1
                n_kw[t, w] -= 1
                n_k[t] -= 1
                p = (row + alpha) * (n_kw[:, w] + beta) / (n_k + vbeta)
                cdf = np.cumsum(p)
                t = int(np.searchsorted(cdf, u[pos] * cdf[-1]))
                pos += 1
                zd[i] = t
                row[t] += 1
                n_kw[t, w] += 1
                n_k[t] += 1
        assert int(n_k.sum()) == total_tokens, "topic count bookkeeping out of sync"
        if sweep_callback is not None:
            sweep_callback(sweep, n_dk, n_kw, n_k)

    phi = (n_kw + beta) / (n_k[:, None] + vbeta)
    theta = (n_dk + alpha) / (doc_lens[:, None] + k * alpha)
    return LdaRun(run_id=run_id, num_topics=k, alpha=alpha, beta=beta,
                  iterations=iterations, burn_in=burn_in, seed=seed,
                  phi=phi, theta=theta, assignments=z)


def fold_in(tokens: Sequence[int], run: LdaRun, iterations: int = 100,
            seed: int = 0) -> np.ndarray:
    """Topic proportions for a new sequence with the run's topic-word
    statistics frozen. Returns the smoothed length-K distribution
    (count[k] + alpha) / (len + K*alpha)."""
    doc = np.asarray(tokens, dtype=np.int64)
    if doc.size == 0:
        raise ValueError("cannot fold in an empty sequence")
    v = run.phi.shape[1]
    if doc.min() < 0 or doc.max() >= v:
        raise ValueError(f"token ids must lie in [0, {v})")
    k = run.num_topics
    rng = np.random.default_rng(seed)
    zd = rng.integers(0, k, size=doc.size)
    counts = np.zeros(k, dtype=np.int64)
    for t in zd:
        counts[t] += 1
    phi_cols = run.phi[:, doc]          # (K, len) frozen predictive weights
    for sweep in range(iterations):
        u = rng.random(doc.size)
        for i in range(doc.size):
            counts[zd[i]] -= 1
            p = (counts + run.alpha) * phi_cols[:, i]
            cdf = np.cumsum(p)
            t = int(np.searchsorted(cdf, u[i] * cdf[-1]))
            zd[i] = t
            counts[t] += 1
    return (counts + run.alpha) / (doc.size + k * run.alpha)


def fold_in_topicset(tokens: Sequence[int], topic_set: TopicSet,
                     iterations: int = 100, seed: int = 0) -> np.ndarray:
    """Fold in against every run; concatenate in global topic order. Each
    run's block is a distribution, the full vector is not. Per-run seeds are
    seed + run_id."""
    parts = [
        fold_in(tokens, run, iterations=iterations, seed=seed + run.run_id)
        for run in topic_set.runs
    ]
    return np.concatenate(parts)


def run_ensemble(corpus: Corpus, k_values: Sequence[int] | None = None, *,
                 num_runs: int | None = None, k_min: int = 2, k_max: int = 10,
                 alpha: float | None = None, beta: float = 0.01,
                 iterations: int = 200, burn_in: int = 50, seed: int = 0,
                 corpus_hash: str = "",
                 progress: Callable[[int, int], None] | None = None) -> TopicSet:
    """Fit one LDA run per topic count and pool the topics. Pass explicit
    `k_values`, or `num_runs` to draw each K uniformly from [k_min, k_max].
    Run r is seeded with seed + 1 + r; topic ids are assigned by run order,
    then topic index."""
    if k_values is None:
        if num_runs is None or num_runs < 1:
            raise ValueError("provide k_values or num_runs >= 1")
        if k_min > k_max:
            raise ValueError("k_min must be <= k_max")
        rng = np.random.default_rng(seed)
        k_values = [int(rng.integers(k_min, k_max + 1)) for _ in range(num_runs)]
    if not k_values:
        raise ValueError("ensemble needs at least one run")

    runs = []
    for r, k in enumerate(k_values):
        try:
            runs.append(fit_lda(corpus, num_topics=k, alpha=alpha, beta=beta,
                                iterations=iterations, burn_in=burn_in,
                                seed=seed + 1 + r, run_id=r))
        except ValueError as exc:
            raise ValueError(f"ensemble run {r} (K={k}) failed: {exc}") from exc
        if progress is not None:
            progress(r + 1, len(k_values))

    topics = []
    gid = 0
    for run in runs:
        for idx in range(run.num_topics):
            topics.append(TopicInfo(global_id=gid, run_id=run.run_id, topic_index=idx))
            gid += 1
    topic_word = np.vstack([run.phi for run in runs])
    seq_topic = np.hstack([run.theta for run in runs])
    return TopicSet(vocab_size=len(corpus.vocabulary), runs=runs, topics=topics,
                    topic_word_matrix=topic_word, sequence_topic_matrix=seq_topic,
                    sequence_ids=[s.id for s in corpus.sequences],
                    corpus_hash=corpus_hash)


def save_topicset(topic_set: TopicSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(topic_set.to_json(), fh)


def load_topicset(path) -> TopicSet:
    with open(path, encoding="utf-8") as fh:
        return TopicSet.from_json(json.load(fh))
