"""Classical novelty-detection comparators.

kNN scores raw token sequences directly, either with Minkowski distance on
zero-padded id vectors or with a longest-common-subsequence distance.
Sequential patterns mined with prefixspan give binary features; isolation
forests score feature vectors (bag-of-words, patterns, or both).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .corpus import Corpus


# ---------------------------------------------------------------------------
# kNN over raw sequences

def _pad(seqs: Sequence[Sequence[int]], length: int) -> np.ndarray:
    out = np.zeros((len(seqs), length), dtype=np.int64)
    for i, s in enumerate(seqs):
        out[i, :len(s)] = s[:length]
    return out


def lcs_length(a: Sequence[int], b: Sequence[int]) -> int:
    """Longest common subsequence by the standard quadratic dynamic program
    with a rolling row."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            if x == y:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return prev[len(b)]


def lcs_distance(a: Sequence[int], b: Sequence[int]) -> float:
    m = max(len(a), len(b))
    if m == 0:
        return 0.0
    return 1.0 - lcs_length(a, b) / m


def knn_score(query: Sequence[int], training: Sequence[Sequence[int]], k: int,
              p: float = 2.0, metric: str = "minkowski") -> float:
    """Mean distance to the k nearest training sequences; higher means more
    novel. Minkowski compares token ids after zero-padding everything to the
    longest training length (a query running past that is truncated, with a
    warning). The lcs metric uses 1 - LCS/max-length instead."""
    if not training:
        raise ValueError("empty training set")
    if not 1 <= k <= len(training):
        raise ValueError(f"k must be in [1, {len(training)}]")
    if metric == "lcs":
        dists = np.array([lcs_distance(query, t) for t in training])
    elif metric == "minkowski":
        if p < 1:
            raise ValueError("p must be >= 1")
        max_len = max(len(t) for t in training)
        if len(query) > max_len:
            warnings.warn(f"query length {len(query)} truncated to {max_len}")
        q = _pad([query], max_len)[0]
        t = _pad(training, max_len)
        dists = (np.abs(t - q).astype(np.float64) ** p).sum(axis=1) ** (1.0 / p)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    nearest = np.partition(dists, k - 1)[:k]
    return float(nearest.mean())


# ---------------------------------------------------------------------------
# sequential patterns

@dataclass(frozen=True)
class SequentialPattern:
    pattern: tuple[int, ...]
    support: int

    def __post_init__(self):
        if not self.pattern:
            raise ValueError("empty pattern")
        if self.support < 1:
            raise ValueError("support must be positive")


def is_subsequence(pattern: Sequence[int], seq: Sequence[int]) -> bool:
    it = iter(seq)
    return all(any(x == y for y in it) for x in pattern)


def prefixspan_top_k(sequences: Sequence[Sequence[int]], top_k: int = 800,
                     min_support: int = 2,
                     max_length: int | None = None) -> list[SequentialPattern]:
    """Prefix-projected pattern growth. Support counts each training sequence
    at most once. The top_k are ordered by support descending, then shorter
    pattern, then lexicographic, so the cut is deterministic."""
    if not sequences:
        raise ValueError("empty corpus")
    seqs = [list(s) for s in sequences]
    found: list[SequentialPattern] = []

    def grow(prefix: tuple[int, ...], projection: list[tuple[int, int]]):
        if max_length is not None and len(prefix) >= max_length:
            return
        support: dict[int, int] = {}
        for si, start in projection:
            for item in set(seqs[si][start:]):
                support[item] = support.get(item, 0) + 1
        for item in sorted(support):
            if support[item] < min_support:
                continue
            pattern = prefix + (item,)
            found.append(SequentialPattern(pattern, support[item]))
            nxt = []
            for si, start in projection:
                row = seqs[si]
                for pos in range(start, len(row)):
                    if row[pos] == item:
                        nxt.append((si, pos + 1))
                        break
            grow(pattern, nxt)

    grow((), [(i, 0) for i in range(len(seqs))])
    found.sort(key=lambda sp: (-sp.support, len(sp.pattern), sp.pattern))
    return found[:top_k]


def pattern_features(tokens: Sequence[int], patterns: Sequence[SequentialPattern]) -> np.ndarray:
    return np.array([1 if is_subsequence(sp.pattern, tokens) else 0
                     for sp in patterns], dtype=np.int64)


def patterns_to_json(patterns: Sequence[SequentialPattern],
                     vocabulary=None) -> list[dict]:
    out = []
    for sp in patterns:
        entry = {"pattern": list(sp.pattern), "support": sp.support}
        if vocabulary is not None:
            entry["tokens"] = [vocabulary.id_to_word[t] for t in sp.pattern]
        out.append(entry)
    return out


def feature_matrix(corpus: Corpus, mode: str = "bow",
                   patterns: Sequence[SequentialPattern] | None = None) -> np.ndarray:
    """Per-sequence vectors for the forest: token counts over the vocabulary
    (bow), binary pattern indicators (sp), or their concatenation."""
    from .corpus import bag_of_words
    if mode not in ("bow", "sp", "bow+sp"):
        raise ValueError(f"unknown feature mode {mode!r}")
    if mode in ("sp", "bow+sp") and patterns is None:
        raise ValueError("pattern features need mined patterns")
    rows = []
    for seq in corpus.sequences:
        parts = []
        if mode in ("bow", "bow+sp"):
            parts.append(bag_of_words(seq.tokens, corpus.vocabulary))
        if mode in ("sp", "bow+sp"):
            parts.append(pattern_features(seq.tokens, patterns))
        rows.append(np.concatenate(parts))
    return np.vstack(rows).astype(np.float64)


# ---------------------------------------------------------------------------
# isolation forest

@lru_cache(maxsize=None)
def _harmonic(n: int) -> float:
    return sum(1.0 / i for i in range(1, n + 1))


def average_path_length(m: int) -> float:
    """Expected unsuccessful-search path length in a binary search tree of m
    points: 2*H(m-1) - 2*(m-1)/m, with exact harmonic numbers."""
    if m <= 1:
        return 0.0
    return 2.0 * _harmonic(m - 1) - 2.0 * (m - 1) / m


@dataclass
class IsolationForest:
    trees: list[dict]
    subsample: int
    n_features: int


def _build_tree(x: np.ndarray, height: int, limit: int,
                rng: np.random.Generator) -> dict:
    n = x.shape[0]
    if height >= limit or n <= 1:
        return {"size": n}
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    usable = np.flatnonzero(hi > lo)
    if usable.size == 0:
        return {"size": n}
    feature = int(usable[rng.integers(usable.size)])
    split = float(rng.uniform(lo[feature], hi[feature]))
    mask = x[:, feature] < split
    return {
        "feature": feature,
        "split": split,
        "left": _build_tree(x[mask], height + 1, limit, rng),
        "right": _build_tree(x[~mask], height + 1, limit, rng),
    }


def isoforest_fit(vectors: np.ndarray, tree_count: int = 100,
                  subsample: int = 256, seed: int = 0) -> IsolationForest:
    """Grow tree_count isolation trees on subsamples of size `subsample`
    (clamped to the data size). Tree i is seeded with seed + i. Heights are
    capped at ceil(log2 subsample)."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("vectors must be a non-empty 2-d array")
    psi = min(subsample, x.shape[0])
    if psi < 2:
        raise ValueError("need at least 2 points")
    limit = math.ceil(math.log2(psi))
    trees = []
    for i in range(tree_count):
        rng = np.random.default_rng(seed + i)
        idx = rng.choice(x.shape[0], size=psi, replace=False)
        trees.append(_build_tree(x[idx], 0, limit, rng))
    return IsolationForest(trees=trees, subsample=psi, n_features=x.shape[1])


def _path_length(node: dict, x: np.ndarray, depth: int) -> float:
    if "size" in node:
        return depth + average_path_length(node["size"])
    branch = node["left"] if x[node["feature"]] < node["split"] else node["right"]
    return _path_length(branch, x, depth + 1)


def isoforest_score(forest: IsolationForest, x: Sequence[float]) -> float:
    """Anomaly score 2^(-E[h]/c(psi)), in (0, 1]; 0.5 marks a path length
    equal to the subsample average."""
    v = np.asarray(x, dtype=np.float64)
    if v.shape != (forest.n_features,):
        raise ValueError(f"expected {forest.n_features} features, got {v.shape}")
    mean_path = sum(_path_length(t, v, 0) for t in forest.trees) / len(forest.trees)
    return float(2.0 ** (-mean_path / average_path_length(forest.subsample)))


def isoforest_scores(forest: IsolationForest, vectors: np.ndarray) -> list[float]:
    return [isoforest_score(forest, row) for row in np.asarray(vectors, dtype=np.float64)]
