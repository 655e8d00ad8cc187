"""Topic grouping and cluster inference.

A ClusterDefinition maps every pooled topic to one of k groups. New sequences
are routed to the group whose topics have the largest average fold-in
probability; training sequences are partitioned with their stored topic rows.
Also here: k-means and silhouette for automatic grouping, and the exploration
payloads (t-SNE layout, pie-glyph word lists, chord co-association counts).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .corpus import Corpus, Vocabulary
from .lda import LdaRun, TopicSet, fold_in, fold_in_topicset


@dataclass
class ClusterDefinition:
    name: str
    k: int
    assignment: dict[int, int]   # global topic id -> cluster index

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.assignment:
            raise ValueError("assignment is empty")
        bad = {t: c for t, c in self.assignment.items() if not 0 <= c < self.k}
        if bad:
            raise ValueError(f"cluster indices out of [0, {self.k}): {bad}")
        empty = sorted(set(range(self.k)) - set(self.assignment.values()))
        if empty:
            raise ValueError(f"clusters without any topic: {empty}")

    def topics_of(self, cluster: int) -> list[int]:
        return sorted(t for t, c in self.assignment.items() if c == cluster)

    def missing_topic_ids(self, topic_set: TopicSet) -> list[int]:
        have = set(self.assignment)
        return sorted(t.global_id for t in topic_set.topics if t.global_id not in have)

    def extra_topic_ids(self, topic_set: TopicSet) -> list[int]:
        known = {t.global_id for t in topic_set.topics}
        return sorted(t for t in self.assignment if t not in known)

    def validate_total(self, topic_set: TopicSet) -> None:
        """Every topic of the set assigned, and nothing else."""
        missing = self.missing_topic_ids(topic_set)
        extra = self.extra_topic_ids(topic_set)
        if missing or extra:
            parts = []
            if missing:
                parts.append(f"missing topic ids: {missing}")
            if extra:
                parts.append(f"unknown topic ids: {extra}")
            raise ValueError(f"cluster definition '{self.name}' not total: " + "; ".join(parts))

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "k": self.k,
            "assignment": [
                {"topic_id": t, "cluster": c}
                for t, c in sorted(self.assignment.items())
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ClusterDefinition":
        assignment = {}
        for entry in obj["assignment"]:
            t = int(entry["topic_id"])
            if t in assignment:
                raise ValueError(f"topic id {t} assigned twice")
            assignment[t] = int(entry["cluster"])
        return cls(name=obj["name"], k=int(obj["k"]), assignment=assignment)


@dataclass
class Partition:
    subsets: list[list[str]]    # sequence ids per cluster, corpus order kept

    @property
    def sizes(self) -> list[int]:
        return [len(s) for s in self.subsets]


def save_definition(definition: ClusterDefinition, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(definition.to_json(), fh, indent=2)


def load_definition(path) -> ClusterDefinition:
    with open(path, encoding="utf-8") as fh:
        return ClusterDefinition.from_json(json.load(fh))


def identity_definition(topic_set: TopicSet, name: str = "one-cluster-per-topic") -> ClusterDefinition:
    return ClusterDefinition(name=name, k=topic_set.num_topics,
                             assignment={t.global_id: t.global_id for t in topic_set.topics})


def single_cluster_definition(topic_set: TopicSet, name: str = "global") -> ClusterDefinition:
    return ClusterDefinition(name=name, k=1,
                             assignment={t.global_id: 0 for t in topic_set.topics})


def cluster_scores(topic_probs: np.ndarray, definition: ClusterDefinition) -> np.ndarray:
    """Average probability of each cluster's topics. Raw arithmetic mean of
    the concatenated per-run probabilities; clusters mixing runs of different
    K therefore average numbers on slightly different scales."""
    scores = np.empty(definition.k, dtype=np.float64)
    for c in range(definition.k):
        ids = definition.topics_of(c)
        scores[c] = float(np.mean(topic_probs[ids]))
    return scores


def assign_cluster(tokens: Sequence[int], topic_set: TopicSet,
                   definition: ClusterDefinition, iterations: int = 100,
                   seed: int = 0) -> tuple[int, np.ndarray]:
    """Fold the sequence into every run, then pick the cluster with the
    largest average topic probability. Ties go to the lowest index."""
    definition.validate_total(topic_set)
    probs = fold_in_topicset(tokens, topic_set, iterations=iterations, seed=seed)
    scores = cluster_scores(probs, definition)
    return int(np.argmax(scores)), scores


def partition_corpus(corpus: Corpus, topic_set: TopicSet,
                     definition: ClusterDefinition) -> Partition:
    """Split training sequences by the average-argmax rule applied to their
    stored topic rows (no re-sampling). Subsets are disjoint and cover the
    corpus."""
    definition.validate_total(topic_set)
    row_of = {sid: i for i, sid in enumerate(topic_set.sequence_ids)}
    corpus_ids = [s.id for s in corpus.sequences]
    if set(corpus_ids) != set(row_of):
        raise ValueError("topic set was fitted on a different corpus")
    subsets: list[list[str]] = [[] for _ in range(definition.k)]
    for sid in corpus_ids:
        row = topic_set.sequence_topic_matrix[row_of[sid]]
        c = int(np.argmax(cluster_scores(row, definition)))
        subsets[c].append(sid)
    assert sum(len(s) for s in subsets) == len(corpus_ids)
    assert set().union(*subsets) == set(corpus_ids) if subsets else not corpus_ids
    return Partition(subsets=subsets)


def subset_corpora(corpus: Corpus, partition: Partition) -> list[Corpus]:
    return [corpus.subset(ids) for ids in partition.subsets]


def lda_cluster_assign(run: LdaRun, tokens: Sequence[int] | None = None,
                       row: np.ndarray | None = None, iterations: int = 100,
                       seed: int = 0) -> int:
    """Single-run automatic grouping: the cluster is simply the dominant
    topic. Pass `row` for a training sequence's stored proportions, or
    `tokens` to fold in a new one."""
    if row is None:
        if tokens is None:
            raise ValueError("need tokens or row")
        row = fold_in(tokens, run, iterations=iterations, seed=seed)
    return int(np.argmax(row))


# ---------------------------------------------------------------------------
# k-means and silhouette

def _kmeanspp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]), dtype=np.float64)
    centers[0] = x[rng.integers(n)]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[j] = x[rng.integers(n)]
        else:
            u = rng.random() * total
            centers[j] = x[int(np.searchsorted(np.cumsum(d2), u))]
        d2 = np.minimum(d2, ((x - centers[j]) ** 2).sum(axis=1))
    return centers


def kmeans(x: np.ndarray, k: int, seed: int = 0, max_iters: int = 100,
           callback: Callable[[int, float], None] | None = None
           ) -> tuple[np.ndarray, np.ndarray, float]:
    """Lloyd iterations from a k-means++ seeding. An emptied cluster is
    re-seeded with the point farthest from its centroid. Returns
    (labels, centers, inertia)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("x must be 2-d")
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    rng = np.random.default_rng(seed)
    centers = _kmeanspp_init(x, k, rng)
    labels = np.zeros(n, dtype=np.int64)
    for it in range(max_iters):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        if callback is not None:
            callback(it, float(d2[np.arange(n), labels].sum()))
        new_centers = centers.copy()
        for j in range(k):
            members = x[labels == j]
            if members.shape[0] == 0:
                new_centers[j] = x[int(d2[np.arange(n), labels].argmax())]
            else:
                new_centers[j] = members.mean(axis=0)
        if np.array_equal(new_centers, centers):
            break
        centers = new_centers
    d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(n), labels].sum())
    return labels, centers, inertia


def silhouette_score(x: np.ndarray, labels: Sequence[int]) -> float:
    """Mean over points of (b - a) / max(a, b); a is the mean distance to the
    point's own cluster, b the smallest mean distance to another. Singletons
    score 0, as does a point with a == b == 0."""
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    if uniq.size < 2:
        raise ValueError("silhouette needs at least 2 clusters")
    diff = x[:, None, :] - x[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    n = x.shape[0]
    scores = np.zeros(n, dtype=np.float64)
    for i in range(n):
        own = labels[i]
        mask = labels == own
        size = int(mask.sum())
        if size == 1:
            continue
        a = dist[i, mask].sum() / (size - 1)
        b = min(float(dist[i, labels == c].mean()) for c in uniq if c != own)
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return float(scores.mean())


def choose_k_by_silhouette(x: np.ndarray, k_min: int = 2, k_max: int = 10,
                           seed: int = 0) -> tuple[int, dict[int, float]]:
    """Try each k and keep the best silhouette; ties go to the smaller k."""
    x = np.asarray(x, dtype=np.float64)
    hi = min(k_max, x.shape[0] - 1)
    if hi < k_min:
        raise ValueError("not enough points to compare cluster counts")
    results: dict[int, float] = {}
    for k in range(k_min, hi + 1):
        labels, _, _ = kmeans(x, k, seed=seed)
        if np.unique(labels).size < 2:
            continue
        results[k] = silhouette_score(x, labels)
    if not results:
        raise ValueError("no k produced 2 or more populated clusters")
    best = max(sorted(results), key=lambda k: results[k])
    return best, results


def auto_definition_kmeans(topic_set: TopicSet, k: int | None = None,
                           k_min: int = 2, k_max: int = 10, seed: int = 0,
                           name: str = "kmeans-topics") -> ClusterDefinition:
    """Group topics by k-means on their word distributions. With k omitted,
    pick it by silhouette."""
    x = topic_set.topic_word_matrix
    if k is None:
        k, _ = choose_k_by_silhouette(x, k_min=k_min, k_max=k_max, seed=seed)
    labels, _, _ = kmeans(x, k, seed=seed)
    # drop emptied indices so every cluster is populated
    remap = {old: new for new, old in enumerate(sorted(set(int(v) for v in labels)))}
    assignment = {t.global_id: remap[int(labels[t.global_id])] for t in topic_set.topics}
    return ClusterDefinition(name=name, k=len(remap), assignment=assignment)


def auto_definition_lda(topic_set: TopicSet, name: str = "lda-topics") -> ClusterDefinition:
    """Single-run automatic grouping: each topic is its own cluster, so the
    routing rule reduces to the dominant-topic argmax. Topics that dominate
    no training sequence are folded into the populated topic with the most
    similar word distribution, keeping every training subset non-empty."""
    if len(topic_set.runs) != 1:
        raise ValueError("dominant-topic grouping needs a single-run topic set")
    theta = topic_set.sequence_topic_matrix
    dominant = set(int(np.argmax(row)) for row in theta)
    populated = sorted(dominant)
    if not populated:
        raise ValueError("topic set has no sequences")
    phi = topic_set.topic_word_matrix
    norms = np.linalg.norm(phi, axis=1)
    cluster_of = {t: i for i, t in enumerate(populated)}
    assignment = {}
    for info in topic_set.topics:
        t = info.global_id
        if t in cluster_of:
            assignment[t] = cluster_of[t]
        else:
            sims = [(float(phi[t] @ phi[p]) / (norms[t] * norms[p]), -p) for p in populated]
            best = -max(sims)[1]
            assignment[t] = cluster_of[best]
    return ClusterDefinition(name=name, k=len(populated), assignment=assignment)


# ---------------------------------------------------------------------------
# t-SNE layout

def _conditional_probs(d2_row: np.ndarray, beta: float) -> tuple[float, np.ndarray]:
    p = np.exp(-d2_row * beta)
    total = p.sum()
    if total <= 0:
        p = np.ones_like(d2_row) / d2_row.size
        return float(np.log(d2_row.size)), p
    h = np.log(total) + beta * float((d2_row * p).sum()) / total
    return float(h), p / total


def _affinities(x: np.ndarray, perplexity: float, tol: float = 1e-5) -> np.ndarray:
    """Per-point precisions found by binary search so each conditional
    distribution hits the target perplexity."""
    n = x.shape[0]
    sq = (x ** 2).sum(axis=1)
    d2 = np.maximum(sq[:, None] - 2.0 * x @ x.T + sq[None, :], 0.0)
    target = np.log(perplexity)
    p_cond = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        idx = np.concatenate([np.arange(i), np.arange(i + 1, n)])
        row = d2[i, idx]
        beta, beta_lo, beta_hi = 1.0, 0.0, np.inf
        h, p = _conditional_probs(row, beta)
        for _ in range(50):
            if abs(h - target) < tol:
                break
            if h > target:
                beta_lo = beta
                beta = beta * 2.0 if beta_hi == np.inf else (beta + beta_hi) / 2.0
            else:
                beta_hi = beta
                beta = (beta + beta_lo) / 2.0
            h, p = _conditional_probs(row, beta)
        p_cond[i, idx] = p
    p_joint = (p_cond + p_cond.T) / (2.0 * n)
    return np.maximum(p_joint, 1e-12)


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    return float((p * np.log(p / q)).sum())


def _low_dim_q(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sq = (y ** 2).sum(axis=1)
    d2 = np.maximum(sq[:, None] - 2.0 * y @ y.T + sq[None, :], 0.0)
    num = 1.0 / (1.0 + d2)
    np.fill_diagonal(num, 0.0)
    q = np.maximum(num / num.sum(), 1e-12)
    return q, num


def tsne_project(matrix: np.ndarray, perplexity: float = 5.0,
                 iterations: int = 500, seed: int = 0,
                 learning_rate: float = 100.0) -> np.ndarray:
    """Plain quadratic-time t-SNE with early exaggeration, momentum and
    per-coordinate gains. Returns the iterate with the lowest KL seen, so the
    embedding never ends worse than the random start. One row maps to the
    origin."""
    x = np.asarray(matrix, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("matrix must be 2-d and non-empty")
    n = x.shape[0]
    if n == 1:
        return np.zeros((1, 2), dtype=np.float64)
    if perplexity >= n:
        raise ValueError(f"perplexity must be < {n}")
    if perplexity <= 0:
        raise ValueError("perplexity must be positive")

    p = _affinities(x, perplexity)
    rng = np.random.default_rng(seed)
    y = rng.standard_normal((n, 2)) * 1e-4
    vel = np.zeros_like(y)
    gains = np.ones_like(y)

    q, _ = _low_dim_q(y)
    best_kl = _kl(p, q)
    best_y = y.copy()

    exaggeration_until = min(100, iterations // 2)
    momentum_switch = min(250, iterations // 2)
    for it in range(iterations):
        p_eff = p * 4.0 if it < exaggeration_until else p
        q, num = _low_dim_q(y)
        pq = (p_eff - q) * num
        grad = 4.0 * ((np.diag(pq.sum(axis=1)) - pq) @ y)
        momentum = 0.5 if it < momentum_switch else 0.8
        same_sign = np.sign(grad) == np.sign(vel)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, 0.01)
        vel = momentum * vel - learning_rate * gains * grad
        y = y + vel
        y = y - y.mean(axis=0)
        q, _ = _low_dim_q(y)
        kl = _kl(p, q)
        if kl < best_kl:
            best_kl = kl
            best_y = y.copy()
    return best_y


# ---------------------------------------------------------------------------
# exploration payloads

def topic_associations(topic_set: TopicSet) -> list[list[int]]:
    """Per sequence, the global id of its dominant topic within each run."""
    out = []
    slices = topic_set.run_slices()
    for row in topic_set.sequence_topic_matrix:
        out.append([lo + int(np.argmax(row[lo:hi])) for lo, hi in slices])
    return out


def chord_matrix(topic_set: TopicSet) -> np.ndarray:
    """chord[i][j] = number of sequences whose dominant topics include both i
    and j. Dominance is per run, so pairs always bridge runs and a single-run
    set yields all zeros."""
    t = topic_set.num_topics
    chord = np.zeros((t, t), dtype=np.int64)
    for tops in topic_associations(topic_set):
        for a in range(len(tops)):
            for b in range(a + 1, len(tops)):
                i, j = tops[a], tops[b]
                chord[i, j] += 1
                chord[j, i] += 1
    return chord


@dataclass
class TopicProjection:
    coords: np.ndarray               # (|T|, 2)
    glyphs: list[dict]               # per topic: words, shares, class keys
    chord: np.ndarray                # (|T|, |T|) shared-sequence counts
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "coords": self.coords.tolist(),
            "glyphs": self.glyphs,
            "chord": self.chord.tolist(),
            **self.extras,
        }


def topic_projection(topic_set: TopicSet, vocabulary: Vocabulary | None = None,
                     top_words: int = 8, word_classes: dict[str, str] | None = None,
                     perplexity: float = 5.0, iterations: int = 500,
                     seed: int = 0) -> TopicProjection:
    """Assemble everything the exploration view needs: a 2-d layout of the
    pooled topics, per-topic glyph data (top words with shares and class
    keys, association counts, run provenance), and the chord matrix."""
    n = topic_set.num_topics
    if n == 1:
        coords = np.zeros((1, 2), dtype=np.float64)
    else:
        effective = min(perplexity, max(0.5, (n - 1) / 2.0))
        coords = tsne_project(topic_set.topic_word_matrix, perplexity=effective,
                              iterations=iterations, seed=seed)
    if not np.isfinite(coords).all():
        raise RuntimeError("projection produced non-finite coordinates")

    counts = np.zeros(n, dtype=np.int64)
    for tops in topic_associations(topic_set):
        for t in tops:
            counts[t] += 1

    classes = word_classes or {}
    glyphs = []
    for info in topic_set.topics:
        row = topic_set.topic_word_matrix[info.global_id]
        order = np.argsort(-row)[:top_words]
        words = []
        for w in order:
            word = vocabulary.id_to_word[int(w)] if vocabulary is not None else str(int(w))
            words.append({
                "word": word,
                "word_id": int(w),
                "probability": float(row[w]),
                "word_class": classes.get(word, "unlabeled"),
            })
        glyphs.append({
            "topic_id": info.global_id,
            "run_id": info.run_id,
            "topic_index": info.topic_index,
            "association_count": int(counts[info.global_id]),
            "words": words,
        })
    return TopicProjection(coords=coords, glyphs=glyphs, chord=chord_matrix(topic_set))


def projection_payload(topic_set: TopicSet, vocabulary: Vocabulary | None = None,
                       top_words: int = 8, word_classes: dict[str, str] | None = None,
                       perplexity: float = 5.0, iterations: int = 500,
                       seed: int = 0) -> dict:
    """The full JSON document the exploration UI consumes: projection plus
    topic identities and run parameters."""
    projection = topic_projection(topic_set, vocabulary, top_words=top_words,
                                  word_classes=word_classes, perplexity=perplexity,
                                  iterations=iterations, seed=seed)
    payload = projection.to_json()
    payload["topics"] = [
        {"id": t.global_id, "run_id": t.run_id, "topic_index": t.topic_index}
        for t in topic_set.topics
    ]
    payload["runs"] = [run.params_json() for run in topic_set.runs]
    return payload
