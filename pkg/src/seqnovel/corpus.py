"""Corpus handling: vocabularies, encoded sequences, time-series discretization,
and a seeded Markov-mixture generator for synthetic experiments.

Sequences are stored as plain vocabulary ids without sentence boundary markers;
BOS/EOS exist as reserved ids and are introduced only by the language model.
"""
from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

UNK_TOKEN = "<unk>"
BOS_TOKEN = "<bos>"
EOS_TOKEN = "<eos>"
RESERVED_TOKENS = (UNK_TOKEN, BOS_TOKEN, EOS_TOKEN)
UNK_ID, BOS_ID, EOS_ID = 0, 1, 2

_WORD_RE = re.compile(r"[a-z0-9]+")


class Label(str, Enum):
    NORMAL = "normal"
    NOVEL = "novel"
    UNLABELED = "unlabeled"


@dataclass(frozen=True)
class Vocabulary:
    word_to_id: dict[str, int]
    id_to_word: list[str]
    min_frequency: int = 1
    unk_id: int = 0
    bos_id: int = 1
    eos_id: int = 2

    def __len__(self) -> int:
        return len(self.id_to_word)

    def id_of(self, token: str) -> int:
        return self.word_to_id.get(token, self.unk_id)

    def to_json(self) -> dict:
        return {
            "tokens": self.id_to_word[len(RESERVED_TOKENS):],
            "min_frequency": self.min_frequency,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Vocabulary":
        return _assemble_vocabulary(obj["tokens"], obj.get("min_frequency", 1))


@dataclass
class LabeledSequence:
    """A single sequence. `tokens` holds vocabulary ids once encoded; pipeline
    stages that run before encoding (e.g. windowing raw bin tokens) reuse this
    record with the raw symbols in place of ids."""
    id: str
    tokens: list
    label: Label = Label.UNLABELED
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.tokens:
            raise ValueError(f"sequence {self.id!r} has no tokens")


@dataclass
class Corpus:
    vocabulary: Vocabulary
    sequences: list[LabeledSequence]

    def __post_init__(self):
        seen = set()
        size = len(self.vocabulary)
        for seq in self.sequences:
            if seq.id in seen:
                raise ValueError(f"duplicate sequence id {seq.id!r}")
            seen.add(seq.id)
            for tok in seq.tokens:
                if not isinstance(tok, (int, np.integer)) or not 0 <= tok < size:
                    raise ValueError(
                        f"sequence {seq.id!r} has invalid token id {tok!r} "
                        f"for vocabulary of size {size}"
                    )

    def __len__(self) -> int:
        return len(self.sequences)

    def labels(self) -> list[Label]:
        return [s.label for s in self.sequences]

    def subset(self, ids: Iterable[str]) -> "Corpus":
        wanted = set(ids)
        return Corpus(self.vocabulary, [s for s in self.sequences if s.id in wanted])

    def to_json(self) -> dict:
        return {
            "vocabulary": self.vocabulary.to_json(),
            "sequences": [
                {
                    "id": s.id,
                    "tokens": [int(t) for t in s.tokens],
                    "label": s.label.value,
                    "meta": s.meta,
                }
                for s in self.sequences
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Corpus":
        vocab = Vocabulary.from_json(obj["vocabulary"])
        seqs = [
            LabeledSequence(
                id=s["id"],
                tokens=list(s["tokens"]),
                label=Label(s.get("label", "unlabeled")),
                meta=s.get("meta", {}),
            )
            for s in obj["sequences"]
        ]
        return cls(vocab, seqs)


def _assemble_vocabulary(tokens: Sequence[str], min_frequency: int) -> Vocabulary:
    id_to_word = list(RESERVED_TOKENS) + list(tokens)
    word_to_id = {w: i for i, w in enumerate(id_to_word)}
    if len(word_to_id) != len(id_to_word):
        raise ValueError("vocabulary contains duplicate tokens")
    return Vocabulary(word_to_id=word_to_id, id_to_word=id_to_word,
                      min_frequency=min_frequency)


def build_vocabulary(raw_docs: Sequence[Sequence[str]], min_frequency: int = 1) -> Vocabulary:
    """Count tokens across `raw_docs` and keep those seen at least
    `min_frequency` times. Reserved ids (UNK/BOS/EOS) come first; retained
    tokens are ordered by descending count, ties alphabetically."""
    if not raw_docs:
        raise ValueError("empty corpus")
    counts = Counter()
    for doc in raw_docs:
        counts.update(doc)
    for reserved in RESERVED_TOKENS:
        counts.pop(reserved, None)
    kept = sorted(
        (tok for tok, c in counts.items() if c >= min_frequency),
        key=lambda tok: (-counts[tok], tok),
    )
    return _assemble_vocabulary(kept, min_frequency)


def encode(raw_tokens: Sequence[str], vocabulary: Vocabulary) -> list[int]:
    """Map tokens to ids, unknown tokens to `unk_id`. Order preserved; no
    BOS/EOS added."""
    if not raw_tokens:
        raise ValueError("cannot encode an empty token list")
    return [vocabulary.id_of(t) for t in raw_tokens]


def decode(ids: Sequence[int], vocabulary: Vocabulary) -> list[str]:
    return [vocabulary.id_to_word[i] for i in ids]


def bag_of_words(tokens: Sequence[int], vocabulary: Vocabulary) -> np.ndarray:
    """Occurrence counts over the full vocabulary (reserved slots stay zero)."""
    counts = np.zeros(len(vocabulary), dtype=np.int64)
    for t in tokens:
        counts[t] += 1
    return counts


def tokenize_text(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs (review-style text)."""
    return _WORD_RE.findall(text.lower())


# ---------------------------------------------------------------------------
# Time series

@dataclass(frozen=True)
class BinConfig:
    low: float
    high: float
    bin_width: float
    window_length: int

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError("low must be < high")
        if self.bin_width <= 0:
            raise ValueError("bin_width must be positive")
        if self.window_length < 1:
            raise ValueError("window_length must be >= 1")

    @property
    def num_bins(self) -> int:
        return math.ceil((self.high - self.low) / self.bin_width)


def discretize_time_series(values: Sequence[float], cfg: BinConfig) -> list[str]:
    """Map each value to its uniform-bin token "bin_<i>". Values must lie in
    [low, high]; the upper edge clamps into the last bin."""
    tokens = []
    last = cfg.num_bins - 1
    for idx, v in enumerate(values):
        if v < cfg.low or v > cfg.high:
            raise ValueError(f"value {v} at index {idx} outside [{cfg.low}, {cfg.high}]")
        b = min(int(math.floor((v - cfg.low) / cfg.bin_width)), last)
        tokens.append(f"bin_{b}")
    return tokens


def windowize(symbols: Sequence, anomaly_flags: Sequence[bool], window_length: int,
              id_prefix: str = "window") -> list[LabeledSequence]:
    """Cut a symbol stream into consecutive non-overlapping windows of exactly
    `window_length`, dropping the trailing remainder. A window is Novel iff it
    contains at least one anomalous point."""
    if window_length < 1:
        raise ValueError("window_length must be >= 1")
    if len(symbols) != len(anomaly_flags):
        raise ValueError("symbols and anomaly_flags must have the same length")
    windows = []
    for w in range(len(symbols) // window_length):
        lo = w * window_length
        hi = lo + window_length
        label = Label.NOVEL if any(anomaly_flags[lo:hi]) else Label.NORMAL
        windows.append(LabeledSequence(id=f"{id_prefix}-{w}",
                                       tokens=list(symbols[lo:hi]), label=label))
    return windows


# ---------------------------------------------------------------------------
# Synthetic Markov mixtures

@dataclass
class MarkovComponent:
    initial: np.ndarray        # (V,)
    transitions: np.ndarray    # (V, V), rows sum to 1

    def __post_init__(self):
        if not np.allclose(self.transitions.sum(axis=1), 1.0, atol=1e-9):
            raise ValueError("transition rows must sum to 1")
        if not math.isclose(float(self.initial.sum()), 1.0, abs_tol=1e-9):
            raise ValueError("initial distribution must sum to 1")


@dataclass
class MixtureGenerator:
    tokens: list[str]                  # shared raw vocabulary
    components: list[MarkovComponent]
    mixture_weights: np.ndarray
    perturbation_rate: float = 0.3

    def __post_init__(self):
        if not 0.0 <= self.perturbation_rate <= 1.0:
            raise ValueError("perturbation_rate must be in [0, 1]")
        if not math.isclose(float(self.mixture_weights.sum()), 1.0, abs_tol=1e-9):
            raise ValueError("mixture weights must sum to 1")

    @property
    def num_components(self) -> int:
        return len(self.components)

    def perturbed_components(self) -> list[MarkovComponent]:
        """Novel-sequence generators: each transition row mixed with the uniform
        distribution at `perturbation_rate`. Initial distributions unchanged."""
        v = len(self.tokens)
        rate = self.perturbation_rate
        out = []
        for comp in self.components:
            trans = (1.0 - rate) * comp.transitions + rate / v
            trans = trans / trans.sum(axis=1, keepdims=True)
            out.append(MarkovComponent(comp.initial.copy(), trans))
        return out


def _sample_chain(comp: MarkovComponent, length: int, rng: np.random.Generator) -> list[int]:
    init_cdf = np.cumsum(comp.initial)
    trans_cdf = np.cumsum(comp.transitions, axis=1)
    state = int(np.searchsorted(init_cdf, rng.random()))
    seq = [state]
    for _ in range(length - 1):
        state = int(np.searchsorted(trans_cdf[state], rng.random()))
        seq.append(state)
    return seq


def make_partially_disjoint_mixture(num_components: int = 3, vocab_size: int = 60,
                                    shared_fraction: float = 0.1,
                                    concentration: float = 0.4,
                                    perturbation_rate: float = 0.3,
                                    seed: int = 0) -> MixtureGenerator:
    """Build a mixture whose components emit tokens mostly from private blocks
    of the shared vocabulary, with a small shared block. Transition rows are
    Dirichlet-sampled over each component's support."""
    rng = np.random.default_rng(seed)
    tokens = [f"w{i:03d}" for i in range(vocab_size)]
    n_shared = int(round(vocab_size * shared_fraction))
    private_total = vocab_size - n_shared
    block = private_total // num_components
    supports = []
    start = 0
    for c in range(num_components):
        size = block + (1 if c < private_total % num_components else 0)
        private = list(range(start, start + size))
        start += size
        supports.append(private + list(range(private_total, vocab_size)))

    components = []
    for support in supports:
        initial = np.zeros(vocab_size)
        initial[support] = rng.dirichlet(np.full(len(support), concentration))
        transitions = np.zeros((vocab_size, vocab_size))
        for s in range(vocab_size):
            transitions[s, support] = rng.dirichlet(np.full(len(support), concentration))
        components.append(MarkovComponent(initial, transitions))
    weights = np.full(num_components, 1.0 / num_components)
    return MixtureGenerator(tokens, components, weights, perturbation_rate)


def generate_synthetic_mixture(gen: MixtureGenerator, n_normal: int, n_novel: int,
                               seq_len_range: tuple[int, int], seed: int,
                               vocabulary: Vocabulary | None = None) -> Corpus:
    """Sample a labeled corpus: normal sequences from the mixture, novel ones
    from its perturbed copy. Each sequence's true component id is kept in
    `meta`. Deterministic given the seed."""
    rng = np.random.default_rng(seed)
    lo, hi = seq_len_range
    if lo < 1 or hi < lo:
        raise ValueError("invalid sequence length range")
    weights = gen.mixture_weights
    perturbed = gen.perturbed_components()

    raw_docs: list[list[str]] = []
    records: list[tuple[str, Label, dict]] = []
    for kind, count, comps, label in (
        ("normal", n_normal, gen.components, Label.NORMAL),
        ("novel", n_novel, perturbed, Label.NOVEL),
    ):
        for i in range(count):
            c = int(np.searchsorted(np.cumsum(weights), rng.random()))
            length = int(rng.integers(lo, hi + 1))
            ids = _sample_chain(comps[c], length, rng)
            raw_docs.append([gen.tokens[t] for t in ids])
            records.append((f"{kind}-{i}", label,
                            {"component": c, "perturbed": kind == "novel"}))

    if vocabulary is None:
        vocabulary = build_vocabulary(raw_docs, min_frequency=1)
    sequences = [
        LabeledSequence(id=sid, tokens=encode(doc, vocabulary), label=label, meta=meta)
        for doc, (sid, label, meta) in zip(raw_docs, records)
    ]
    return Corpus(vocabulary, sequences)


def split_corpus(corpus: Corpus, fractions: Sequence[float], seed: int,
                 stratify: bool = True) -> list[Corpus]:
    """Split into len(fractions) corpora sharing the vocabulary. Fractions must
    sum to 1; stratified by label by default."""
    if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise ValueError("fractions must sum to 1")
    rng = np.random.default_rng(seed)
    groups: dict[Label, list[int]] = {}
    if stratify:
        for i, s in enumerate(corpus.sequences):
            groups.setdefault(s.label, []).append(i)
    else:
        groups[Label.UNLABELED] = list(range(len(corpus.sequences)))

    parts: list[list[int]] = [[] for _ in fractions]
    for members in groups.values():
        order = rng.permutation(len(members))
        bounds = np.floor(np.cumsum(fractions) * len(members)).astype(int)
        start = 0
        for p, end in enumerate(bounds):
            parts[p].extend(members[j] for j in order[start:end])
            start = end
    return [
        Corpus(corpus.vocabulary, [corpus.sequences[i] for i in sorted(part)])
        for part in parts
    ]


# ---------------------------------------------------------------------------
# File formats: one sequence per line, whitespace-separated tokens; labels in
# a sidecar with one of {normal,novel} per line; series as one float per line.

def read_token_file(path) -> list[list[str]]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            toks = line.split()
            if toks:
                docs.append(toks)
    return docs


def write_token_file(path, docs: Iterable[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(" ".join(str(t) for t in doc) + "\n")


def read_label_file(path) -> list[Label]:
    labels = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip().lower()
            if word:
                labels.append(Label(word))
    return labels


def write_label_file(path, labels: Iterable[Label]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for lab in labels:
            fh.write(lab.value + "\n")


def read_series_file(path) -> list[float]:
    values = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                values.append(float(line))
    return values


def corpus_from_files(seq_path, label_path=None, min_frequency: int = 1,
                      vocabulary: Vocabulary | None = None,
                      id_prefix: str = "seq") -> Corpus:
    docs = read_token_file(seq_path)
    if not docs:
        raise ValueError("empty corpus")
    labels = read_label_file(label_path) if label_path else [Label.UNLABELED] * len(docs)
    if len(labels) != len(docs):
        raise ValueError(
            f"label sidecar has {len(labels)} lines, sequence file has {len(docs)}"
        )
    if vocabulary is None:
        vocabulary = build_vocabulary(docs, min_frequency=min_frequency)
    seqs = [
        LabeledSequence(id=f"{id_prefix}-{i}", tokens=encode(doc, vocabulary), label=lab)
        for i, (doc, lab) in enumerate(zip(docs, labels))
    ]
    return Corpus(vocabulary, seqs)


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(corpus.to_json(), fh)


def load_corpus(path) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return Corpus.from_json(json.load(fh))
