"""Single-layer LSTM language model on numpy.

Covers the full modeling loop: seeded initialization, forward prediction with
BOS/EOS framing, cross-entropy training with complete backpropagation through
time and Adam, a finite-difference gradient checker, and perplexity scoring
(geometric mean of inverse predicted probabilities of the true next tokens,
computed in log space).
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .corpus import BOS_ID, EOS_ID

PARAM_NAMES = ("embedding", "w_gates", "u_gates", "b_gates", "w_out", "b_out")
CHECKPOINT_FORMAT = "seqnovel-lstm-v1"


@dataclass
class LstmLanguageModel:
    vocab_size: int
    embed_dim: int
    hidden_dim: int
    embedding: np.ndarray   # (V, d_e)
    w_gates: np.ndarray     # (4*d_h, d_e), gate row order: input, forget, cell, output
    u_gates: np.ndarray     # (4*d_h, d_h)
    b_gates: np.ndarray     # (4*d_h,)
    w_out: np.ndarray       # (V, d_h)
    b_out: np.ndarray       # (V,)
    seed: int = 0

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    @property
    def parameter_count(self) -> int:
        return sum(p.size for p in self.params().values())

    def copy(self) -> "LstmLanguageModel":
        return copy.deepcopy(self)

    def to_json(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "vocab_size": self.vocab_size,
            "embed_dim": self.embed_dim,
            "hidden_dim": self.hidden_dim,
            "seed": self.seed,
            "params": {name: p.ravel().tolist() for name, p in self.params().items()},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LstmLanguageModel":
        if obj.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"unsupported checkpoint format {obj.get('format')!r}")
        v, de, dh = obj["vocab_size"], obj["embed_dim"], obj["hidden_dim"]
        shapes = _param_shapes(v, de, dh)
        params = {
            name: np.asarray(obj["params"][name], dtype=np.float64).reshape(shapes[name])
            for name in PARAM_NAMES
        }
        return cls(vocab_size=v, embed_dim=de, hidden_dim=dh, seed=obj.get("seed", 0),
                   **params)


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clip_norm: float = 5.0
    max_len: int = 200
    seed: int = 0

    def __post_init__(self):
        for name in ("epochs", "batch_size", "learning_rate", "clip_norm", "max_len"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in (
            "epochs", "batch_size", "learning_rate", "beta1", "beta2",
            "epsilon", "clip_norm", "max_len", "seed")}

    @classmethod
    def from_json(cls, obj: dict) -> "TrainConfig":
        return cls(**obj)


def _param_shapes(vocab_size: int, embed_dim: int, hidden_dim: int) -> dict[str, tuple]:
    return {
        "embedding": (vocab_size, embed_dim),
        "w_gates": (4 * hidden_dim, embed_dim),
        "u_gates": (4 * hidden_dim, hidden_dim),
        "b_gates": (4 * hidden_dim,),
        "w_out": (vocab_size, hidden_dim),
        "b_out": (vocab_size,),
    }


def init_model(vocab_size: int, embed_dim: int, hidden_dim: int,
               seed: int = 0) -> LstmLanguageModel:
    """Uniform(-r, r) initialization with r = 1/sqrt(hidden_dim); the forget
    gate bias is then set to 1.0."""
    if min(vocab_size, embed_dim, hidden_dim) < 1:
        raise ValueError("all dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    r = 1.0 / math.sqrt(hidden_dim)
    shapes = _param_shapes(vocab_size, embed_dim, hidden_dim)
    params = {name: rng.uniform(-r, r, size=shape) for name, shape in shapes.items()}
    params["b_gates"][hidden_dim:2 * hidden_dim] = 1.0
    return LstmLanguageModel(vocab_size=vocab_size, embed_dim=embed_dim,
                             hidden_dim=hidden_dim, seed=seed, **params)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _prepare_batch(sequences: Sequence[Sequence[int]], max_len: int):
    """Pad into (inputs, targets, mask). Inputs are BOS-prefixed, targets are
    the tokens followed by EOS, so each sequence contributes len+1 positions."""
    lengths = [min(len(s), max_len) + 1 for s in sequences]
    t_max = max(lengths)
    b = len(sequences)
    inputs = np.zeros((b, t_max), dtype=np.int64)
    targets = np.zeros((b, t_max), dtype=np.int64)
    mask = np.zeros((b, t_max), dtype=np.float64)
    for i, seq in enumerate(sequences):
        toks = list(seq[:max_len])
        n = len(toks) + 1
        inputs[i, 0] = BOS_ID
        inputs[i, 1:n] = toks
        targets[i, :n - 1] = toks
        targets[i, n - 1] = EOS_ID
        mask[i, :n] = 1.0
    return inputs, targets, mask


def _forward_pass(model: LstmLanguageModel, inputs: np.ndarray):
    """Run the recurrence over a padded (B, T) id batch. Returns logits and the
    per-step activation cache needed for BPTT."""
    b, t_max = inputs.shape
    dh = model.hidden_dim
    x = model.embedding[inputs]                      # (B, T, d_e)
    zx = x @ model.w_gates.T + model.b_gates         # input-to-gate part, all steps

    h = np.zeros((b, dh))
    c = np.zeros((b, dh))
    cache = {"x": x, "inputs": inputs, "gates": [], "c_prev": [],
             "c_tanh": [], "h_prev": [], "h": np.empty((b, t_max, dh))}
    for t in range(t_max):
        z = zx[:, t] + h @ model.u_gates.T
        gi = _sigmoid(z[:, :dh])
        gf = _sigmoid(z[:, dh:2 * dh])
        gg = np.tanh(z[:, 2 * dh:3 * dh])
        go = _sigmoid(z[:, 3 * dh:])
        c_new = gf * c + gi * gg
        c_tanh = np.tanh(c_new)
        h_new = go * c_tanh
        cache["gates"].append((gi, gf, gg, go))
        cache["c_prev"].append(c)
        cache["c_tanh"].append(c_tanh)
        cache["h_prev"].append(h)
        cache["h"][:, t] = h_new
        h, c = h_new, c_new
    logits = cache["h"] @ model.w_out.T + model.b_out   # (B, T, V)
    return logits, cache


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _loss_and_grads(model: LstmLanguageModel, inputs, targets, mask):
    """Mean next-token cross-entropy over unmasked positions, with gradients
    for every parameter (full backpropagation through time)."""
    logits, cache = _forward_pass(model, inputs)
    logq = _log_softmax(logits)
    total = mask.sum()
    b_idx, t_idx = np.nonzero(mask)
    loss = -logq[b_idx, t_idx, targets[b_idx, t_idx]].sum() / total

    dlogits = np.exp(logq)
    dlogits[b_idx, t_idx, targets[b_idx, t_idx]] -= 1.0
    dlogits *= mask[:, :, None] / total

    h_all = cache["h"]
    grads = {name: np.zeros_like(p) for name, p in model.params().items()}
    grads["w_out"] = np.einsum("btv,bth->vh", dlogits, h_all)
    grads["b_out"] = dlogits.sum(axis=(0, 1))
    dh_loss = dlogits @ model.w_out                  # (B, T, d_h)

    dh = model.hidden_dim
    b = inputs.shape[0]
    t_max = inputs.shape[1]
    dz_all = np.empty((b, t_max, 4 * dh))
    dh_next = np.zeros((b, dh))
    dc_next = np.zeros((b, dh))
    for t in reversed(range(t_max)):
        gi, gf, gg, go = cache["gates"][t]
        c_tanh = cache["c_tanh"][t]
        dht = dh_loss[:, t] + dh_next
        dgo = dht * c_tanh
        dc = dc_next + dht * go * (1.0 - c_tanh * c_tanh)
        dgi = dc * gg
        dgf = dc * cache["c_prev"][t]
        dgg = dc * gi
        dz = dz_all[:, t]
        dz[:, :dh] = dgi * gi * (1.0 - gi)
        dz[:, dh:2 * dh] = dgf * gf * (1.0 - gf)
        dz[:, 2 * dh:3 * dh] = dgg * (1.0 - gg * gg)
        dz[:, 3 * dh:] = dgo * go * (1.0 - go)
        dh_next = dz @ model.u_gates
        dc_next = dc * gf

    flat_dz = dz_all.reshape(-1, 4 * dh)
    grads["w_gates"] = flat_dz.T @ cache["x"].reshape(-1, model.embed_dim)
    h_prev = np.stack(cache["h_prev"], axis=1)        # (B, T, d_h)
    grads["u_gates"] = flat_dz.T @ h_prev.reshape(-1, dh)
    grads["b_gates"] = flat_dz.sum(axis=0)
    dx = dz_all @ model.w_gates                       # (B, T, d_e)
    np.add.at(grads["embedding"], inputs.reshape(-1), dx.reshape(-1, model.embed_dim))
    return loss, grads, total


def forward(model: LstmLanguageModel, tokens: Sequence[int]) -> np.ndarray:
    """Predicted next-token distributions for [BOS, v_1..v_n]: one probability
    row per target position, the last being the EOS prediction."""
    _check_ids(model, tokens)
    inputs, _, _ = _prepare_batch([list(tokens)], max_len=max(len(tokens), 1))
    logits, _ = _forward_pass(model, inputs)
    return np.exp(_log_softmax(logits[0]))


def sequence_log_probs(model: LstmLanguageModel, tokens: Sequence[int]) -> np.ndarray:
    """Log probability assigned to each true target (the tokens, then EOS)."""
    _check_ids(model, tokens)
    inputs, targets, _ = _prepare_batch([list(tokens)], max_len=max(len(tokens), 1))
    logits, _ = _forward_pass(model, inputs)
    logq = _log_softmax(logits[0])
    return logq[np.arange(targets.shape[1]), targets[0]]


def perplexity(model: LstmLanguageModel, tokens: Sequence[int]) -> float:
    """PP(s) = exp(mean negative log probability of the true next tokens),
    EOS included as the final target. Larger means less probable under the
    model."""
    if len(tokens) == 0:
        raise ValueError("cannot score an empty sequence")
    logp = sequence_log_probs(model, tokens)
    return float(np.exp(-logp.mean()))


def perplexity_from_probs(probs: Sequence[float]) -> float:
    """Perplexity of an explicit list of true-token probabilities."""
    arr = np.asarray(probs, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot score an empty probability list")
    return float(np.exp(-np.log(arr).mean()))


def _check_ids(model: LstmLanguageModel, tokens: Sequence[int]) -> None:
    for t in tokens:
        if not 0 <= t < model.vocab_size:
            raise ValueError(f"token id {t} out of range for vocab size {model.vocab_size}")


def train(model: LstmLanguageModel, sequences: Sequence[Sequence[int]],
          config: TrainConfig,
          progress: Callable[[int, int, float], None] | None = None,
          ) -> tuple[LstmLanguageModel, list[float]]:
    """Adam training with global-norm gradient clipping. Returns a trained
    copy of the model and the per-epoch mean loss (the input model is left
    untouched). Shuffle order, and therefore the result, is fixed by
    config.seed."""
    if not sequences:
        raise ValueError("empty training set")
    model = model.copy()
    seqs = [list(s) for s in sequences]
    rng = np.random.default_rng(config.seed)
    adam_m = {n: np.zeros_like(p) for n, p in model.params().items()}
    adam_v = {n: np.zeros_like(p) for n, p in model.params().items()}
    step = 0
    epoch_losses: list[float] = []

    for epoch in range(config.epochs):
        order = rng.permutation(len(seqs))
        loss_sum = 0.0
        count_sum = 0.0
        for start in range(0, len(seqs), config.batch_size):
            batch = [seqs[i] for i in order[start:start + config.batch_size]]
            inputs, targets, mask = _prepare_batch(batch, config.max_len)
            loss, grads, n_targets = _loss_and_grads(model, inputs, targets, mask)
            if not math.isfinite(loss):
                raise RuntimeError(
                    f"training diverged: non-finite loss at epoch {epoch}, "
                    f"batch {start // config.batch_size}"
                )
            loss_sum += loss * n_targets
            count_sum += n_targets

            norm = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
            scale = config.clip_norm / norm if norm > config.clip_norm else 1.0
            step += 1
            bc1 = 1.0 - config.beta1 ** step
            bc2 = 1.0 - config.beta2 ** step
            for name, p in model.params().items():
                g = grads[name] * scale
                adam_m[name] = config.beta1 * adam_m[name] + (1 - config.beta1) * g
                adam_v[name] = config.beta2 * adam_v[name] + (1 - config.beta2) * g * g
                p -= config.learning_rate * (adam_m[name] / bc1) / (
                    np.sqrt(adam_v[name] / bc2) + config.epsilon)
        epoch_losses.append(loss_sum / count_sum)
        if progress is not None:
            progress(epoch + 1, config.epochs, epoch_losses[-1])
    return model, epoch_losses


def batch_loss(model: LstmLanguageModel, sequences: Sequence[Sequence[int]],
               max_len: int = 10_000) -> float:
    """Mean next-token cross-entropy of a set of sequences under the model."""
    inputs, targets, mask = _prepare_batch([list(s) for s in sequences], max_len)
    loss, _, _ = _loss_and_grads(model, inputs, targets, mask)
    return float(loss)


def gradient_check(model: LstmLanguageModel, tokens: Sequence[int],
                   epsilon: float = 1e-4) -> float:
    """Max relative error between analytic gradients and central finite
    differences of the sequence loss, over every parameter entry. Intended for
    small models only (two forward passes per parameter)."""
    inputs, targets, mask = _prepare_batch([list(tokens)], max_len=len(tokens))
    _, grads, _ = _loss_and_grads(model, inputs, targets, mask)

    def loss_only() -> float:
        logits, _ = _forward_pass(model, inputs)
        logq = _log_softmax(logits)
        b_idx, t_idx = np.nonzero(mask)
        return float(-logq[b_idx, t_idx, targets[b_idx, t_idx]].sum() / mask.sum())

    worst = 0.0
    for name, p in model.params().items():
        flat = p.reshape(-1)
        gflat = grads[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            up = loss_only()
            flat[i] = orig - epsilon
            down = loss_only()
            flat[i] = orig
            numeric = (up - down) / (2.0 * epsilon)
            denom = max(abs(gflat[i]), abs(numeric), 1e-8)
            worst = max(worst, abs(gflat[i] - numeric) / denom)
    return worst


def save_model(model: LstmLanguageModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_json(), fh)


def load_model(path) -> LstmLanguageModel:
    with open(path, encoding="utf-8") as fh:
        return LstmLanguageModel.from_json(json.load(fh))
