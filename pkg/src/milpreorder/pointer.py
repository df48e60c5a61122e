"""Pointer network over cluster descriptors.

A GRU encoder reads the descriptors in cluster-id order; a GRU decoder
points back at the encoder states through additive attention
(v . tanh(W1 enc_i + W2 dec)), with already-chosen clusters masked out, so
the stepwise softmaxes factorize a proper distribution over permutations.
Training maximizes the likelihood of orderings labeled positive (they sped
the solver up) and minimizes the likelihood of negative ones, with Adam on
a from-scratch autodiff graph.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autodiff import Tensor, masked_log_softmax, sigmoid, stack, tanh
from .model import Permutation

CHECKPOINT_FORMAT_VERSION = "clcr-ckpt/1"

POSITIVE = "positive"
NEGATIVE = "negative"

_TENSOR_NAMES = (
    "embed_w", "embed_b",
    "enc_wx", "enc_wh", "enc_bx", "enc_bh",
    "dec_wx", "dec_wh", "dec_bx", "dec_bh",
    "attn_w1", "attn_w2", "attn_v",
    "start",
)


@dataclass
class PointerNetParams:
    d_in: int
    embed_dim: int
    hidden_dim: int
    tensors: dict[str, np.ndarray]
    norm_mean: np.ndarray
    norm_std: np.ndarray
    config: dict = field(default_factory=dict)

    def clone(self) -> "PointerNetParams":
        return PointerNetParams(
            d_in=self.d_in,
            embed_dim=self.embed_dim,
            hidden_dim=self.hidden_dim,
            tensors={k: v.copy() for k, v in self.tensors.items()},
            norm_mean=self.norm_mean.copy(),
            norm_std=self.norm_std.copy(),
            config=copy.deepcopy(self.config),
        )

    def to_json(self) -> dict:
        return {
            "version": CHECKPOINT_FORMAT_VERSION,
            "dims": {"d_in": self.d_in, "embed": self.embed_dim, "hidden": self.hidden_dim},
            "tensors": {
                name: {"shape": list(arr.shape), "data": [float(v) for v in arr.ravel()]}
                for name, arr in self.tensors.items()
            },
            "norm": {
                "mean": [float(v) for v in self.norm_mean],
                "std": [float(v) for v in self.norm_std],
            },
            "config": self.config,
        }

    @staticmethod
    def from_json(data: dict) -> "PointerNetParams":
        if data.get("version") != CHECKPOINT_FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {data.get('version')!r}")
        dims = data["dims"]
        tensors = {
            name: np.array(spec["data"], dtype=float).reshape(spec["shape"])
            for name, spec in data["tensors"].items()
        }
        return PointerNetParams(
            d_in=int(dims["d_in"]),
            embed_dim=int(dims["embed"]),
            hidden_dim=int(dims["hidden"]),
            tensors=tensors,
            norm_mean=np.array(data["norm"]["mean"], dtype=float),
            norm_std=np.array(data["norm"]["std"], dtype=float),
            config=dict(data.get("config", {})),
        )


def save_checkpoint(params: PointerNetParams, path) -> None:
    Path(path).write_text(json.dumps(params.to_json(), sort_keys=True))


def load_checkpoint(path) -> PointerNetParams:
    return PointerNetParams.from_json(json.loads(Path(path).read_text()))


def init_params(
    d_in: int = 12,
    embed_dim: int = 128,
    hidden_dim: int = 128,
    seed: int = 0,
    config: dict | None = None,
) -> PointerNetParams:
    """Uniform [-1/sqrt(H), 1/sqrt(H)] initialization for every tensor."""
    rng = np.random.default_rng(seed)
    bound = 1.0 / math.sqrt(hidden_dim)
    e, h, d = embed_dim, hidden_dim, d_in

    def u(*shape):
        return rng.uniform(-bound, bound, size=shape)

    tensors = {
        "embed_w": u(e, d), "embed_b": u(e),
        "enc_wx": u(3 * h, e), "enc_wh": u(3 * h, h), "enc_bx": u(3 * h), "enc_bh": u(3 * h),
        "dec_wx": u(3 * h, e), "dec_wh": u(3 * h, h), "dec_bx": u(3 * h), "dec_bh": u(3 * h),
        "attn_w1": u(h, h), "attn_w2": u(h, h), "attn_v": u(h),
        "start": u(e),
    }
    return PointerNetParams(
        d_in=d_in,
        embed_dim=embed_dim,
        hidden_dim=hidden_dim,
        tensors=tensors,
        norm_mean=np.zeros(d_in),
        norm_std=np.ones(d_in),
        config=dict(config or {}),
    )


@dataclass
class TrainingSample:
    """One labeled (descriptors, cluster permutation) pair with its reward."""

    instance: str
    descriptors: np.ndarray  # (k, d_in)
    perm: Permutation
    label: str               # POSITIVE or NEGATIVE
    reward: float

    def __post_init__(self):
        if self.label not in (POSITIVE, NEGATIVE):
            raise ValueError(f"label must be {POSITIVE!r} or {NEGATIVE!r}")
        self.descriptors = descriptor_matrix(self.descriptors)


@dataclass
class PermutationSample:
    perm: Permutation
    log_prob: float
    stepwise_logits: tuple[np.ndarray, ...]  # masked log-softmax rows per step


def descriptor_matrix(descriptors) -> np.ndarray:
    """Coerce ClusterDescriptor lists or arrays into a (k, d_in) float matrix."""
    if isinstance(descriptors, np.ndarray):
        mat = descriptors.astype(float)
    else:
        rows = [
            np.asarray(d.summary, dtype=float) if hasattr(d, "summary") else np.asarray(d, dtype=float)
            for d in descriptors
        ]
        mat = np.stack(rows)
    if mat.ndim != 2:
        raise ValueError(f"descriptors must form a 2D matrix, got shape {mat.shape}")
    return mat


def _wrap(params: PointerNetParams, requires_grad: bool) -> dict[str, Tensor]:
    return {name: Tensor(arr, requires_grad=requires_grad) for name, arr in params.tensors.items()}


def _gru_step(wx, wh, bx, bh, x, h, H: int):
    gx = wx @ x + bx
    gh = wh @ h + bh
    r = sigmoid(gx[0:H] + gh[0:H])
    z = sigmoid(gx[H:2 * H] + gh[H:2 * H])
    cand = tanh(gx[2 * H:3 * H] + r * gh[2 * H:3 * H])
    return (1.0 - z) * cand + z * h


def _decode(params: PointerNetParams, w: dict[str, Tensor], X: np.ndarray, choose):
    """Shared encode/decode pass.

    choose(logp_row, mask, step) -> cluster index drives teacher forcing,
    sampling, and greedy decoding alike. Returns the visited order, the
    per-step log-prob Tensors of the chosen clusters, and the raw rows.
    """
    k = X.shape[0]
    if k < 1:
        raise ValueError("need at least one cluster descriptor")
    H = params.hidden_dim

    Xn = (X - params.norm_mean) / params.norm_std
    emb = [w["embed_w"] @ Tensor(Xn[t]) + w["embed_b"] for t in range(k)]

    h = Tensor(np.zeros(H))
    states = []
    for t in range(k):
        h = _gru_step(w["enc_wx"], w["enc_wh"], w["enc_bx"], w["enc_bh"], emb[t], h, H)
        states.append(h)
    enc = stack(states)                      # (k, H)
    attn_keys = enc @ w["attn_w1"].T         # one-time W1 pass over encoder states

    d = h
    inp = w["start"]
    mask = np.ones(k, dtype=bool)
    order: list[int] = []
    terms = []
    rows = []
    for step in range(k):
        d = _gru_step(w["dec_wx"], w["dec_wh"], w["dec_bx"], w["dec_bh"], inp, d, H)
        scores = tanh(attn_keys + (w["attn_w2"] @ d)) @ w["attn_v"]
        logp = masked_log_softmax(scores, mask)
        idx = int(choose(logp.data, mask, step))
        if not mask[idx]:
            raise ValueError(f"choose() picked a masked cluster {idx} at step {step}")
        order.append(idx)
        terms.append(logp[idx])
        rows.append(logp.data.copy())
        mask[idx] = False
        inp = emb[idx]
    return order, terms, rows


def _score_tensor(params: PointerNetParams, w: dict[str, Tensor], X: np.ndarray, order) -> Tensor:
    order = list(order)
    _, terms, _ = _decode(params, w, X, lambda row, mask, step: order[step])
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return total


def forward_score(params: PointerNetParams, descriptors, perm: Permutation) -> float:
    """Teacher-forced log-probability of perm under the factorized model."""
    X = descriptor_matrix(descriptors)
    if len(perm) != X.shape[0]:
        raise ValueError(f"permutation length {len(perm)} != k={X.shape[0]}")
    return float(_score_tensor(params, _wrap(params, False), X, perm.order).data)


def sample_permutation(params: PointerNetParams, descriptors, seed: int = 0) -> PermutationSample:
    """Ancestral sample from the masked stepwise softmaxes, deterministic per seed."""
    X = descriptor_matrix(descriptors)
    rng = np.random.default_rng(seed)

    def choose(logp_row, mask, step):
        probs = np.where(mask, np.exp(np.where(mask, logp_row, 0.0)), 0.0)
        probs = probs / probs.sum()
        return rng.choice(len(probs), p=probs)

    order, terms, rows = _decode(params, _wrap(params, False), X, choose)
    log_prob = float(sum(t.data for t in terms))
    return PermutationSample(
        perm=Permutation(tuple(order)), log_prob=log_prob, stepwise_logits=tuple(rows)
    )


def greedy_decode(params: PointerNetParams, descriptors) -> Permutation:
    """Argmax at each step; ties break to the lowest cluster id."""
    X = descriptor_matrix(descriptors)
    order, _, _ = _decode(
        params, _wrap(params, False), X, lambda row, mask, step: np.argmax(row)
    )
    return Permutation(tuple(order))


def _loss_graph(params: PointerNetParams, w: dict[str, Tensor], batch) -> tuple[Tensor, list[float]]:
    if not batch:
        raise ValueError("batch must be nonempty")
    pos, neg = [], []
    values = []
    for sample in batch:
        lp = _score_tensor(params, w, sample.descriptors, sample.perm.order)
        values.append(float(lp.data))
        (pos if sample.label == POSITIVE else neg).append(lp)

    loss = Tensor(0.0)
    if pos:
        total = pos[0]
        for t in pos[1:]:
            total = total + t
        loss = loss + (-1.0 / len(pos)) * total
    if neg:
        total = neg[0]
        for t in neg[1:]:
            total = total + t
        loss = loss + (1.0 / len(neg)) * total
    return loss, values


def contrastive_loss(params: PointerNetParams, batch) -> float:
    """-mean log p over positives + mean log p over negatives."""
    loss, _ = _loss_graph(params, _wrap(params, False), batch)
    return float(loss.data)


def loss_and_grads(params: PointerNetParams, batch) -> tuple[float, dict[str, np.ndarray]]:
    w = _wrap(params, True)
    loss, _ = _loss_graph(params, w, batch)
    loss.backward()
    grads = {
        name: (t.grad if t.grad is not None else np.zeros_like(t.data))
        for name, t in w.items()
    }
    return float(loss.data), grads


@dataclass
class TrainConfig:
    epochs: int = 1000
    batch_size: int = 8
    lr: float = 1e-3
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


class AdamState:
    def __init__(self, tensors: dict[str, np.ndarray]):
        self.m = {k: np.zeros_like(v) for k, v in tensors.items()}
        self.v = {k: np.zeros_like(v) for k, v in tensors.items()}
        self.t = 0

    def step(self, tensors: dict[str, np.ndarray], grads: dict[str, np.ndarray], cfg: TrainConfig):
        self.t += 1
        b1, b2 = cfg.beta1, cfg.beta2
        for name, g in grads.items():
            self.m[name] = b1 * self.m[name] + (1 - b1) * g
            self.v[name] = b2 * self.v[name] + (1 - b2) * g * g
            mhat = self.m[name] / (1 - b1 ** self.t)
            vhat = self.v[name] / (1 - b2 ** self.t)
            tensors[name] -= cfg.lr * mhat / (np.sqrt(vhat) + cfg.eps)


def fit_normalization(params: PointerNetParams, dataset) -> None:
    """Freeze per-feature standardization stats from the training set into params."""
    rows = np.concatenate([s.descriptors for s in dataset], axis=0)
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    std[std == 0] = 1.0
    params.norm_mean = mean
    params.norm_std = std


def train(
    params: PointerNetParams,
    dataset: list[TrainingSample],
    config: TrainConfig | None = None,
    val_dataset: list[TrainingSample] | None = None,
) -> tuple[PointerNetParams, list[dict]]:
    """Adam over shuffled mini-batches for config.epochs epochs.

    Standardization stats are recomputed from dataset and frozen into the
    returned params (skipped when epochs == 0 so the input comes back
    untouched). With a validation set, the epoch with the lowest validation
    loss wins. A non-finite loss aborts immediately, naming the batch.
    """
    if not dataset:
        raise ValueError("training dataset is empty")
    cfg = config or TrainConfig()
    out = params.clone()
    if cfg.epochs == 0:
        return out, []

    fit_normalization(out, dataset)
    rng = np.random.default_rng(cfg.seed)
    adam = AdamState(out.tensors)

    log: list[dict] = []
    best_val = math.inf
    best_params = None
    for epoch in range(cfg.epochs):
        idx = rng.permutation(len(dataset))
        losses = []
        pos_lps, neg_lps = [], []
        for start in range(0, len(idx), cfg.batch_size):
            batch = [dataset[i] for i in idx[start:start + cfg.batch_size]]
            w = _wrap(out, True)
            loss_t, values = _loss_graph(out, w, batch)
            loss = float(loss_t.data)
            if not math.isfinite(loss):
                ids = [s.instance for s in batch]
                raise RuntimeError(f"non-finite loss at epoch {epoch}, batch instances {ids}")
            loss_t.backward()
            grads = {
                name: (t.grad if t.grad is not None else np.zeros_like(t.data))
                for name, t in w.items()
            }
            adam.step(out.tensors, grads, cfg)
            losses.append(loss)
            for s, lp in zip(batch, values):
                (pos_lps if s.label == POSITIVE else neg_lps).append(lp)

        entry = {
            "epoch": epoch,
            "mean_loss": float(np.mean(losses)),
            "mean_pos_logprob": float(np.mean(pos_lps)) if pos_lps else None,
            "mean_neg_logprob": float(np.mean(neg_lps)) if neg_lps else None,
        }
        if val_dataset:
            val_loss = contrastive_loss(out, val_dataset)
            entry["val_loss"] = val_loss
            if val_loss < best_val:
                best_val = val_loss
                best_params = out.clone()
        log.append(entry)

    if best_params is not None:
        return best_params, log
    return out, log
