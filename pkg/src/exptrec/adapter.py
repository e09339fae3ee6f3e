"""Trainable linear adapter over frozen provider embeddings.

The training objective is a diagonal binary cross-entropy over
temperature-scaled similarities plus an in-batch contrastive regularizer
over the off-diagonal pairs:

    L = (1/B) sum_i BCE(S_ii, y_i)
      + lam * (1/(B(B-1))) sum_{i != j} BCE(S_ij, 0)

where S_ij = tau * <h(q_i), h(t_j)>, h(v) = Wv / ||Wv||, and BCE treats S
entries as logits through the logistic function (stabilized log1p form).
Negatives are only ever the B(B-1) off-diagonal in-batch pairs; no other
negative pairs are constructed anywhere in the pipeline.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from .errors import DataError


@dataclass
class AdapterParams:
    W: np.ndarray
    tau: float = 20.0
    lam: float = 1.0

    def __post_init__(self) -> None:
        self.W = np.asarray(self.W, dtype=np.float64)
        if self.tau <= 0:
            raise DataError("temperature must be positive")
        if self.lam < 0:
            raise DataError("regularizer weight must be nonnegative")
        if not np.all(np.isfinite(self.W)):
            raise DataError("adapter matrix must be finite")


@dataclass(frozen=True)
class TrainBatch:
    query_vecs: np.ndarray  # (B, dim)
    target_vecs: np.ndarray  # (B, dim), row i aligned with query i
    labels: np.ndarray  # (B,) binary

    def __post_init__(self) -> None:
        object.__setattr__(self, "query_vecs", np.asarray(self.query_vecs, dtype=np.float64))
        object.__setattr__(self, "target_vecs", np.asarray(self.target_vecs, dtype=np.float64))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.float64))
        if self.query_vecs.shape != self.target_vecs.shape:
            raise DataError("query/target batch shapes differ")
        if self.labels.shape != (self.query_vecs.shape[0],):
            raise DataError("labels shape mismatch")

    @property
    def size(self) -> int:
        return self.query_vecs.shape[0]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 50
    seed: int = 0
    lam: float = 1.0
    tau: float = 20.0
    init_noise: float = 1e-3


def apply_adapter(params: AdapterParams, vec: np.ndarray) -> np.ndarray:
    """Project through W and L2-normalize."""
    vec = np.asarray(vec, dtype=np.float64).reshape(-1)
    if vec.shape[0] != params.W.shape[1]:
        raise DataError(f"vector dim {vec.shape[0]} != adapter dim {params.W.shape[1]}")
    out = params.W @ vec
    norm = float(np.linalg.norm(out))
    if norm == 0.0:
        raise DataError("degenerate projection: zero vector after adapter")
    return out / norm


def _adapted_rows(params: AdapterParams, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (projected, norms, normalized) for a batch of rows."""
    projected = rows @ params.W.T
    norms = np.linalg.norm(projected, axis=1)
    if np.any(norms == 0.0):
        raise DataError("degenerate projection: zero vector after adapter")
    return projected, norms, projected / norms[:, None]


def similarity_matrix(params: AdapterParams, batch: TrainBatch) -> np.ndarray:
    """S_ij = tau * <h(q_i), h(t_j)> over the batch."""
    if batch.query_vecs.shape[1] != params.W.shape[1]:
        raise DataError("batch dim does not match adapter dim")
    _, _, hq = _adapted_rows(params, batch.query_vecs)
    _, _, ht = _adapted_rows(params, batch.target_vecs)
    return params.tau * (hq @ ht.T)


def _bce_logits(s: np.ndarray, y: np.ndarray) -> np.ndarray:
    # softplus(s) - y*s, stabilized through logaddexp.
    return np.logaddexp(0.0, s) - y * s


def loss(S: np.ndarray, y: np.ndarray, lam: float) -> float:
    """Exact value of the training objective for a similarity matrix."""
    S = np.asarray(S, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    b = S.shape[0]
    if S.shape != (b, b) or y.shape != (b,):
        raise DataError("similarity matrix / label shape mismatch")
    if lam < 0:
        raise DataError("regularizer weight must be nonnegative")
    if b == 1 and lam > 0:
        raise DataError("regularizer undefined for batch size 1")
    diag = float(np.mean(_bce_logits(np.diag(S), y)))
    if lam == 0.0:
        return diag
    off_mask = ~np.eye(b, dtype=bool)
    off = float(np.sum(_bce_logits(S[off_mask], np.zeros(b * b - b))))
    return diag + lam * off / (b * (b - 1))


def batch_loss(params: AdapterParams, batch: TrainBatch) -> float:
    return loss(similarity_matrix(params, batch), batch.labels, params.lam)


def loss_gradient(params: AdapterParams, batch: TrainBatch) -> np.ndarray:
    """Analytic gradient of batch_loss with respect to W.

    Chains through the similarity matrix and the row-normalization
    Jacobian (I - h h^T)/||Wv||.
    """
    b = batch.size
    if b == 1 and params.lam > 0:
        raise DataError("regularizer undefined for batch size 1")
    _, qnorms, hq = _adapted_rows(params, batch.query_vecs)
    _, tnorms, ht = _adapted_rows(params, batch.target_vecs)
    S = params.tau * (hq @ ht.T)

    G = np.zeros((b, b))
    sig = expit(S)
    if params.lam > 0:
        G = (params.lam / (b * (b - 1))) * sig
    np.fill_diagonal(G, (np.diag(sig) - batch.labels) / b)

    d_hq = params.tau * (G @ ht)
    d_ht = params.tau * (G.T @ hq)

    d_uq = (d_hq - np.sum(d_hq * hq, axis=1, keepdims=True) * hq) / qnorms[:, None]
    d_ut = (d_ht - np.sum(d_ht * ht, axis=1, keepdims=True) * ht) / tnorms[:, None]

    return d_uq.T @ batch.query_vecs + d_ut.T @ batch.target_vecs


def train_adapter(
    data: list[TrainBatch],
    config: TrainConfig = TrainConfig(),
) -> tuple[AdapterParams, list[float]]:
    """Plain minibatch gradient descent; deterministic given the seed.

    Returns the trained parameters and the per-epoch mean loss trace
    (the trace starts with the pre-update loss of epoch 1's parameters).
    """
    if not data:
        raise DataError("no training batches")
    dim = data[0].query_vecs.shape[1]
    rng = np.random.default_rng(config.seed)
    W = np.eye(dim) + config.init_noise * rng.standard_normal((dim, dim))
    params = AdapterParams(W=W, tau=config.tau, lam=config.lam)
    trace: list[float] = []
    for _ in range(config.epochs):
        epoch_losses = []
        for batch in data:
            value = batch_loss(params, batch)
            if not np.isfinite(value):
                raise DataError("non-finite loss encountered during training")
            epoch_losses.append(value)
            grad = loss_gradient(params, batch)
            params = AdapterParams(
                W=params.W - config.learning_rate * grad,
                tau=params.tau,
                lam=params.lam,
            )
        trace.append(float(np.mean(epoch_losses)))
    return params, trace


# ---------------------------------------------------------------------------
# Checkpoint persistence: header {dim, tau, lam} + row-major float64 W.

_CKPT_MAGIC = b"EXPTADP1"


def save_adapter(params: AdapterParams, path: str | Path) -> None:
    dim = params.W.shape[0]
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<Idd", dim, params.tau, params.lam))
        fh.write(params.W.astype("<f8").tobytes(order="C"))


def load_adapter(path: str | Path) -> AdapterParams:
    with open(path, "rb") as fh:
        if fh.read(len(_CKPT_MAGIC)) != _CKPT_MAGIC:
            raise DataError(f"{path}: not an adapter checkpoint")
        dim, tau, lam = struct.unpack("<Idd", fh.read(4 + 16))
        raw = fh.read(8 * dim * dim)
        if len(raw) != 8 * dim * dim:
            raise DataError(f"{path}: truncated checkpoint")
        W = np.frombuffer(raw, dtype="<f8").reshape(dim, dim).copy()
    return AdapterParams(W=W, tau=tau, lam=lam)
