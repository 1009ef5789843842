"""Mini-batch gradient training with validation-based early stopping.

The objective is the summed one-vs-rest log loss (or the softmax baseline
loss); each optimizer step divides by the batch size so the learning rate is
independent of batch size. The optimizer is the standard adaptive-moment
method (beta1=0.9, beta2=0.999, eps=1e-8).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import OpenSplit
from .encoder import EncoderConfig, ModelParams, forward, init_params
from .head import ovr_loss, softmax_loss
from .tensor import Tape, Tensor

HEAD_ONE_VS_REST = "one_vs_rest"
HEAD_SOFTMAX = "softmax"
_LOSS_FNS = {HEAD_ONE_VS_REST: ovr_loss, HEAD_SOFTMAX: softmax_loss}


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int, batch: int) -> None:
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    max_epochs: int = 20
    learning_rate: float = 1e-3
    patience: int = 3
    seed: int = 0
    head: str = HEAD_ONE_VS_REST
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    freeze_embeddings: bool = False

    def __post_init__(self) -> None:
        if self.batch_size < 1 or self.patience < 1 or self.max_epochs < 1:
            raise ValueError("batch_size, patience and max_epochs must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.head not in _LOSS_FNS:
            raise ValueError(f"unknown head {self.head!r}")


@dataclass
class TrainReport:
    train_losses: list[float] = field(default_factory=list)  # per-epoch mean per example
    val_losses: list[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False

    def to_dict(self) -> dict:
        return {
            "train_losses": self.train_losses,
            "val_losses": self.val_losses,
            "best_epoch": self.best_epoch,
            "stopped_early": self.stopped_early,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class AdamState:
    """First/second moment buffers for one parameter set."""

    def __init__(self, tensors: list[Tensor]) -> None:
        self.m = [np.zeros_like(t.data) for t in tensors]
        self.v = [np.zeros_like(t.data) for t in tensors]
        self.step_count = 0

    def apply(self, tensors: list[Tensor], cfg: TrainConfig) -> None:
        self.step_count += 1
        t = self.step_count
        bias1 = 1.0 - cfg.beta1**t
        bias2 = 1.0 - cfg.beta2**t
        for tensor, m, v in zip(tensors, self.m, self.v):
            g = tensor.grad
            if g is None:
                continue
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * g
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * g * g
            tensor.data -= cfg.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + cfg.eps)


def _batch_arrays(docs) -> tuple[np.ndarray, np.ndarray]:
    ids = np.stack([d.ids for d in docs])
    labels = np.array([d.seen_label for d in docs], dtype=np.int64)
    return ids, labels


def training_step(
    params: ModelParams,
    batch,
    cfg: TrainConfig,
    opt: AdamState,
    trainable: list[Tensor],
) -> float:
    """One forward/backward/update cycle; returns pre-update loss / batch size."""
    if not batch:
        raise ValueError("empty batch")
    ids, labels = _batch_arrays(batch)
    if (labels < 0).any():
        raise ValueError("unseen-class document in a training batch")
    tape = Tape()
    logits = forward(params, ids, tape)
    loss = _LOSS_FNS[cfg.head](tape, logits, labels)
    for p in params.all_tensors():
        p.zero_grad()
    tape.backward(loss)
    opt.apply(trainable, cfg)
    return float(loss.data) / len(batch)


def evaluate_loss(params: ModelParams, docs, head: str, batch_size: int = 256) -> float:
    """Mean per-example loss in inference mode."""
    docs = list(docs)
    total = 0.0
    for start in range(0, len(docs), batch_size):
        chunk = docs[start : start + batch_size]
        ids, labels = _batch_arrays(chunk)
        tape = Tape(record=False)
        total += float(_LOSS_FNS[head](tape, forward(params, ids, tape), labels).data)
    return total / len(docs)


def train(
    split: OpenSplit,
    enc_config: EncoderConfig,
    cfg: TrainConfig,
    initial_params: ModelParams | None = None,
) -> tuple[ModelParams, TrainReport]:
    """Train on the encoded split; returns the best-validation-epoch parameters.

    Deterministic given the seed: one full permutation per epoch drawn from a
    seed derived as (seed, epoch), fixed batch boundaries. Early-stops after
    ``patience`` epochs without validation improvement. When the validation
    split is empty the training loss drives model selection instead.
    """
    train_docs = list(split.train)
    if not train_docs:
        raise ValueError("empty training split")
    present = {d.seen_label for d in train_docs}
    missing = set(range(enc_config.num_classes)) - present
    if missing:
        raise ValueError(f"seen classes absent from training split: {sorted(missing)}")

    params = init_params(enc_config, cfg.seed) if initial_params is None else initial_params.copy()
    trainable = params.all_tensors()
    if cfg.freeze_embeddings:
        trainable = [t for t in trainable if t is not params.embedding]
    opt = AdamState(trainable)

    report = TrainReport()
    best: ModelParams | None = None
    best_val = np.inf
    best_epoch = -1
    since_improved = 0

    for epoch in range(cfg.max_epochs):
        perm = np.random.default_rng((cfg.seed, epoch)).permutation(len(train_docs))
        epoch_total = 0.0
        for bi, start in enumerate(range(0, len(train_docs), cfg.batch_size)):
            batch = [train_docs[i] for i in perm[start : start + cfg.batch_size]]
            loss = training_step(params, batch, cfg, opt, trainable)
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, bi)
            epoch_total += loss * len(batch)
        report.train_losses.append(epoch_total / len(train_docs))

        if split.validation:
            val = evaluate_loss(params, split.validation, cfg.head)
        else:
            val = report.train_losses[-1]
        if not np.isfinite(val):
            raise TrainingDivergedError(epoch, -1)
        report.val_losses.append(val)

        if val < best_val:
            best_val = val
            best = params.copy()
            best_epoch = epoch
            since_improved = 0
        else:
            since_improved += 1
            if since_improved >= cfg.patience:
                report.stopped_early = True
                break

    report.best_epoch = best_epoch
    return best, report
