"""One-vs-rest sigmoid output layer with a rejection option, plus the
closed-world softmax baseline head.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tape, Tensor, _stable_sigmoid


@dataclass(frozen=True)
class OpenPrediction:
    """Either a rejection or an accepted (class_index, probability) pair."""

    class_index: int | None  # None means reject
    probability: float | None

    @property
    def is_reject(self) -> bool:
        return self.class_index is None


REJECT = OpenPrediction(class_index=None, probability=None)


def _check_labels(labels: np.ndarray, m: int) -> None:
    if labels.size and (labels.min() < 0 or labels.max() >= m):
        raise ValueError(f"label out of range [0, {m})")


def _one_hot(labels: np.ndarray, m: int) -> np.ndarray:
    out = np.zeros((labels.size, m))
    out[np.arange(labels.size), labels] = 1.0
    return out


def ovr_loss(tape: Tape, logits: Tensor, labels) -> Tensor:
    """Summed one-vs-rest log loss over the batch, from logits.

    Each of the m per-class sigmoids treats its own class as positive and
    every other label as negative. Computed in softplus form, never via
    log(sigmoid(x)), so saturated logits stay finite. Total, unaveraged.
    """
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    z = logits.data.reshape(labels.size, -1)
    m = z.shape[1]
    _check_labels(labels, m)
    targets = _one_hot(labels, m)
    # softplus identity: max(z,0) - z*t + log(1 + exp(-|z|))
    per_elem = np.maximum(z, 0.0) - z * targets + np.log1p(np.exp(-np.abs(z)))
    out = Tensor(per_elem.sum())

    def back() -> None:
        if out.grad is None:
            return
        g = (_stable_sigmoid(z) - targets) * out.grad
        logits.accumulate(g.reshape(logits.shape))

    tape.push(back)
    return out


def softmax_loss(tape: Tape, logits: Tensor, labels) -> Tensor:
    """Summed negative log-likelihood under softmax, log-sum-exp stabilized."""
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    z = logits.data.reshape(labels.size, -1)
    m = z.shape[1]
    _check_labels(labels, m)
    zmax = z.max(axis=1, keepdims=True)
    shifted = z - zmax
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    out = Tensor((lse.ravel() + zmax.ravel() - z[np.arange(labels.size), labels]).sum())
    softmax = np.exp(shifted - lse)

    def back() -> None:
        if out.grad is None:
            return
        g = (softmax - _one_hot(labels, m)) * out.grad
        logits.accumulate(g.reshape(logits.shape))

    tape.push(back)
    return out


def class_probabilities(logits: np.ndarray) -> np.ndarray:
    """Per-class sigmoid probabilities; each in (0,1), not normalized."""
    return _stable_sigmoid(np.asarray(logits, dtype=np.float64))


def predict_open(probs, thresholds, restrict_to_clearing: bool = False) -> OpenPrediction:
    """Reject iff every probability is below its class threshold.

    Otherwise the predicted class is the argmax over all classes (ties to the
    lowest index), even if that class sits below its own per-class threshold.
    ``restrict_to_clearing=True`` switches to the variant that takes the
    argmax over threshold-clearing classes only.
    """
    probs = np.asarray(probs, dtype=np.float64)
    thresholds = np.asarray(getattr(thresholds, "t", thresholds), dtype=np.float64)
    if probs.shape != thresholds.shape:
        raise ValueError("probs and thresholds must have the same length")
    clearing = probs >= thresholds
    if not clearing.any():
        return REJECT
    if restrict_to_clearing:
        masked = np.where(clearing, probs, -np.inf)
        idx = int(np.argmax(masked))
    else:
        idx = int(np.argmax(probs))
    return OpenPrediction(class_index=idx, probability=float(probs[idx]))


def predict_closed(scores) -> int:
    """Argmax class index, ties to the lowest index. Works on probs or logits."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("empty score vector")
    return int(np.argmax(scores))
