"""Per-class rejection thresholds fitted by mirrored Gaussian estimation.

For each seen class, the predicted probabilities of its own training examples
are treated as one half of a Gaussian centred at 1. Each point p gets a mirror
point 1 + (1 - p); the standard deviation of the combined set gives the class
threshold t = max(0.5, 1 - alpha * sigma).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import ModelParams, forward
from .head import class_probabilities


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdVector:
    t: np.ndarray  # per-class thresholds, each in [0.5, 1.0]
    alpha: float
    sigma: np.ndarray  # fitted per-class std, kept for inspection

    def __post_init__(self) -> None:
        object.__setattr__(self, "t", np.asarray(self.t, dtype=np.float64))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=np.float64))

    def __len__(self) -> int:
        return self.t.size


def fixed_thresholds(num_classes: int, value: float = 0.5) -> ThresholdVector:
    """Uniform thresholds, e.g. the default-0.5 ablation without fitting."""
    return ThresholdVector(
        t=np.full(num_classes, value),
        alpha=0.0,
        sigma=np.zeros(num_classes),
    )


def fit_sigma(class_probs) -> float:
    """Population std of the probabilities combined with their mirror points."""
    p = np.asarray(class_probs, dtype=np.float64)
    if p.size == 0:
        raise CalibrationError("no probabilities to fit")
    if (p <= 0).any() or (p > 1).any():
        raise CalibrationError("probabilities must lie in (0, 1]")
    mirrored = np.concatenate([p, 2.0 - p])
    return float(np.std(mirrored))


def fit_thresholds(
    params: ModelParams, train_docs, alpha: float = 3.0, batch_size: int = 256
) -> ThresholdVector:
    """Fit one threshold per seen class from training-set probabilities.

    For class i, collect sigmoid(d_i) over every training example whose gold
    label is i (regardless of where the model ranks class i), fit sigma and
    set t_i = max(0.5, 1 - alpha * sigma_i). Inference only; parameters are
    never modified.
    """
    if alpha <= 0:
        raise CalibrationError("alpha must be positive")
    m = params.config.num_classes
    per_class: list[list[float]] = [[] for _ in range(m)]
    docs = list(train_docs)
    for start in range(0, len(docs), batch_size):
        batch = docs[start : start + batch_size]
        ids = np.stack([d.ids for d in batch])
        probs = class_probabilities(forward(params, ids).data)
        for d, row in zip(batch, probs):
            if not 0 <= d.seen_label < m:
                raise CalibrationError("calibration data must carry seen-class labels")
            per_class[d.seen_label].append(float(row[d.seen_label]))

    sigma = np.zeros(m)
    for i in range(m):
        if not per_class[i]:
            raise CalibrationError(f"class index {i} has no training examples")
        sigma[i] = fit_sigma(per_class[i])
    t = np.maximum(0.5, 1.0 - alpha * sigma)
    return ThresholdVector(t=t, alpha=alpha, sigma=sigma)
