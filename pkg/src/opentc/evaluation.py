"""Open-world evaluation: macro-F1 over m+1 classes (rejection counts as one
class) and the seen-fraction sweep with repeated random class choices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .calibration import ThresholdVector, fit_thresholds, fixed_thresholds
from .data import (
    Document,
    OpenSplit,
    build_vocab_from_split,
    encode_open_split,
    make_open_split,
)
from .encoder import EncoderConfig, ModelParams, forward
from .head import class_probabilities, predict_closed, predict_open
from .trainer import HEAD_ONE_VS_REST, HEAD_SOFTMAX, TrainConfig, train

METHOD_DOC = "doc"
METHOD_DOC_T05 = "doc_t0.5"
METHOD_SOFTMAX = "softmax"


@dataclass
class ConfusionMatrix:
    """(m+1) x (m+1) counts; row = gold, column = predicted, index m = reject.

    All unseen gold classes collapse into the single rejection row.
    """

    counts: np.ndarray
    num_seen: int

    @classmethod
    def empty(cls, num_seen: int) -> "ConfusionMatrix":
        return cls(np.zeros((num_seen + 1, num_seen + 1), dtype=np.int64), num_seen)

    def add(self, gold: int, predicted: int) -> None:
        self.counts[gold, predicted] += 1

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def _f1(tp: int, fp: int, fn: int) -> float:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return 2 * precision * recall / (precision + recall) if precision + recall else 0.0


def macro_f1(cm: ConfusionMatrix) -> float:
    """Unweighted mean of per-class F1, rejection included as one class.

    0/0 is scored as 0. The rejection class is excluded from the mean only
    when it is structurally absent (never gold and never predicted), which is
    the closed-world 100%-seen setting.
    """
    c = cm.counts
    n = c.shape[0]
    reject = n - 1
    classes = list(range(n))
    if c[reject, :].sum() == 0 and c[:, reject].sum() == 0:
        classes.remove(reject)
    scores = []
    for i in classes:
        tp = int(c[i, i])
        fp = int(c[:, i].sum() - tp)
        fn = int(c[i, :].sum() - tp)
        scores.append(_f1(tp, fp, fn))
    return float(np.mean(scores))


def evaluate(
    params: ModelParams,
    thresholds: ThresholdVector,
    test_docs,
    batch_size: int = 256,
) -> ConfusionMatrix:
    """Open-world predictions per test document, tallied into a confusion matrix."""
    m = params.config.num_classes
    cm = ConfusionMatrix.empty(m)
    docs = list(test_docs)
    for start in range(0, len(docs), batch_size):
        chunk = docs[start : start + batch_size]
        ids = np.stack([d.ids for d in chunk])
        probs = class_probabilities(forward(params, ids).data)
        for d, row in zip(chunk, probs):
            pred = predict_open(row, thresholds)
            gold = d.seen_label if d.seen_label >= 0 else m
            cm.add(gold, m if pred.is_reject else pred.class_index)
    return cm


def evaluate_closed(params: ModelParams, test_docs, batch_size: int = 256) -> ConfusionMatrix:
    """Forced-accept baseline: always predicts the argmax class, never rejects."""
    m = params.config.num_classes
    cm = ConfusionMatrix.empty(m)
    docs = list(test_docs)
    for start in range(0, len(docs), batch_size):
        chunk = docs[start : start + batch_size]
        ids = np.stack([d.ids for d in chunk])
        logits = forward(params, ids).data
        for d, row in zip(chunk, logits):
            gold = d.seen_label if d.seen_label >= 0 else m
            cm.add(gold, predict_closed(row))
    return cm


@dataclass(frozen=True)
class ExperimentSpec:
    seen_fractions: tuple[float, ...] = (0.25, 0.5, 0.75, 1.0)
    repetitions: int = 10
    base_seed: int = 0
    alpha: float = 3.0
    embed_dim: int = 50
    doc_len: int = 200
    vocab_size: int = 5000
    filter_widths: tuple[int, ...] = (3, 4, 5)
    filters_per_width: int = 150
    hidden_dim: int = 250
    train_config: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self) -> None:
        object.__setattr__(self, "seen_fractions", tuple(self.seen_fractions))
        object.__setattr__(self, "filter_widths", tuple(self.filter_widths))
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if any(not 0 < f <= 1 for f in self.seen_fractions):
            raise ValueError("seen fractions must lie in (0, 1]")

    def encoder_config(self, num_classes: int) -> EncoderConfig:
        return EncoderConfig(
            vocab_size=self.vocab_size,
            embed_dim=self.embed_dim,
            num_classes=num_classes,
            doc_len=self.doc_len,
            filter_widths=self.filter_widths,
            filters_per_width=self.filters_per_width,
            hidden_dim=self.hidden_dim,
        )


@dataclass
class ExperimentResult:
    """Per-(method, fraction) macro-F1 means and stds plus every raw run."""

    fractions: list[float]
    methods: list[str]
    runs: dict  # (method, fraction) -> list of per-repetition macro-F1
    summary: dict  # (method, fraction) -> (mean, std)

    def to_dict(self) -> dict:
        return {
            "fractions": self.fractions,
            "methods": self.methods,
            "runs": {
                f"{meth}@{frac}": vals for (meth, frac), vals in sorted(self.runs.items())
            },
            "summary": {
                f"{meth}@{frac}": {"mean": mean, "std": std}
                for (meth, frac), (mean, std) in sorted(self.summary.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_text(self) -> str:
        """Aligned table: rows = methods, columns = seen fractions."""
        header = ["method"] + [f"{int(round(f * 100))}%" for f in self.fractions]
        rows = [header]
        for meth in self.methods:
            row = [meth]
            for frac in self.fractions:
                mean, std = self.summary[(meth, frac)]
                row.append(f"{mean:.4f}±{std:.4f}")
            rows.append(row)
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        return "\n".join(
            "  ".join(cell.ljust(w) for cell, w in zip(row, widths)) for row in rows
        )


def _derive_seed(base_seed: int, *parts: int) -> int:
    return int(np.random.SeedSequence([base_seed, *parts]).generate_state(1)[0])


def run_single(
    spec: ExperimentSpec, docs: list[Document], fraction: float, fraction_index: int, rep: int
) -> dict:
    """One repetition: split, train both heads, calibrate, score all methods.

    Every method within a repetition shares the same class subset and data
    split, so the comparison is paired.
    """
    split_seed = _derive_seed(spec.base_seed, fraction_index, rep, 0)
    train_seed = _derive_seed(spec.base_seed, fraction_index, rep, 1)

    raw = make_open_split(docs, fraction, split_seed)
    vocab = build_vocab_from_split(raw, spec.vocab_size)
    enc_split = encode_open_split(raw, vocab, spec.doc_len)
    enc_cfg = spec.encoder_config(len(raw.seen_classes))

    doc_cfg = TrainConfig(
        **{**spec.train_config.__dict__, "seed": train_seed, "head": HEAD_ONE_VS_REST}
    )
    doc_params, _ = train(enc_split, enc_cfg, doc_cfg)
    thresholds = fit_thresholds(doc_params, enc_split.train, spec.alpha)

    sm_cfg = TrainConfig(
        **{**spec.train_config.__dict__, "seed": train_seed, "head": HEAD_SOFTMAX}
    )
    sm_params, _ = train(enc_split, enc_cfg, sm_cfg)

    return {
        METHOD_DOC: macro_f1(evaluate(doc_params, thresholds, enc_split.test)),
        METHOD_DOC_T05: macro_f1(
            evaluate(doc_params, fixed_thresholds(enc_cfg.num_classes), enc_split.test)
        ),
        METHOD_SOFTMAX: macro_f1(evaluate_closed(sm_params, enc_split.test)),
    }


def run_experiment(spec: ExperimentSpec, docs: list[Document]) -> ExperimentResult:
    methods = [METHOD_DOC, METHOD_DOC_T05, METHOD_SOFTMAX]
    runs = {(meth, frac): [] for meth in methods for frac in spec.seen_fractions}
    for fi, frac in enumerate(spec.seen_fractions):
        for rep in range(spec.repetitions):
            scores = run_single(spec, docs, frac, fi, rep)
            for meth in methods:
                runs[(meth, frac)].append(scores[meth])
    summary = {
        key: (float(np.mean(vals)), float(np.std(vals))) for key, vals in runs.items()
    }
    return ExperimentResult(
        fractions=list(spec.seen_fractions), methods=methods, runs=runs, summary=summary
    )
