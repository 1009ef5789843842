"""CNN document encoder: embedding -> multi-width convolution -> max pooling
-> concatenation -> dense -> ReLU -> dense, producing one logit per seen class.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import IO, Iterable

import numpy as np

from .tensor import PAD_ID, Tape, Tensor, concat, conv1d_valid, dense, embed_lookup, max_over_time, relu


class EmbeddingFormatError(ValueError):
    """Malformed pretrained word-vector stream."""


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    embed_dim: int
    num_classes: int
    doc_len: int
    filter_widths: tuple[int, ...] = (3, 4, 5)
    filters_per_width: int = 150
    hidden_dim: int = 250
    relu_after_conv: bool = True  # pooling over raw conv outputs when False

    def __post_init__(self) -> None:
        object.__setattr__(self, "filter_widths", tuple(self.filter_widths))
        if self.vocab_size < 1 or self.embed_dim < 1 or self.hidden_dim < 1:
            raise ValueError("all dimensions must be >= 1")
        if self.filters_per_width < 1 or not self.filter_widths:
            raise ValueError("need at least one filter")
        if self.num_classes < 2:
            raise ValueError("need at least 2 classes")
        if tuple(sorted(self.filter_widths)) != self.filter_widths:
            raise ValueError("filter_widths must be ascending")
        if self.doc_len < max(self.filter_widths):
            raise ValueError("doc_len shorter than the widest filter")

    @property
    def pooled_dim(self) -> int:
        return self.filters_per_width * len(self.filter_widths)

    def to_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "embed_dim": self.embed_dim,
            "num_classes": self.num_classes,
            "doc_len": self.doc_len,
            "filter_widths": list(self.filter_widths),
            "filters_per_width": self.filters_per_width,
            "hidden_dim": self.hidden_dim,
            "relu_after_conv": self.relu_after_conv,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderConfig":
        return cls(
            vocab_size=d["vocab_size"],
            embed_dim=d["embed_dim"],
            num_classes=d["num_classes"],
            doc_len=d["doc_len"],
            filter_widths=tuple(d["filter_widths"]),
            filters_per_width=d["filters_per_width"],
            hidden_dim=d["hidden_dim"],
            relu_after_conv=d["relu_after_conv"],
        )


@dataclass
class ModelParams:
    config: EncoderConfig
    embedding: Tensor
    conv_filters: list[Tensor] = field(default_factory=list)  # ascending width order
    conv_biases: list[Tensor] = field(default_factory=list)
    w_hidden: Tensor = None
    b_hidden: Tensor = None
    w_out: Tensor = None
    b_out: Tensor = None

    def all_tensors(self) -> list[Tensor]:
        out = [self.embedding]
        for f, b in zip(self.conv_filters, self.conv_biases):
            out += [f, b]
        out += [self.w_hidden, self.b_hidden, self.w_out, self.b_out]
        return out

    def copy(self) -> "ModelParams":
        return ModelParams(
            config=self.config,
            embedding=self.embedding.copy(),
            conv_filters=[t.copy() for t in self.conv_filters],
            conv_biases=[t.copy() for t in self.conv_biases],
            w_hidden=self.w_hidden.copy(),
            b_hidden=self.b_hidden.copy(),
            w_out=self.w_out.copy(),
            b_out=self.b_out.copy(),
        )


def init_params(config: EncoderConfig, seed: int) -> ModelParams:
    """Deterministic initialization.

    Non-embedding weights are uniform in [-s, s] with s = sqrt(6/(fan_in+fan_out)),
    biases start at zero. Embedding rows are uniform in [-0.25, 0.25] with the
    PAD row pinned to zero.
    """
    rng = np.random.default_rng(seed)
    emb = rng.uniform(-0.25, 0.25, size=(config.vocab_size, config.embed_dim))
    emb[PAD_ID] = 0.0

    filters, biases = [], []
    for w in config.filter_widths:
        fan_in = w * config.embed_dim
        fan_out = config.filters_per_width
        s = np.sqrt(6.0 / (fan_in + fan_out))
        filters.append(
            Tensor(rng.uniform(-s, s, size=(config.filters_per_width, w, config.embed_dim)))
        )
        biases.append(Tensor(np.zeros(config.filters_per_width)))

    k, r, m = config.pooled_dim, config.hidden_dim, config.num_classes
    s1 = np.sqrt(6.0 / (k + r))
    s2 = np.sqrt(6.0 / (r + m))
    return ModelParams(
        config=config,
        embedding=Tensor(emb),
        conv_filters=filters,
        conv_biases=biases,
        w_hidden=Tensor(rng.uniform(-s1, s1, size=(r, k))),
        b_hidden=Tensor(np.zeros(r)),
        w_out=Tensor(rng.uniform(-s2, s2, size=(m, r))),
        b_out=Tensor(np.zeros(m)),
    )


def forward(params: ModelParams, doc, tape: Tape | None = None) -> Tensor:
    """Logits for one document (shape (L,)) or a batch (shape (B, L)).

    Pure function of (params, doc); a fresh non-recording tape is used when
    none is supplied.
    """
    cfg = params.config
    ids = np.asarray(doc, dtype=np.int64)
    if ids.shape[-1] != cfg.doc_len:
        raise ValueError(f"document length {ids.shape[-1]} != configured {cfg.doc_len}")
    if tape is None:
        tape = Tape(record=False)

    x = embed_lookup(tape, ids, params.embedding)
    pooled = []
    for filt, bias in zip(params.conv_filters, params.conv_biases):
        c = conv1d_valid(tape, x, filt, bias)
        if cfg.relu_after_conv:
            c = relu(tape, c)
        pooled.append(max_over_time(tape, c))
    h = concat(tape, pooled)
    hidden = relu(tape, dense(tape, h, params.w_hidden, params.b_hidden))
    return dense(tape, hidden, params.w_out, params.b_out)


def load_pretrained_embeddings(params: ModelParams, source: Iterable[str] | IO[str], vocab) -> int:
    """Overwrite embedding rows from a word-vector text stream.

    Each line is ``token v1 ... ve``. Rows for tokens present in ``vocab``
    are replaced; the PAD row stays zero. Returns the number of rows replaced.
    """
    e = params.config.embed_dim
    replaced = 0
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != e + 1:
            raise EmbeddingFormatError(
                f"line {lineno}: expected token plus {e} values, got {len(fields) - 1}"
            )
        token = fields[0]
        token_id = vocab.id_for(token)
        if token_id is None or token_id == PAD_ID:
            continue
        try:
            vec = np.array([float(v) for v in fields[1:]], dtype=np.float64)
        except ValueError as exc:
            raise EmbeddingFormatError(f"line {lineno}: non-numeric value") from exc
        params.embedding.data[token_id] = vec
        replaced += 1
    return replaced
