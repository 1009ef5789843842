"""Versioned binary model container.

Layout: magic "DOCM", u32 version, then length-prefixed sections (u64 little
endian byte counts): header JSON (encoder config, head kind, class names,
optional threshold block), vocabulary JSON (tokens in id order), and one raw
float64 little-endian block per parameter tensor in a fixed order. Round trips
are byte-identical.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .calibration import ThresholdVector
from .data import Vocabulary
from .encoder import EncoderConfig, ModelParams
from .tensor import Tensor

MAGIC = b"DOCM"
VERSION = 1


class ModelFormatError(ValueError):
    pass


@dataclass
class TrainedModel:
    params: ModelParams
    vocab: Vocabulary
    class_names: list[str]  # order defines class indices
    head: str
    thresholds: ThresholdVector | None = None

    @property
    def config(self) -> EncoderConfig:
        return self.params.config


def _write_section(fh, payload: bytes) -> None:
    fh.write(struct.pack("<Q", len(payload)))
    fh.write(payload)


def _read_section(fh) -> bytes:
    raw = fh.read(8)
    if len(raw) != 8:
        raise ModelFormatError("truncated model file")
    (size,) = struct.unpack("<Q", raw)
    payload = fh.read(size)
    if len(payload) != size:
        raise ModelFormatError("truncated model file")
    return payload


def _tensors_in_order(params: ModelParams) -> list[Tensor]:
    return params.all_tensors()


def save_model(path, model: TrainedModel) -> None:
    header = {
        "config": model.config.to_dict(),
        "head": model.head,
        "class_names": list(model.class_names),
        "thresholds": None
        if model.thresholds is None
        else {
            "alpha": model.thresholds.alpha,
            "sigma": model.thresholds.sigma.tolist(),
            "t": model.thresholds.t.tolist(),
        },
    }
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        _write_section(fh, json.dumps(header, sort_keys=True).encode("utf-8"))
        _write_section(fh, json.dumps(model.vocab.tokens).encode("utf-8"))
        for t in _tensors_in_order(model.params):
            _write_section(fh, np.ascontiguousarray(t.data, dtype="<f8").tobytes())


def _expected_shapes(cfg: EncoderConfig) -> list[tuple[int, ...]]:
    shapes = [(cfg.vocab_size, cfg.embed_dim)]
    for w in cfg.filter_widths:
        shapes.append((cfg.filters_per_width, w, cfg.embed_dim))
        shapes.append((cfg.filters_per_width,))
    shapes += [
        (cfg.hidden_dim, cfg.pooled_dim),
        (cfg.hidden_dim,),
        (cfg.num_classes, cfg.hidden_dim),
        (cfg.num_classes,),
    ]
    return shapes


def load_model(path) -> TrainedModel:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ModelFormatError("not a model file (bad magic)")
        raw = fh.read(4)
        if len(raw) != 4:
            raise ModelFormatError("truncated model file")
        (version,) = struct.unpack("<I", raw)
        if version != VERSION:
            raise ModelFormatError(f"unsupported model file version {version}")
        try:
            header = json.loads(_read_section(fh).decode("utf-8"))
            tokens = json.loads(_read_section(fh).decode("utf-8"))
            cfg = EncoderConfig.from_dict(header["config"])
        except (KeyError, ValueError, TypeError) as exc:
            raise ModelFormatError(f"corrupt model header: {exc}") from exc

        arrays = []
        for shape in _expected_shapes(cfg):
            payload = _read_section(fh)
            expected = int(np.prod(shape)) * 8
            if len(payload) != expected:
                raise ModelFormatError(
                    f"parameter block of {len(payload)} bytes, expected {expected}"
                )
            arrays.append(np.frombuffer(payload, dtype="<f8").reshape(shape).copy())
        if fh.read(1):
            raise ModelFormatError("trailing bytes after model payload")

    num_widths = len(cfg.filter_widths)
    params = ModelParams(
        config=cfg,
        embedding=Tensor(arrays[0]),
        conv_filters=[Tensor(arrays[1 + 2 * i]) for i in range(num_widths)],
        conv_biases=[Tensor(arrays[2 + 2 * i]) for i in range(num_widths)],
        w_hidden=Tensor(arrays[1 + 2 * num_widths]),
        b_hidden=Tensor(arrays[2 + 2 * num_widths]),
        w_out=Tensor(arrays[3 + 2 * num_widths]),
        b_out=Tensor(arrays[4 + 2 * num_widths]),
    )

    class_names = list(header["class_names"])
    if len(class_names) != cfg.num_classes:
        raise ModelFormatError("class name list does not match num_classes")

    thresholds = None
    if header.get("thresholds") is not None:
        tb = header["thresholds"]
        t = np.asarray(tb["t"], dtype=np.float64)
        sigma = np.asarray(tb["sigma"], dtype=np.float64)
        if t.shape != (cfg.num_classes,) or sigma.shape != (cfg.num_classes,):
            raise ModelFormatError("threshold vectors do not match num_classes")
        thresholds = ThresholdVector(t=t, alpha=float(tb["alpha"]), sigma=sigma)

    return TrainedModel(
        params=params,
        vocab=Vocabulary(tokens),
        class_names=class_names,
        head=header["head"],
        thresholds=thresholds,
    )
