"""Tokenization, vocabulary building, document encoding and the open-world
split protocol: per-class 60/10/30 train/validation/test split with a held-out
subset of classes whose examples appear only in the test split.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

PAD_ID = 0
UNK_ID = 1
UNSEEN = -1  # seen_label marker for documents of held-out classes

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class DatasetFormatError(ValueError):
    """Malformed dataset file."""


@dataclass(frozen=True)
class Document:
    label: str
    text: str


def tokenize(text: str) -> list[str]:
    """Lowercase and split on runs of non-alphanumeric characters."""
    return _TOKEN_RE.findall(text.lower())


class Vocabulary:
    """token -> id map with PAD=0 and UNK=1 reserved.

    Real tokens get contiguous ids starting at 2, ordered by descending
    training frequency with lexicographic tie-break.
    """

    def __init__(self, tokens_in_order: list[str]) -> None:
        self._tokens = list(tokens_in_order)
        self._ids = {tok: i + 2 for i, tok in enumerate(self._tokens)}

    @classmethod
    def build(cls, token_docs: list[list[str]], max_size: int = 20000) -> "Vocabulary":
        if max_size < 3:
            raise ValueError("max_size must be >= 3")
        counts = Counter()
        for doc in token_docs:
            counts.update(doc)
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return cls([tok for tok, _ in ranked[: max_size - 2]])

    def __len__(self) -> int:
        return len(self._tokens) + 2

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def id_for(self, token: str) -> int | None:
        """Id of a known token, or None if out of vocabulary."""
        return self._ids.get(token)

    @property
    def tokens(self) -> list[str]:
        """Real tokens in id order (id 2 first)."""
        return list(self._tokens)


@dataclass(frozen=True)
class EncodedDocument:
    ids: np.ndarray  # int64, length exactly doc_len
    label: str
    seen_label: int  # index in [0, m) or UNSEEN


def encode(tokens: list[str], vocab: Vocabulary, doc_len: int) -> np.ndarray:
    """Map to ids (UNK for out-of-vocab), truncate to ``doc_len`` or post-pad."""
    if doc_len < 1:
        raise ValueError("doc_len must be >= 1")
    ids = np.full(doc_len, PAD_ID, dtype=np.int64)
    for i, tok in enumerate(tokens[:doc_len]):
        tid = vocab.id_for(tok)
        ids[i] = UNK_ID if tid is None else tid
    return ids


@dataclass
class OpenSplit:
    """Train/validation/test collections plus the seen-class index mapping.

    Document lists hold ``Document`` right after splitting and
    ``EncodedDocument`` after ``encode_open_split``. ``*_indices`` refer to
    positions in the original dataset, for reproducibility manifests.
    """

    train: list
    validation: list
    test: list
    seen_classes: list[str]
    unseen_classes: list[str]
    train_indices: list[int] = field(default_factory=list)
    validation_indices: list[int] = field(default_factory=list)
    test_indices: list[int] = field(default_factory=list)

    def class_index(self, label: str) -> int:
        try:
            return self.seen_classes.index(label)
        except ValueError:
            return UNSEEN

    def manifest(self) -> dict:
        return {
            "seen_classes": list(self.seen_classes),
            "unseen_classes": list(self.unseen_classes),
            "train_indices": list(self.train_indices),
            "validation_indices": list(self.validation_indices),
            "test_indices": list(self.test_indices),
        }


def make_open_split(docs: list[Document], seen_fraction: float, rep_seed) -> OpenSplit:
    """Choose seen classes and split each class 60/10/30, deterministically.

    Unseen-class documents are dropped from train and validation; the test
    split keeps the 30% test portion of every class. Rounding: floor for
    validation and test counts, remainder to train.
    """
    if not 0 < seen_fraction <= 1:
        raise ValueError("seen_fraction must be in (0, 1]")
    classes = sorted({d.label for d in docs})
    if len(classes) < 2:
        raise ValueError("dataset must contain at least 2 classes")
    rng = np.random.default_rng(rep_seed)
    n_seen = max(2, int(np.floor(seen_fraction * len(classes) + 0.5)))
    n_seen = min(n_seen, len(classes))
    seen = sorted(rng.choice(classes, size=n_seen, replace=False).tolist())
    unseen = [c for c in classes if c not in seen]

    by_class: dict[str, list[int]] = {c: [] for c in classes}
    for i, d in enumerate(docs):
        by_class[d.label].append(i)

    train_idx, val_idx, test_idx = [], [], []
    for c in classes:
        order = [by_class[c][j] for j in rng.permutation(len(by_class[c]))]
        n = len(order)
        n_val = int(np.floor(0.1 * n))
        n_test = int(np.floor(0.3 * n))
        test_idx.extend(order[n_val : n_val + n_test])
        if c in seen:
            val_idx.extend(order[:n_val])
            train_idx.extend(order[n_val + n_test :])

    return OpenSplit(
        train=[docs[i] for i in train_idx],
        validation=[docs[i] for i in val_idx],
        test=[docs[i] for i in test_idx],
        seen_classes=seen,
        unseen_classes=unseen,
        train_indices=train_idx,
        validation_indices=val_idx,
        test_indices=test_idx,
    )


def encode_open_split(split: OpenSplit, vocab: Vocabulary, doc_len: int) -> OpenSplit:
    """Encode every document of a raw split; vocabulary is left untouched."""

    def enc(doc: Document) -> EncodedDocument:
        return EncodedDocument(
            ids=encode(tokenize(doc.text), vocab, doc_len),
            label=doc.label,
            seen_label=split.class_index(doc.label),
        )

    return OpenSplit(
        train=[enc(d) for d in split.train],
        validation=[enc(d) for d in split.validation],
        test=[enc(d) for d in split.test],
        seen_classes=list(split.seen_classes),
        unseen_classes=list(split.unseen_classes),
        train_indices=list(split.train_indices),
        validation_indices=list(split.validation_indices),
        test_indices=list(split.test_indices),
    )


def build_vocab_from_split(split: OpenSplit, max_size: int) -> Vocabulary:
    """Vocabulary from the training split only (no test leakage)."""
    return Vocabulary.build([tokenize(d.text) for d in split.train], max_size)


def load_jsonl(path) -> list[Document]:
    """Read a dataset file: one JSON object per line with keys label and text."""
    docs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(f"line {lineno}: invalid JSON") from exc
            if not isinstance(rec, dict) or set(rec) != {"label", "text"}:
                raise DatasetFormatError(
                    f"line {lineno}: expected exactly the keys 'label' and 'text'"
                )
            docs.append(Document(label=str(rec["label"]), text=str(rec["text"])))
    return docs


def save_jsonl(path, docs: list[Document]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps({"label": d.label, "text": d.text}) + "\n")
