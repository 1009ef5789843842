"""Synthetic topic-classification corpora for demos and end-to-end checks.

Each class owns an exclusive keyword pool and shares one "bridge" pool with
every other class, on top of a common pool shared by everyone. Bridges make
class pairs partially confusable: a held-out class's documents carry bridge
tokens that occurred inside seen-class training documents, some as positive
and some as negative evidence, which is what gives per-class rejection
thresholds something to do.
"""

from __future__ import annotations

import numpy as np

from .data import Document


def generate_synthetic_dataset(
    num_classes: int = 8,
    docs_per_class: int = 200,
    doc_len_range: tuple[int, int] = (30, 60),
    common_pool: int = 100,
    keywords_per_class: int = 20,
    bridge_per_pair: int = 6,
    partners_per_doc: int = 2,
    p_common: float = 0.25,
    p_keyword: float = 0.45,
    p_bridge: float = 0.20,
    seed: int = 0,
) -> list[Document]:
    """Word-soup documents with class-specific keyword distributions.

    Token mix per document: ``p_common`` common words, ``p_keyword`` exclusive
    class keywords, ``p_bridge`` bridge tokens shared with
    ``partners_per_doc`` randomly chosen other classes, and the remainder
    unique rare tokens. The rare tokens fall outside any frequency-capped
    vocabulary, so the unknown-word id occurs in training too, as it would
    for natural text.
    """
    rng = np.random.default_rng(seed)
    common = [f"common{i:03d}" for i in range(common_pool)]
    keywords = [
        [f"cls{c}kw{i:02d}" for i in range(keywords_per_class)] for c in range(num_classes)
    ]
    bridges = {
        (a, b): [f"bridge{a}and{b}x{i:02d}" for i in range(bridge_per_pair)]
        for a in range(num_classes)
        for b in range(a + 1, num_classes)
    }

    docs = []
    rare_counter = 0
    for c in range(num_classes):
        others = [o for o in range(num_classes) if o != c]
        for _ in range(docs_per_class):
            partners = rng.choice(others, size=min(partners_per_doc, len(others)), replace=False)
            doc_bridges = []
            for o in partners:
                doc_bridges.extend(bridges[(min(c, o), max(c, o))])
            n = int(rng.integers(doc_len_range[0], doc_len_range[1] + 1))
            words = []
            for _ in range(n):
                u = rng.random()
                if u < p_common:
                    words.append(common[rng.integers(len(common))])
                elif u < p_common + p_keyword:
                    words.append(keywords[c][rng.integers(keywords_per_class)])
                elif u < p_common + p_keyword + p_bridge:
                    words.append(doc_bridges[rng.integers(len(doc_bridges))])
                else:
                    words.append(f"rare{rare_counter:06d}")
                    rare_counter += 1
            docs.append(Document(label=f"class{c}", text=" ".join(words)))
    return docs
