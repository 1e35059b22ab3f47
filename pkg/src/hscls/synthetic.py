"""Desk-scale stand-in for LSHTC data.

Label ``r`` (0-based rank) gets a share of documents proportional to
``(r + 1) ** -label_skew``.  Every label owns a private block of token ids;
each token slot of a document is drawn from the shared pool with probability
``overlap`` and otherwise from the block of one of the document's labels.
"""

from __future__ import annotations

import numpy as np

from .corpus import Corpus, SparseDoc

# probabilities of a doc carrying 1, 2, 3, ... labels
LABEL_COUNT_PROBS = (0.6, 0.3, 0.1)


def zipf_quotas(n_labels: int, total: int, skew: float) -> np.ndarray:
    """Integer counts summing to ``total`` with Zipf shares (largest remainder)."""
    w = (np.arange(1, n_labels + 1, dtype=np.float64)) ** -skew
    exact = total * w / w.sum()
    counts = np.floor(exact).astype(np.int64)
    short = total - counts.sum()
    # stable sort keeps the lower rank first among equal remainders
    counts[np.argsort(-(exact - counts), kind="stable")[:short]] += 1
    return counts


def generate_synthetic_corpus(
    n_labels: int,
    docs_per_label: int,
    tokens_per_doc: int,
    label_skew: float = 1.0,
    overlap: float = 0.3,
    seed: int = 0,
    max_labels_per_doc: int = 3,
    block_size: int | None = None,
    shared_size: int | None = None,
    first_label: int = 1,
) -> Corpus:
    if min(n_labels, docs_per_label, tokens_per_doc, max_labels_per_doc) < 1:
        raise ValueError("counts must be >= 1")
    if not 0.0 <= overlap <= 1.0:
        raise ValueError("overlap must lie in [0, 1]")
    block = block_size or 2 * tokens_per_doc
    shared = shared_size or 10 * block
    rng = np.random.default_rng(seed)

    total = n_labels * docs_per_label
    primaries = np.repeat(np.arange(n_labels), zipf_quotas(n_labels, total, label_skew))
    rng.shuffle(primaries)

    weights = np.arange(1, n_labels + 1, dtype=np.float64) ** -label_skew
    weights /= weights.sum()
    m_max = min(max_labels_per_doc, n_labels, len(LABEL_COUNT_PROBS))
    m_probs = np.array(LABEL_COUNT_PROBS[:m_max])
    m_probs /= m_probs.sum()
    shared_base = n_labels * block

    docs = []
    for primary in primaries:
        labels = [int(primary)]
        m = int(rng.choice(m_max, p=m_probs)) + 1
        while len(labels) < m:
            lab = int(rng.choice(n_labels, p=weights))
            if lab not in labels:
                labels.append(lab)
        from_shared = rng.random(tokens_per_doc) < overlap
        owner = rng.choice(labels, size=tokens_per_doc)
        tokens = np.where(
            from_shared,
            shared_base + rng.integers(shared, size=tokens_per_doc),
            owner * block + rng.integers(block, size=tokens_per_doc),
        )
        ids, tf = np.unique(tokens, return_counts=True)
        docs.append(
            SparseDoc(
                tuple(lab + first_label for lab in labels),
                tuple((int(i), float(c)) for i, c in zip(ids, tf)),
            )
        )
    return Corpus(
        docs,
        {
            "source": "synthetic",
            "n_labels": n_labels,
            "docs_per_label": docs_per_label,
            "tokens_per_doc": tokens_per_doc,
            "label_skew": label_skew,
            "overlap": overlap,
            "seed": seed,
        },
    )
