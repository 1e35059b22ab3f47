"""LSHTC / libSVM corpus handling and top-n dataset preparation.

Input lines look like ``545, 32 8:1 18:2``: comma-separated integer labels
followed by ``feat:value`` pairs.  The prep pipeline restricts a corpus to its
``n`` most frequent labels, rewrites it in classifier format
(``__label__545 __label__32 w8 w18``) and splits it into train/test parts.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

log = logging.getLogger(__name__)

LABEL_PREFIX = "__label__"
WORD_PREFIX = "w"


class ParseError(ValueError):
    """A malformed input line."""

    def __init__(self, message: str, lineno: int | None = None, token: str | None = None):
        self.lineno = lineno
        self.token = token
        where = f"line {lineno}: " if lineno is not None else ""
        what = f" (token {token!r})" if token is not None else ""
        super().__init__(f"{where}{message}{what}")


class PrepError(ValueError):
    """Dataset preparation produced an unusable corpus."""


@dataclass(frozen=True)
class SparseDoc:
    labels: tuple[int, ...]
    features: tuple[tuple[int, float], ...] = ()

    @property
    def feature_ids(self) -> tuple[int, ...]:
        return tuple(f for f, _ in self.features)

    def tokens(self) -> list[str]:
        return [f"{WORD_PREFIX}{f}" for f, _ in self.features]


@dataclass
class Corpus:
    docs: list[SparseDoc]
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.docs)

    def __iter__(self) -> Iterator[SparseDoc]:
        return iter(self.docs)


@dataclass(frozen=True)
class PrepStats:
    n: int
    avg_labels_per_doc: float
    predict_k: int


def _parse_int(tok: str, lineno: int | None) -> int:
    try:
        value = int(tok)
    except ValueError:
        raise ParseError("expected a non-negative integer", lineno, tok) from None
    if value < 0:
        raise ParseError("negative id", lineno, tok)
    return value


def parse_libsvm_line(line: str, lineno: int | None = None) -> SparseDoc:
    """Parse one ``label(, label)* (feat:value)*`` line.

    Whitespace around commas is tolerated.  Duplicate labels are dropped with a
    warning; duplicate feature indices are an error.  Zero-valued features are
    skipped.
    """
    # Normalise "545 , 32" and "545,32" to "545,32" before splitting on spaces.
    text = ",".join(part.strip() for part in line.strip().split(","))
    tokens = text.split()
    if not tokens:
        raise ParseError("empty label list", lineno)

    label_tokens: list[str] = []
    pos = 0
    while pos < len(tokens) and ":" not in tokens[pos]:
        label_tokens.extend(tokens[pos].split(","))
        pos += 1
    if not label_tokens:
        raise ParseError("empty label list", lineno, tokens[0])

    labels: list[int] = []
    for tok in label_tokens:
        lab = _parse_int(tok, lineno)
        if lab in labels:
            log.warning("line %s: duplicate label %d dropped", lineno, lab)
            continue
        labels.append(lab)

    features: list[tuple[int, float]] = []
    seen: set[int] = set()
    for tok in tokens[pos:]:
        feat_s, sep, value_s = tok.partition(":")
        if not sep or "," in tok:
            raise ParseError("expected feat:value", lineno, tok)
        feat = _parse_int(feat_s, lineno)
        try:
            value = float(value_s)
        except ValueError:
            raise ParseError("bad feature value", lineno, tok) from None
        if not math.isfinite(value) or value < 0:
            raise ParseError("feature value must be finite and non-negative", lineno, tok)
        if feat in seen:
            raise ParseError("duplicate feature index", lineno, tok)
        seen.add(feat)
        if value > 0:
            features.append((feat, value))
    return SparseDoc(tuple(labels), tuple(features))


def format_libsvm_line(doc: SparseDoc) -> str:
    labels = ",".join(str(lab) for lab in doc.labels)
    feats = " ".join(f"{f}:{v:g}" for f, v in doc.features)
    return f"{labels} {feats}" if feats else labels


def read_libsvm(path: str | Path) -> Corpus:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                docs.append(parse_libsvm_line(line, lineno))
    return Corpus(docs, {"source": str(path)})


def to_classifier_format(doc: SparseDoc) -> str:
    """Render a doc as ``__label__<id>... w<feat>...`` with term weights stripped."""
    parts = [f"{LABEL_PREFIX}{lab}" for lab in doc.labels]
    parts += [f"{WORD_PREFIX}{f}" for f, _ in doc.features]
    return " ".join(parts)


def parse_classifier_line(line: str, lineno: int | None = None) -> SparseDoc:
    """Inverse of :func:`to_classifier_format`; every feature gets weight 1."""
    labels: list[int] = []
    features: list[tuple[int, float]] = []
    seen: set[int] = set()
    for tok in line.split():
        if tok.startswith(LABEL_PREFIX):
            lab = _parse_int(tok[len(LABEL_PREFIX):], lineno)
            if lab not in labels:
                labels.append(lab)
        elif tok.startswith(WORD_PREFIX):
            feat = _parse_int(tok[len(WORD_PREFIX):], lineno)
            if feat not in seen:
                seen.add(feat)
                features.append((feat, 1.0))
        else:
            raise ParseError("unrecognised token", lineno, tok)
    return SparseDoc(tuple(labels), tuple(features))


def read_classifier_file(path: str | Path, require_labels: bool = True) -> Corpus:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            doc = parse_classifier_line(line, lineno)
            if require_labels and not doc.labels:
                raise ParseError("empty label list", lineno)
            docs.append(doc)
    return Corpus(docs, {"source": str(path)})


def write_classifier_file(corpus: Iterable[SparseDoc], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in corpus:
            fh.write(to_classifier_format(doc) + "\n")


def count_label_frequencies(corpus: Iterable[SparseDoc]) -> dict[int, int]:
    """Number of docs listing each label."""
    counts: Counter[int] = Counter()
    for doc in corpus:
        counts.update(set(doc.labels))
    return dict(counts)


def select_top_n_labels(freqs: Mapping[int, int], n: int) -> list[int]:
    """The ``n`` most frequent labels, ties broken by smaller label id."""
    if n < 1:
        raise ValueError("n must be >= 1")
    ranked = sorted(freqs.items(), key=lambda kv: (-kv[1], kv[0]))
    return [lab for lab, _ in ranked[:n]]


def filter_to_top_n(corpus: Corpus, keep: Iterable[int]) -> Corpus:
    """Drop labels outside ``keep``; a doc is dropped only if no label survives."""
    keep = set(keep)
    if not keep:
        raise PrepError("empty label set")
    docs = []
    for doc in corpus.docs:
        labels = tuple(lab for lab in doc.labels if lab in keep)
        if labels:
            docs.append(doc if len(labels) == len(doc.labels) else SparseDoc(labels, doc.features))
    if not docs:
        raise PrepError("no documents left after label filtering")
    return Corpus(docs, dict(corpus.provenance))


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def avg_labels_and_k(corpus: Sequence[SparseDoc] | Corpus, n: int | None = None) -> PrepStats:
    docs = corpus.docs if isinstance(corpus, Corpus) else corpus
    if not docs:
        raise PrepError("empty corpus")
    avg = sum(len(d.labels) for d in docs) / len(docs)
    if n is None:
        n = len({lab for d in docs for lab in d.labels})
    return PrepStats(n=n, avg_labels_per_doc=avg, predict_k=max(1, round_half_up(avg)))


def shuffle_split(corpus: Corpus, train_fraction: float = 0.7, seed: int = 0) -> tuple[Corpus, Corpus]:
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    n_docs = len(corpus.docs)
    n_train = math.floor(train_fraction * n_docs)
    if n_train == 0 or n_train == n_docs:
        raise PrepError(f"split of {n_docs} docs at {train_fraction} leaves one side empty")
    perm = np.random.default_rng(seed).permutation(n_docs)
    prov = dict(corpus.provenance, seed=seed, train_fraction=train_fraction)
    train = Corpus([corpus.docs[i] for i in perm[:n_train]], dict(prov, part="train"))
    test = Corpus([corpus.docs[i] for i in perm[n_train:]], dict(prov, part="test"))
    return train, test


@dataclass
class PreparedData:
    train: Corpus
    test: Corpus
    labels: list[int]
    stats: PrepStats


def prepare(corpus: Corpus, n: int, seed: int = 0, train_fraction: float = 0.7) -> PreparedData:
    """Top-n selection, label filtering, avg-label bookkeeping and the shuffle split."""
    keep = select_top_n_labels(count_label_frequencies(corpus), n)
    filtered = filter_to_top_n(corpus, keep)
    filtered.provenance.update(n=n, seed=seed)
    stats = avg_labels_and_k(filtered, n=len(keep))
    train, test = shuffle_split(filtered, train_fraction, seed)
    return PreparedData(train, test, keep, stats)


def write_manifest(path: str | Path, items: Mapping[str, object]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in items.items():
            fh.write(f"{key}\t{value}\n")


def read_manifest(path: str | Path) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                key, _, value = line.rstrip("\n").partition("\t")
                out[key] = value
    return out
