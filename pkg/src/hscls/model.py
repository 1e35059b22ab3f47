"""Bag-of-words linear classifier: dictionaries, parameters and the model file."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import SparseDoc
from .hsoftmax import HuffmanTree, build_huffman_tree, predict_top_k
from .softmax import softmax, top_k

MAGIC = b"HSCLSMDL"
FORMAT_VERSION = 1
MODES = ("hs", "softmax")


class EmptyDocumentError(ValueError):
    """Every token of a document is out of vocabulary."""


class ModelFormatError(ValueError):
    pass


@dataclass
class Dictionaries:
    index_to_word: list[str]
    index_to_label: list[int]
    word_freqs: np.ndarray
    label_freqs: np.ndarray

    def __post_init__(self):
        self.word_to_index = {w: i for i, w in enumerate(self.index_to_word)}
        self.label_to_index = {lab: i for i, lab in enumerate(self.index_to_label)}

    @property
    def n_words(self) -> int:
        return len(self.index_to_word)

    @property
    def n_labels(self) -> int:
        return len(self.index_to_label)

    def encode_tokens(self, tokens: Iterable[str]) -> np.ndarray:
        """Token indices, skipping out-of-vocabulary tokens."""
        w2i = self.word_to_index
        return np.array([w2i[t] for t in tokens if t in w2i], dtype=np.int64)

    def encode_doc(self, doc: SparseDoc) -> np.ndarray:
        return self.encode_tokens(doc.tokens())

    def encode_labels(self, labels: Iterable[int]) -> np.ndarray:
        l2i = self.label_to_index
        return np.array([l2i[lab] for lab in labels if lab in l2i], dtype=np.int64)


def build_dictionaries(train: Iterable[SparseDoc]) -> Dictionaries:
    """Words indexed by first occurrence; labels by descending frequency, then id."""
    word_counts: dict[str, int] = {}
    label_counts: dict[int, int] = {}
    for doc in train:
        for tok in doc.tokens():
            word_counts[tok] = word_counts.get(tok, 0) + 1
        for lab in set(doc.labels):
            label_counts[lab] = label_counts.get(lab, 0) + 1
    if not label_counts:
        raise ValueError("cannot build dictionaries from an empty corpus")
    labels = sorted(label_counts, key=lambda lab: (-label_counts[lab], lab))
    return Dictionaries(
        index_to_word=list(word_counts),
        index_to_label=labels,
        word_freqs=np.array(list(word_counts.values()), dtype=np.int64),
        label_freqs=np.array([label_counts[lab] for lab in labels], dtype=np.int64),
    )


@dataclass
class ModelParams:
    dim: int
    mode: str
    input: np.ndarray
    output: np.ndarray

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.input).all() and np.isfinite(self.output).all())


def init_params(n_words: int, n_labels: int, dim: int, mode: str = "hs", seed: int = 0) -> ModelParams:
    """Input rows uniform in [-1/dim, 1/dim]; output rows zero.

    Softmax mode has one output row per label, hs mode one per internal tree
    node (V - 1).
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    rng = np.random.default_rng(seed)
    bound = 1.0 / dim
    inp = rng.uniform(-bound, bound, size=(n_words, dim))
    n_out = n_labels if mode == "softmax" else max(n_labels - 1, 0)
    return ModelParams(dim, mode, inp, np.zeros((n_out, dim)))


def compute_hidden(tokens: Sequence[int] | np.ndarray, params: ModelParams | np.ndarray) -> np.ndarray:
    """Mean of the input embeddings of ``tokens`` (with multiplicity)."""
    table = params.input if isinstance(params, ModelParams) else params
    tokens = np.asarray(tokens, dtype=np.int64)
    if tokens.size == 0:
        raise EmptyDocumentError("empty document")
    return table[tokens].mean(axis=0)


@dataclass
class Model:
    dicts: Dictionaries
    params: ModelParams
    tree: HuffmanTree | None = None

    @property
    def mode(self) -> str:
        return self.params.mode

    def predict_indices(self, tokens: np.ndarray, k: int) -> list[tuple[int, float]]:
        h = compute_hidden(tokens, self.params)
        if self.mode == "hs":
            return predict_top_k(h, self.tree, self.params.output, k)
        return top_k(softmax(self.params.output @ h), k)

    def predict(self, doc: SparseDoc, k: int) -> list[tuple[int, float]]:
        """Top-``k`` ``(label id, probability)`` pairs; empty if no token is known."""
        tokens = self.dicts.encode_doc(doc)
        if tokens.size == 0:
            return []
        labels = self.dicts.index_to_label
        return [(labels[i], p) for i, p in self.predict_indices(tokens, k)]

    def save(self, path: str | Path) -> None:
        save_model(self, path)

    @classmethod
    def load(cls, path: str | Path) -> "Model":
        return load_model(path)


def new_model(dicts: Dictionaries, dim: int, mode: str, seed: int = 0) -> Model:
    params = init_params(dicts.n_words, dicts.n_labels, dim, mode, seed)
    tree = build_huffman_tree(dicts.label_freqs.tolist()) if mode == "hs" else None
    return Model(dicts, params, tree)


# Model file layout (little endian):
#   8s magic | u32 version | u64 header length | header JSON (utf-8)
#   float64 input matrix | float64 output matrix
def save_model(model: Model, path: str | Path) -> None:
    p = model.params
    header = {
        "dim": p.dim,
        "mode": p.mode,
        "words": model.dicts.index_to_word,
        "word_freqs": model.dicts.word_freqs.tolist(),
        "labels": model.dicts.index_to_label,
        "label_freqs": model.dicts.label_freqs.tolist(),
        "input_shape": list(p.input.shape),
        "output_shape": list(p.output.shape),
    }
    if model.tree is not None:
        header["tree"] = {
            "n_leaves": model.tree.n_leaves,
            "left": model.tree.left.tolist(),
            "right": model.tree.right.tolist(),
        }
    blob = json.dumps(header, separators=(",", ":"), sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", FORMAT_VERSION, len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(p.input, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(p.output, dtype="<f8").tobytes())


def load_model(path: str | Path) -> Model:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != MAGIC:
        raise ModelFormatError(f"{path}: not a model file")
    version, hlen = struct.unpack_from("<IQ", data, 8)
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: model format version {version}, expected {FORMAT_VERSION}")
    start = 8 + struct.calcsize("<IQ")
    header = json.loads(data[start:start + hlen].decode("utf-8"))
    offset = start + hlen
    mats = []
    for key in ("input_shape", "output_shape"):
        shape = tuple(header[key])
        count = int(np.prod(shape))
        mats.append(np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape).copy())
        offset += 8 * count
    if offset != len(data):
        raise ModelFormatError(f"{path}: trailing or missing bytes")
    dicts = Dictionaries(
        header["words"],
        header["labels"],
        np.array(header["word_freqs"], dtype=np.int64),
        np.array(header["label_freqs"], dtype=np.int64),
    )
    params = ModelParams(header["dim"], header["mode"], mats[0], mats[1])
    tree = None
    if "tree" in header:
        t = header["tree"]
        tree = HuffmanTree.from_children(t["n_leaves"], t["left"], t["right"])
    return Model(dicts, params, tree)
