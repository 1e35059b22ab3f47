"""Bag-of-words text classification with softmax or Huffman hierarchical softmax output."""

__version__ = "0.1.0"

from .corpus import Corpus, PrepStats, SparseDoc, prepare
from .evaluate import MacroReport, evaluate, macro_scores, predict_corpus
from .hsoftmax import HuffmanTree, build_huffman_tree
from .model import Model, load_model
from .synthetic import generate_synthetic_corpus
from .trainer import TrainConfig, TrainReport, train

__all__ = [
    "Corpus",
    "HuffmanTree",
    "MacroReport",
    "Model",
    "PrepStats",
    "SparseDoc",
    "TrainConfig",
    "TrainReport",
    "build_huffman_tree",
    "evaluate",
    "generate_synthetic_corpus",
    "load_model",
    "macro_scores",
    "predict_corpus",
    "prepare",
    "train",
]
