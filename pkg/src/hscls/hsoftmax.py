"""Huffman-tree hierarchical softmax.

Each of the V labels is a leaf of a binary Huffman tree built from label
frequencies; each of the V-1 internal nodes owns a parameter row ``v``.
Going left at a node has probability ``sigmoid(v . h)`` and going right
``sigmoid(-v . h)``, so a label's probability is the product of those
decisions along its root path.

Node numbering: leaves are ``0..V-1`` (label indices), internal nodes are
numbered ``0..V-2`` in creation order, so the root is ``V-2`` and every child
is created before its parent.  In the ``left``/``right`` child arrays a child
``c < V`` is a leaf and ``c >= V`` is internal node ``c - V``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
from scipy.special import expit

LEFT, RIGHT = True, False


class TreeError(ValueError):
    pass


def sigmoid(x):
    return expit(x)


def log_sigmoid(x):
    """``log(sigmoid(x))`` without overflow."""
    return -np.logaddexp(0.0, -np.asarray(x, dtype=np.float64))


@dataclass
class HuffmanTree:
    n_leaves: int
    left: np.ndarray
    right: np.ndarray
    paths: list[np.ndarray]
    codes: list[np.ndarray]

    @property
    def n_internal(self) -> int:
        return len(self.left)

    @property
    def root(self) -> int:
        return self.n_internal - 1

    def signs(self, leaf: int) -> np.ndarray:
        """+1 where the path goes left, -1 where it goes right."""
        return np.where(self.codes[leaf], 1.0, -1.0)

    def depth(self, leaf: int) -> int:
        return len(self.paths[leaf])

    def depths(self) -> np.ndarray:
        return np.array([len(p) for p in self.paths], dtype=np.int64)

    @cached_property
    def min_leaf(self) -> np.ndarray:
        """Smallest leaf id below each node, indexed like the child arrays."""
        v = self.n_leaves
        out = np.arange(v + self.n_internal)
        for node in range(self.n_internal):
            out[v + node] = min(out[self.left[node]], out[self.right[node]])
        return out

    def weighted_path_length(self, freqs: Sequence[float]) -> float:
        return float(np.dot(np.asarray(freqs, dtype=np.float64), self.depths()))

    @classmethod
    def from_children(cls, n_leaves: int, left: Sequence[int], right: Sequence[int]) -> "HuffmanTree":
        """Rebuild leaf paths from the child arrays (used when loading a model)."""
        left = np.asarray(left, dtype=np.int64)
        right = np.asarray(right, dtype=np.int64)
        if len(left) != max(n_leaves - 1, 0) or len(right) != len(left):
            raise TreeError("a tree over V leaves needs V-1 internal nodes")
        paths: list[list[int]] = [[] for _ in range(n_leaves)]
        codes: list[list[bool]] = [[] for _ in range(n_leaves)]
        if n_leaves > 1:
            stack = [(len(left) - 1, [], [])]
            seen = 0
            while stack:
                node, path, code = stack.pop()
                for child, bit in ((left[node], LEFT), (right[node], RIGHT)):
                    p, c = path + [node], code + [bit]
                    if child < n_leaves:
                        if paths[child]:
                            raise TreeError(f"leaf {child} reachable twice")
                        paths[child], codes[child] = p, c
                        seen += 1
                    else:
                        stack.append((int(child) - n_leaves, p, c))
            if seen != n_leaves:
                raise TreeError("not every leaf is reachable from the root")
        return cls(
            n_leaves,
            left,
            right,
            [np.array(p, dtype=np.int64) for p in paths],
            [np.array(c, dtype=bool) for c in codes],
        )


def build_huffman_tree(label_freqs: Mapping[int, int] | Sequence[int]) -> HuffmanTree:
    """Huffman tree over label indices ``0..V-1``.

    Zero counts are raised to 1.  Among equal weights the node created first is
    merged first, and the first node popped becomes the left child.
    """
    if isinstance(label_freqs, Mapping):
        n = len(label_freqs)
        if sorted(label_freqs) != list(range(n)):
            raise TreeError("label indices must be dense in [0, V)")
        counts = [label_freqs[i] for i in range(n)]
    else:
        counts = list(label_freqs)
        n = len(counts)
    if n == 0:
        raise TreeError("cannot build a tree over zero labels")

    # heap key: (weight, creation order, child id)
    heap = [(max(c, 1), i, i) for i, c in enumerate(counts)]
    heapq.heapify(heap)
    left, right = [], []
    order = n
    while len(heap) > 1:
        w1, _, a = heapq.heappop(heap)
        w2, _, b = heapq.heappop(heap)
        left.append(a)
        right.append(b)
        heapq.heappush(heap, (w1 + w2, order, n + len(left) - 1))
        order += 1
    return HuffmanTree.from_children(n, left, right)


def step_probability(h: np.ndarray, node_vec: np.ndarray, direction: bool) -> float:
    s = float(np.dot(node_vec, h))
    return float(sigmoid(s if direction == LEFT else -s))


def leaf_probability(h: np.ndarray, leaf: int, tree: HuffmanTree, nodes: np.ndarray) -> float:
    """Product of the branch probabilities along ``leaf``'s root path."""
    if not 0 <= leaf < tree.n_leaves:
        raise KeyError(f"unknown leaf {leaf}")
    path = tree.paths[leaf]
    if len(path) == 0:
        return 1.0
    return float(np.prod(sigmoid(tree.signs(leaf) * (nodes[path] @ h))))


def leaf_log_probability(h: np.ndarray, leaf: int, tree: HuffmanTree, nodes: np.ndarray) -> float:
    path = tree.paths[leaf]
    return float(log_sigmoid(tree.signs(leaf) * (nodes[path] @ h)).sum())


def full_distribution(h: np.ndarray, tree: HuffmanTree, nodes: np.ndarray) -> np.ndarray:
    """Probability of every leaf, by pushing mass down from the root."""
    v = tree.n_leaves
    probs = np.zeros(v)
    if v == 1:
        probs[0] = 1.0
        return probs
    p_left = sigmoid(nodes @ h)
    mass = np.zeros(tree.n_internal)
    mass[tree.root] = 1.0
    # children are created before parents, so descending ids visit parents first
    for node in range(tree.root, -1, -1):
        for child, share in ((tree.left[node], p_left[node]), (tree.right[node], 1.0 - p_left[node])):
            if child < v:
                probs[child] = mass[node] * share
            else:
                mass[child - v] = mass[node] * share
    return probs


def hs_loss_grad(
    h: np.ndarray, gold: int, tree: HuffmanTree, nodes: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Negative log-probability of ``gold`` and its gradients.

    Returns ``(loss, grad_h, node_ids, node_grads)``; only the ``L(gold) - 1``
    rows on the gold path receive a gradient.
    """
    if not 0 <= gold < tree.n_leaves:
        raise IndexError(f"gold label {gold} outside [0, {tree.n_leaves})")
    path = tree.paths[gold]
    vecs = nodes[path]
    s = vecs @ h
    target = tree.codes[gold].astype(np.float64)
    loss = float(np.logaddexp(0.0, -np.where(tree.codes[gold], s, -s)).sum())
    delta = sigmoid(s) - target
    return loss, delta @ vecs, path, np.outer(delta, h)


def predict_top_k(h: np.ndarray, tree: HuffmanTree, nodes: np.ndarray, k: int) -> list[tuple[int, float]]:
    """The ``k`` most probable leaves by best-first search over path log-probabilities.

    A partial path's log-probability upper-bounds every leaf below it, so leaves
    come off the heap in final order.  Ties go to the smaller label index.
    """
    v = tree.n_leaves
    k = min(k, v)
    if k < 1:
        return []
    if v == 1:
        return [(0, 1.0)]
    min_leaf = tree.min_leaf
    # entries: (-logp, smallest label below, child id)
    heap = [(0.0, min_leaf[tree.root + v], tree.root + v)]
    out: list[tuple[int, float]] = []
    while heap and len(out) < k:
        neg, _, node = heapq.heappop(heap)
        if node < v:
            out.append((int(node), math.exp(-neg)))
            continue
        idx = node - v
        s = float(nodes[idx] @ h)
        for child, x in ((tree.left[idx], s), (tree.right[idx], -s)):
            heapq.heappush(heap, (neg - float(log_sigmoid(x)), min_leaf[child], int(child)))
    return out

