"""Flat softmax output layer with cross-entropy loss."""

from __future__ import annotations

import numpy as np


def softmax(scores: np.ndarray) -> np.ndarray:
    """Normalised exponentials of ``scores``, stabilised by subtracting the max."""
    s = np.asarray(scores, dtype=np.float64)
    e = np.exp(s - s.max())
    return e / e.sum()


def log_softmax(scores: np.ndarray) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    shifted = s - s.max()
    return shifted - np.log(np.exp(shifted).sum())


def softmax_loss_grad(h: np.ndarray, gold: int, output: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Cross-entropy loss of label ``gold`` and its gradients.

    ``output`` holds one row per label.  Returns ``(loss, grad_h, grad_rows)``
    where ``grad_rows`` is dense over all V rows: ``(p_i - [i == gold]) * h``.
    """
    v = output.shape[0]
    if not 0 <= gold < v:
        raise IndexError(f"gold label {gold} outside [0, {v})")
    logp = log_softmax(output @ h)
    delta = np.exp(logp)
    delta[gold] -= 1.0
    grad_h = delta @ output
    grad_rows = np.outer(delta, h)
    return float(-logp[gold]), grad_h, grad_rows


def top_k(probs: np.ndarray, k: int) -> list[tuple[int, float]]:
    """The ``k`` largest entries, ties broken by smaller index."""
    k = min(k, len(probs))
    if k < len(probs):
        # argpartition is not stable under ties; widen the candidate set to every
        # entry equal to the k-th largest value before the exact sort.
        kth = np.partition(probs, len(probs) - k)[len(probs) - k]
        cand = np.flatnonzero(probs >= kth)
    else:
        cand = np.arange(len(probs))
    order = cand[np.lexsort((cand, -probs[cand]))][:k]
    return [(int(i), float(probs[i])) for i in order]
