"""SGD training for either output layer.

Each visit to a document picks one of its labels uniformly at random as the
target.  The learning rate decays linearly from ``lr`` to zero over the
``epochs * len(corpus)`` scheduled updates.

With ``workers > 1`` the workers share the parameter arrays and write to them
without locks (hogwild style): results are not reproducible, only the total
update count and the finiteness check are guaranteed.
"""

from __future__ import annotations

import itertools
import logging
import math
import threading
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .corpus import Corpus
from .hsoftmax import hs_loss_grad
from .model import MODES, Model, build_dictionaries, new_model
from .softmax import softmax_loss_grad

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    dim: int = 200
    epochs: int = 100
    lr: float = 0.25
    loss: str = "hs"
    seed: int = 0
    workers: int = 1
    deterministic: bool | None = None

    def __post_init__(self):
        if self.deterministic is None:
            self.deterministic = self.workers == 1
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.loss not in MODES:
            raise ValueError(f"loss must be one of {MODES}")
        if self.deterministic and self.workers != 1:
            raise ValueError("deterministic training requires workers == 1")


@dataclass
class TrainReport:
    wall_clock: float
    examples: int
    final_mean_loss: float
    config: dict
    epoch_seconds: list[float] = field(default_factory=list)
    epoch_losses: list[float] = field(default_factory=list)

    @property
    def seconds_per_epoch(self) -> float:
        return sum(self.epoch_seconds) / len(self.epoch_seconds)

    def as_dict(self) -> dict:
        return asdict(self)

    def as_text(self) -> str:
        rows = [
            ("wall_clock", f"{self.wall_clock:.6f}"),
            ("examples", self.examples),
            ("final_mean_loss", f"{self.final_mean_loss:.6f}"),
            ("seconds_per_epoch", f"{self.seconds_per_epoch:.6f}"),
        ]
        rows += [(k, v) for k, v in self.config.items()]
        return "".join(f"{k}\t{v}\n" for k, v in rows)


def learning_rate(update_index: int, total_updates: int, lr0: float) -> float:
    return max(0.0, lr0 * (1.0 - update_index / total_updates))


class _Encoded:
    """Corpus pre-encoded to index arrays."""

    def __init__(self, corpus: Corpus, model: Model):
        self.tokens = []
        self.labels = []
        self.unique = []
        for doc in corpus.docs:
            toks = model.dicts.encode_doc(doc)
            self.tokens.append(toks)
            self.labels.append(model.dicts.encode_labels(doc.labels))
            self.unique.append(len(np.unique(toks)) == len(toks))

    def __len__(self):
        return len(self.tokens)


def _sgd_step(model: Model, tokens: np.ndarray, unique: bool, gold: int, lr: float) -> float:
    params = model.params
    inp, out = params.input, params.output
    h = inp[tokens].mean(axis=0)
    if params.mode == "hs":
        loss, grad_h, rows, row_grads = hs_loss_grad(h, gold, model.tree, out)
        out[rows] -= lr * row_grads
    else:
        loss, grad_h, row_grads = softmax_loss_grad(h, gold, out)
        out -= lr * row_grads
    step = (lr / len(tokens)) * grad_h
    if unique:
        inp[tokens] -= step
    else:
        np.subtract.at(inp, tokens, step)
    return loss


def _run_examples(model, data, order, rng, counter, total, lr0):
    """SGD over ``order``; returns (summed loss, updates applied)."""
    loss_sum = 0.0
    count = 0
    for i in order:
        update_index = next(counter)
        labels = data.labels[i]
        gold = labels[0] if len(labels) == 1 else labels[rng.integers(len(labels))]
        lr = learning_rate(update_index, total, lr0)
        loss = _sgd_step(model, data.tokens[i], data.unique[i], int(gold), lr)
        if not math.isfinite(loss):
            raise TrainingError(
                f"non-finite loss at update {update_index} (lr={lr:.4g}); lower the learning rate"
            )
        loss_sum += loss
        count += 1
    return loss_sum, count


def train(corpus: Corpus, config: TrainConfig | None = None) -> tuple[Model, TrainReport]:
    config = config or TrainConfig()
    if len(corpus) == 0:
        raise ValueError("cannot train on an empty corpus")
    t0 = time.perf_counter()
    model = new_model(build_dictionaries(corpus), config.dim, config.loss, config.seed)
    data = _Encoded(corpus, model)
    keep = np.array([len(t) > 0 and len(lab) > 0 for t, lab in zip(data.tokens, data.labels)])
    if not keep.all():
        log.warning("%d training docs have no tokens and are skipped", int((~keep).sum()))
    usable = np.flatnonzero(keep)
    if usable.size == 0:
        raise ValueError("no training document has any token")

    total = config.epochs * len(usable)
    counter = itertools.count()
    rng = np.random.default_rng(config.seed)
    epoch_seconds, epoch_losses = [], []
    for epoch in range(config.epochs):
        e0 = time.perf_counter()
        order = usable[rng.permutation(len(usable))]
        if config.workers == 1:
            loss_sum, count = _run_examples(model, data, order, rng, counter, total, config.lr)
        else:
            loss_sum, count = _run_racy(model, data, order, counter, total, config, epoch)
        epoch_seconds.append(time.perf_counter() - e0)
        epoch_losses.append(loss_sum / count)
        log.debug("epoch %d loss %.5f (%.3fs)", epoch, epoch_losses[-1], epoch_seconds[-1])

    if not model.params.is_finite():
        raise TrainingError("parameters became non-finite")
    report = TrainReport(
        wall_clock=max(time.perf_counter() - t0, 1e-9),
        examples=next(counter),
        final_mean_loss=epoch_losses[-1],
        config=asdict(config),
        epoch_seconds=epoch_seconds,
        epoch_losses=epoch_losses,
    )
    return model, report


def _run_racy(model, data, order, counter, total, config, epoch):
    shards = np.array_split(order, config.workers)
    results: list = [None] * config.workers
    errors: list[BaseException] = []

    def work(w):
        rng = np.random.default_rng([config.seed, epoch, w])
        try:
            results[w] = _run_examples(model, data, shards[w], rng, counter, total, config.lr)
        except BaseException as exc:  # re-raised in the caller
            errors.append(exc)

    threads = [threading.Thread(target=work, args=(w,)) for w in range(config.workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    return sum(r[0] for r in results), sum(r[1] for r in results)
