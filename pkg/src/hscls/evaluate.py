"""Top-k corpus prediction and macro-averaged precision / recall / F1."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .corpus import Corpus
from .model import Model


@dataclass
class MacroReport:
    counts: dict[int, tuple[int, int, int]]
    classes: list[int]
    precision: float
    recall: float
    f1: float
    k: int | None = None
    unknown_predicted: list[int] = field(default_factory=list)
    zero_division: str = "0"

    def as_dict(self) -> dict:
        return {
            "macro_precision": self.precision,
            "macro_recall": self.recall,
            "macro_f1": self.f1,
            "k": self.k,
            "n_classes": len(self.classes),
            "zero_division": self.zero_division,
            "unknown_predicted": self.unknown_predicted,
            "per_class": {str(c): dict(zip(("tp", "fp", "fn"), self.counts[c])) for c in self.classes},
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"


def predict_corpus(model: Model, test: Corpus | Iterable, k: int) -> list[list[int]]:
    """Predicted label ids per doc; docs without known tokens get ``[]``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return [[lab for lab, _ in model.predict(doc, k)] for doc in test]


def confusion_counts(
    preds: Sequence[Iterable[int]], golds: Sequence[Iterable[int]], classes: Iterable[int]
) -> tuple[dict[int, list[int]], list[int]]:
    """Per-class ``[tp, fp, fn]`` summed over docs.

    Predicted labels outside ``classes`` are added with zero gold support and
    returned in the second element so the caller can flag them.
    """
    if len(preds) != len(golds):
        raise ValueError(f"{len(preds)} predictions for {len(golds)} gold docs")
    counts = {c: [0, 0, 0] for c in classes}
    unknown = []
    for pred, gold in zip(preds, golds):
        pred, gold = set(pred), set(gold)
        for c in gold:
            if c not in counts:
                raise ValueError(f"gold label {c} is not in the class set")
        for c in pred:
            if c not in counts:
                counts[c] = [0, 0, 0]
                unknown.append(c)
            counts[c][0 if c in gold else 1] += 1
        for c in gold - pred:
            counts[c][2] += 1
    return counts, sorted(unknown)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def harmonic(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def macro_scores(counts, classes: Sequence[int] | None = None, k: int | None = None) -> MacroReport:
    """Macro precision and recall are per-class means (0/0 counts as 0); F1 is their harmonic mean."""
    classes = list(counts) if classes is None else list(classes)
    if not classes:
        raise ValueError("empty class set")
    p = sum(_ratio(counts[c][0], counts[c][0] + counts[c][1]) for c in classes) / len(classes)
    r = sum(_ratio(counts[c][0], counts[c][0] + counts[c][2]) for c in classes) / len(classes)
    return MacroReport(
        counts={c: tuple(counts[c]) for c in classes},
        classes=classes,
        precision=p,
        recall=r,
        f1=harmonic(p, r),
        k=k,
    )


def evaluate(preds, golds, classes: Iterable[int], k: int | None = None) -> MacroReport:
    counts, unknown = confusion_counts(preds, golds, classes)
    report = macro_scores(counts, sorted(counts), k)
    report.unknown_predicted = unknown
    return report
