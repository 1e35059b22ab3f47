"""End-to-end hs vs softmax comparison across several top-n label counts."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Sequence

from .corpus import Corpus, prepare
from .evaluate import evaluate, predict_corpus
from .trainer import TrainConfig, train

log = logging.getLogger(__name__)

MISSING = "NA"


def fmt_round(x: float | None, places: int = 2) -> str:
    """Round half-up for display (``0.125 -> 0.13``)."""
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return MISSING
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP))


@dataclass
class BenchRow:
    n: int
    mode: str
    n_labels: int | None = None
    avg_labels_per_doc: float | None = None
    predict_k: int | None = None
    n_train: int | None = None
    n_test: int | None = None
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None
    train_seconds: float | None = None
    seconds_per_epoch: float | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class BenchResult:
    rows: list[BenchRow]
    config: dict = field(default_factory=dict)

    def row(self, n: int, mode: str) -> BenchRow | None:
        return next((r for r in self.rows if r.n == n and r.mode == mode), None)

    @property
    def ns(self) -> list[int]:
        return sorted({r.n for r in self.rows})


def run_bench(
    corpus: Corpus,
    n_list: Sequence[int],
    seed: int = 0,
    config: TrainConfig | None = None,
    modes: Sequence[str] = ("hs", "softmax"),
    train_fraction: float = 0.7,
) -> BenchResult:
    """prep -> train -> predict -> evaluate for every (n, mode) cell.

    A failing cell is recorded with its error and the run continues.
    """
    base = config or TrainConfig(seed=seed)
    rows = []
    for n in n_list:
        try:
            data = prepare(corpus, n, seed=seed, train_fraction=train_fraction)
        except Exception as exc:
            log.error("prep failed for n=%d: %s", n, exc)
            rows += [BenchRow(n, mode, error=f"prep: {exc}") for mode in modes]
            continue
        for mode in modes:
            row = BenchRow(
                n,
                mode,
                n_labels=len(data.labels),
                avg_labels_per_doc=data.stats.avg_labels_per_doc,
                predict_k=data.stats.predict_k,
                n_train=len(data.train),
                n_test=len(data.test),
            )
            try:
                model, report = train(data.train, replace(base, loss=mode))
                preds = predict_corpus(model, data.test, data.stats.predict_k)
                scores = evaluate(preds, [d.labels for d in data.test], data.labels, data.stats.predict_k)
            except Exception as exc:
                log.error("cell n=%d mode=%s failed: %s", n, mode, exc)
                row.error = f"{type(exc).__name__}: {exc}"
            else:
                row.precision, row.recall, row.f1 = scores.precision, scores.recall, scores.f1
                row.train_seconds = report.wall_clock
                row.seconds_per_epoch = report.seconds_per_epoch
                log.info("n=%d %s MaF=%.4f (%.2fs)", n, mode, scores.f1, report.wall_clock)
            rows.append(row)
    return BenchResult(rows, {"seed": seed, "train_fraction": train_fraction, **asdict(base)})


SCORE_COLUMNS = ("n", "mode", "macro_precision", "macro_recall", "macro_f1", "train_seconds")


def scores_tsv(result: BenchResult) -> str:
    lines = ["\t".join(SCORE_COLUMNS)]
    for r in result.rows:
        secs = MISSING if r.train_seconds is None else f"{r.train_seconds:.3f}"
        lines.append("\t".join([str(r.n), r.mode, fmt_round(r.precision), fmt_round(r.recall), fmt_round(r.f1), secs]))
    return "\n".join(lines) + "\n"


def curve_tsv(result: BenchResult) -> str:
    """log10(n) against macro F1 per mode, ready for plotting."""
    lines = ["n\tlog10_n\tmode\tmacro_f1"]
    for r in result.rows:
        f1 = MISSING if r.f1 is None else repr(r.f1)
        lines.append(f"{r.n}\t{math.log10(r.n):.6f}\t{r.mode}\t{f1}")
    return "\n".join(lines) + "\n"


def _table(title: str, header: Sequence[str], body: list[Sequence[str]]) -> str:
    widths = [max(len(str(x)) for x in col) for col in zip(header, *body)]
    fmt = "  ".join(f"{{:>{w}}}" for w in widths)
    out = [title, fmt.format(*header)]
    out += [fmt.format(*map(str, row)) for row in body]
    return "\n".join(out) + "\n"


def tables_text(result: BenchResult) -> str:
    """The label-statistics, per-mode score and training-time tables."""
    ns = result.ns
    parts = []
    stats = []
    for n in ns:
        r = next((r for r in result.rows if r.n == n and r.avg_labels_per_doc is not None), None)
        stats.append([n, fmt_round(r.avg_labels_per_doc, 1) if r else MISSING, r.predict_k if r else MISSING])
    parts.append(_table("Label statistics per top-n", ["top n", "avg labels per doc", "labels predicted per doc"], stats))
    for mode, title in (("hs", "Scores with hierarchical softmax"), ("softmax", "Scores with softmax")):
        body = []
        for n in ns:
            r = result.row(n, mode)
            if r is not None:
                body.append([n, fmt_round(r.precision), fmt_round(r.recall), fmt_round(r.f1)])
        if body:
            parts.append(_table(title, ["top n", "macro precision", "macro recall", "macro f1"], body))
    times = []
    for n in ns:
        hs, sm = result.row(n, "hs"), result.row(n, "softmax")
        t_hs = hs.train_seconds if hs else None
        t_sm = sm.train_seconds if sm else None
        ratio = fmt_round(t_sm / t_hs) if t_hs and t_sm else MISSING
        times.append([n, fmt_round(t_hs, 3), fmt_round(t_sm, 3), ratio])
    parts.append(_table("Training seconds", ["top n", "hs", "softmax", "softmax/hs"], times))
    return "\n".join(parts)


def write_bench_outputs(result: BenchResult, outdir: str | Path) -> dict[str, Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "scores": outdir / "bench.tsv",
        "tables": outdir / "tables.txt",
        "curve": outdir / "curve.tsv",
        "json": outdir / "bench.json",
    }
    paths["scores"].write_text(scores_tsv(result), encoding="utf-8")
    paths["tables"].write_text(tables_text(result), encoding="utf-8")
    paths["curve"].write_text(curve_tsv(result), encoding="utf-8")
    payload = {"config": result.config, "rows": [asdict(r) for r in result.rows]}
    paths["json"].write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return paths
