"""Extractor scoring: per-relation and micro-averaged P/R/F1, PR curves,
and the k-sweep development protocol.

The micro average sums tp/fp/fn over relations before taking ratios, as
opposed to averaging per-relation scores.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import classifier, propagation
from .classifier import Model, TrainConfig, predict_many, sweep_threshold, train
from .instances import NEGATIVE, RelationInstance
from .propagation import RankedPattern, Schedule


@dataclass
class EvalRecord:
    relation: str
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


def evaluate(
    predictions: list[tuple[str, str, bool]],
    gold: dict[tuple[str, str], bool],
) -> tuple[dict[str, EvalRecord], EvalRecord]:
    """Count tp/fp/fn per relation and micro-averaged over all of them.

    ``predictions`` are (relation, instance_id, predicted_positive); gold
    instances without a prediction count as predicted negative.
    """
    records: dict[str, EvalRecord] = {}
    seen: set[tuple[str, str]] = set()
    for relation, instance_id, predicted in predictions:
        key = (relation, instance_id)
        if key not in gold:
            raise KeyError(f"prediction for unknown instance {key!r}")
        seen.add(key)
        rec = records.setdefault(relation, EvalRecord(relation=relation))
        if predicted and gold[key]:
            rec.tp += 1
        elif predicted and not gold[key]:
            rec.fp += 1
        elif not predicted and gold[key]:
            rec.fn += 1
    for (relation, instance_id), label in gold.items():
        if label and (relation, instance_id) not in seen:
            records.setdefault(relation, EvalRecord(relation=relation)).fn += 1
    micro = EvalRecord(relation="micro")
    for rec in records.values():
        micro.tp += rec.tp
        micro.fp += rec.fp
        micro.fn += rec.fn
    return records, micro


def pr_curve(scores: np.ndarray, labels: np.ndarray) -> list[tuple[float, float]]:
    """(recall, precision) points for decreasing decision thresholds over
    the distinct scores; recall is non-decreasing along the output."""
    if not int(np.sum(labels == 1)):
        raise ValueError("PR curve needs at least one positive instance")
    points: list[tuple[float, float]] = []
    for threshold in sorted(set(float(s) for s in scores), reverse=True):
        pred = scores >= threshold
        tp = int(np.sum(pred & (labels == 1)))
        fp = int(np.sum(pred & (labels == 0)))
        fn = int(np.sum(~pred & (labels == 1)))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        points.append((recall, precision))
    return points


def pr_curve_csv(points: list[tuple[float, float]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("recall,precision\n")
        for recall, precision in points:
            handle.write(f"{recall:.6f},{precision:.6f}\n")


def pr_curve_svg(points: list[tuple[float, float]], path: str | Path, title: str = "") -> None:
    """Small standalone SVG plot (deterministic output, no plot library)."""
    width, height, margin = 480, 360, 48
    def sx(r: float) -> float:
        return margin + r * (width - 2 * margin)
    def sy(p: float) -> float:
        return height - margin - p * (height - 2 * margin)
    coords = " ".join(f"{sx(r):.2f},{sy(p):.2f}" for r, p in points)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle" font-size="12">recall</text>',
        f'<text x="14" y="{height / 2:.0f}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {height / 2:.0f})">precision</text>',
    ]
    if title:
        parts.append(f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" font-size="13">{title}</text>')
    if coords:
        parts.append(f'<polyline points="{coords}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


@dataclass
class SweepCell:
    k: int
    representation: str
    n_train_pos: int
    mean_f1: float
    std_f1: float
    f1_values: list[float] = field(default_factory=list)


@dataclass
class SweepResult:
    cells: list[SweepCell]
    best_k: int
    best_representation: str

    def cell(self, k: int, representation: str) -> SweepCell:
        for c in self.cells:
            if c.k == k and c.representation == representation:
                return c
        raise KeyError((k, representation))


def _resample_negatives(
    negatives: list[RelationInstance], want: int, seed_token: str
) -> list[RelationInstance]:
    pool = sorted(negatives, key=lambda i: i.sort_key)
    if want >= len(pool):
        return pool
    rng = random.Random(seed_token)
    return sorted(rng.sample(pool, want), key=lambda i: i.sort_key)


def k_sweep(
    relation: str,
    total_steps: int,
    representations: list[str],
    kept: list[RelationInstance],
    discarded: list[RelationInstance],
    rankings: dict[str, list[RankedPattern]],
    negatives: list[RelationInstance],
    dev_instances: list[RelationInstance],
    dev_labels: np.ndarray,
    config: TrainConfig,
    resamples: int = 5,
    negative_ratio: float = 1.0,
    seed: int = 17,
) -> SweepResult:
    """Dev optimal-F1 for every (k, representation) cell, with a resampling
    standard deviation over the negative sample, and the argmax cell.

    ``rankings`` maps each representation to its candidate-pattern ranking
    (computed once from the filtered set).
    """
    n_filtered = len(kept)
    n_ds = len(kept) + len(discarded)
    cells: list[SweepCell] = []
    for representation in representations:
        ranking = rankings[representation]
        for k in range(total_steps + 1):
            schedule = Schedule(n_filtered=n_filtered, n_ds=n_ds, total_steps=total_steps, step=k)
            positives = propagation.assemble_training_set(
                [i for i in kept], [i for i in discarded], ranking, schedule
            )
            want = round(negative_ratio * len(positives))
            f1_values: list[float] = []
            for r in range(resamples):
                sampled = _resample_negatives(negatives, want, f"{seed}:{relation}:{representation}:{k}:{r}")
                model = train(positives + sampled, relation, config)
                scores = predict_many(model, dev_instances)
                f1_values.append(sweep_threshold(scores, dev_labels).best_f1)
            arr = np.array(f1_values)
            cells.append(
                SweepCell(
                    k=k,
                    representation=representation,
                    n_train_pos=len(positives),
                    mean_f1=float(arr.mean()),
                    std_f1=float(arr.std()),
                    f1_values=f1_values,
                )
            )
    best = max(cells, key=lambda c: (c.mean_f1, -c.k, c.representation))
    return SweepResult(cells=cells, best_k=best.k, best_representation=best.representation)


def sweep_to_tsv(result: SweepResult, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("k\trepresentation\tn_train_pos\tmean_f1\tstd_f1\n")
        for cell in sorted(result.cells, key=lambda c: (c.representation, c.k)):
            handle.write(
                f"{cell.k}\t{cell.representation}\t{cell.n_train_pos}\t{cell.mean_f1:.6f}\t{cell.std_f1:.6f}\n"
            )
