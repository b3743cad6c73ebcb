"""Per-relation binary logistic regression over sparse feature bags.

Training minimizes the weighted, L2-regularized logistic loss with
full-batch gradient descent from a zero start.  Negative examples carry a
configurable weight multiplier; the loss is normalized by the total
example weight.  A step is halved when it would increase the loss, so the
loss decreases monotonically and training stays deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from .instances import POSITIVE, RelationInstance

DEFAULT_STEP = 0.1
DEFAULT_EPOCHS = 500
DEFAULT_L2 = 1e-3
DEFAULT_NEG_WEIGHT_GRID = (1.0, 0.5, 0.25, 0.125, 0.0625)


@dataclass
class TrainConfig:
    step: float = DEFAULT_STEP
    epochs: int = DEFAULT_EPOCHS
    l2_lambda: float = DEFAULT_L2
    neg_weight: float = 1.0
    seed: int = 0


@dataclass
class FeatureIndex:
    """Bidirectional feature string <-> dense id map, frozen after fit."""

    ids: dict[str, int] = field(default_factory=dict)
    names: list[str] = field(default_factory=list)
    frozen: bool = False

    def add(self, feature: str) -> int:
        idx = self.ids.get(feature)
        if idx is None:
            if self.frozen:
                return -1
            idx = len(self.names)
            self.ids[feature] = idx
            self.names.append(feature)
        return idx

    def get(self, feature: str) -> int | None:
        return self.ids.get(feature)

    def __len__(self) -> int:
        return len(self.names)


@dataclass
class Model:
    relation: str
    index: FeatureIndex
    weights: np.ndarray
    bias: float
    l2_lambda: float
    neg_weight: float
    seed: int


def _design_matrix(bags: list[list[str]], index: FeatureIndex, grow: bool) -> sparse.csr_matrix:
    rows: list[int] = []
    cols: list[int] = []
    for row, bag in enumerate(bags):
        seen = set()
        for feature in bag:
            idx = index.add(feature) if grow else index.get(feature)
            if idx is None or idx < 0 or idx in seen:
                continue
            seen.add(idx)
            rows.append(row)
            cols.append(idx)
    data = np.ones(len(rows), dtype=np.float64)
    return sparse.csr_matrix((data, (rows, cols)), shape=(len(bags), len(index)))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_and_gradient(
    x: sparse.csr_matrix,
    y: np.ndarray,
    sample_weight: np.ndarray,
    w: np.ndarray,
    b: float,
    l2_lambda: float,
) -> tuple[float, np.ndarray, float]:
    """Weighted mean logistic loss with L2 on the weights (not the bias)."""
    z = x @ w + b
    p = _sigmoid(z)
    eps = 1e-12
    total = sample_weight.sum()
    nll = -(sample_weight * (y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps))).sum() / total
    loss = nll + 0.5 * l2_lambda * float(w @ w)
    residual = sample_weight * (p - y) / total
    grad_w = x.T @ residual + l2_lambda * w
    grad_b = float(residual.sum())
    return float(loss), np.asarray(grad_w).ravel(), grad_b


def train(instances: list[RelationInstance], relation: str, config: TrainConfig) -> Model:
    """Fit the extractor for one relation on the given instances."""
    bags = [inst.features for inst in instances]
    y = np.array([1.0 if inst.ds_label == POSITIVE else 0.0 for inst in instances])
    if not len(y) or y.min() == y.max():
        raise ValueError("training needs at least one positive and one negative instance")
    index = FeatureIndex()
    x = _design_matrix(bags, index, grow=True)
    index.frozen = True
    weight = np.where(y == 1.0, 1.0, config.neg_weight)

    w = np.zeros(len(index), dtype=np.float64)
    b = 0.0
    step = config.step
    loss, grad_w, grad_b = loss_and_gradient(x, y, weight, w, b, config.l2_lambda)
    for _ in range(config.epochs):
        while True:
            w_new = w - step * grad_w
            b_new = b - step * grad_b
            new_loss, new_gw, new_gb = loss_and_gradient(x, y, weight, w_new, b_new, config.l2_lambda)
            if new_loss <= loss or step < 1e-12:
                break
            step *= 0.5
        w, b, loss, grad_w, grad_b = w_new, b_new, new_loss, new_gw, new_gb
    return Model(
        relation=relation,
        index=index,
        weights=w,
        bias=b,
        l2_lambda=config.l2_lambda,
        neg_weight=config.neg_weight,
        seed=config.seed,
    )


def predict_proba(model: Model, instance: RelationInstance) -> float:
    """sigmoid(w . x + b) over the known features of the instance."""
    z = model.bias
    seen = set()
    for feature in instance.features:
        idx = model.index.get(feature)
        if idx is not None and idx not in seen:
            seen.add(idx)
            z += model.weights[idx]
    return float(_sigmoid(np.array([z]))[0])


def predict_many(model: Model, instances: list[RelationInstance]) -> np.ndarray:
    return np.array([predict_proba(model, inst) for inst in instances])


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass
class ThresholdRow:
    threshold: float
    precision: float
    recall: float
    f1: float


@dataclass
class ThresholdSweep:
    rows: list[ThresholdRow]
    best_threshold: float
    best_f1: float


def sweep_threshold(scores: np.ndarray, labels: np.ndarray) -> ThresholdSweep:
    """P/R/F1 at every distinct score used as the decision threshold
    (predict positive when score >= threshold)."""
    if not len(scores):
        raise ValueError("empty evaluation set")
    rows: list[ThresholdRow] = []
    best: ThresholdRow | None = None
    for threshold in sorted(set(float(s) for s in scores), reverse=True):
        pred = scores >= threshold
        tp = int(np.sum(pred & (labels == 1)))
        fp = int(np.sum(pred & (labels == 0)))
        fn = int(np.sum(~pred & (labels == 1)))
        precision, recall, f1 = _prf(tp, fp, fn)
        row = ThresholdRow(threshold=threshold, precision=precision, recall=recall, f1=f1)
        rows.append(row)
        if best is None or row.f1 > best.f1:
            best = row
    return ThresholdSweep(rows=rows, best_threshold=best.threshold, best_f1=best.f1)


def f1_at_threshold(scores: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> float:
    pred = scores >= threshold
    tp = int(np.sum(pred & (labels == 1)))
    fp = int(np.sum(pred & (labels == 0)))
    fn = int(np.sum(~pred & (labels == 1)))
    return _prf(tp, fp, fn)[2]


@dataclass
class NegWeightChoice:
    neg_weight: float
    f1_at_half: float
    model: Model


def tune_neg_weight(
    train_instances: list[RelationInstance],
    dev_instances: list[RelationInstance],
    dev_labels: np.ndarray,
    relation: str,
    config: TrainConfig,
    grid: tuple[float, ...] = DEFAULT_NEG_WEIGHT_GRID,
) -> NegWeightChoice:
    """Pick the negative-example weight whose dev F1 at the 0.5 threshold
    is best (ties keep the larger weight, i.e. the less aggressive one)."""
    best: NegWeightChoice | None = None
    for neg_weight in grid:
        cfg = TrainConfig(
            step=config.step,
            epochs=config.epochs,
            l2_lambda=config.l2_lambda,
            neg_weight=neg_weight,
            seed=config.seed,
        )
        model = train(train_instances, relation, cfg)
        scores = predict_many(model, dev_instances)
        f1 = f1_at_threshold(scores, dev_labels)
        if best is None or f1 > best.f1_at_half:
            best = NegWeightChoice(neg_weight=neg_weight, f1_at_half=f1, model=model)
    return best


def save_model(model: Model, path: str | Path) -> None:
    payload = {
        "relation": model.relation,
        "bias": model.bias,
        "l2_lambda": model.l2_lambda,
        "neg_weight": model.neg_weight,
        "seed": model.seed,
        "weights": {name: float(w) for name, w in zip(model.index.names, model.weights)},
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, ensure_ascii=False, sort_keys=True, indent=1)
        handle.write("\n")


def load_model(path: str | Path) -> Model:
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    index = FeatureIndex()
    weights = []
    for name in sorted(payload["weights"]):
        index.add(name)
        weights.append(payload["weights"][name])
    index.frozen = True
    return Model(
        relation=payload["relation"],
        index=index,
        weights=np.array(weights, dtype=np.float64),
        bias=payload["bias"],
        l2_lambda=payload["l2_lambda"],
        neg_weight=payload["neg_weight"],
        seed=payload["seed"],
    )
