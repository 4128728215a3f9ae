"""Mini-batch training of the two-branch model and stratified k-fold evaluation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import softmax

from ghmloss.data import Dataset
from ghmloss.embedding import Batch
from ghmloss.loss import LossBreakdown, LossConfig, _ce_and_grad, evaluate
from ghmloss.metrics import MetricsReport, classification_report
from ghmloss.model import MLP, Adam, MLPConfig

log = logging.getLogger(__name__)


class TrainingError(FloatingPointError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 8
    learning_rate: float = 1e-4
    weight_decay: float = 1e-4
    epochs: int = 200
    loss: LossConfig = field(default_factory=LossConfig)
    folds: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if not self.learning_rate > 0 or self.weight_decay < 0:
            raise ValueError("learning_rate must be > 0 and weight_decay >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.folds < 1:
            raise ValueError("folds must be >= 1")


@dataclass
class TrainResult:
    model: MLP
    trajectory: list
    final_loss: LossBreakdown


@dataclass
class FoldResult:
    fold: int
    metrics: MetricsReport
    final_loss: LossBreakdown
    trajectory: list
    held_out: np.ndarray

    def to_dict(self) -> dict:
        return {
            "fold": self.fold,
            "metrics": self.metrics.to_dict(),
            "final_loss": self.final_loss.to_dict(),
            "trajectory": list(self.trajectory),
            "held_out": self.held_out.tolist(),
        }


def iterate_minibatches(labels: np.ndarray, batch_size: int, rng: np.random.Generator):
    """Yield index arrays of a shuffled epoch.

    A trailing short batch is dropped when it cannot form a pair or holds a
    single class.
    """
    order = rng.permutation(labels.shape[0])
    for start in range(0, order.size, batch_size):
        idx = order[start : start + batch_size]
        if idx.size < batch_size and (idx.size < 2 or np.unique(labels[idx]).size < 2):
            continue
        yield idx


def train_step(model: MLP, x: np.ndarray, y: np.ndarray, loss_cfg: LossConfig):
    """Loss breakdown and parameter gradients for one mini-batch (no weight decay)."""
    emb, logits, cache = model.forward(x, return_cache=True)
    if loss_cfg.beta == 0.0:
        ce, d_logits = _ce_and_grad(logits, y)
        breakdown = LossBreakdown(0.0, 0.0, 0.0, ce, ce)
        d_emb = np.zeros_like(emb)
    else:
        ev = evaluate(Batch(emb, y), loss_cfg, logits=logits, with_grad=True)
        breakdown = ev.breakdown
        d_emb, d_logits = ev.gradients.d_embeddings, ev.gradients.d_logits
    return breakdown, model.backward(cache, d_emb, d_logits)


def train(model: MLP, dataset: Dataset, cfg: TrainConfig, on_epoch=None) -> TrainResult:
    """Adam on the multi-task objective; records the mean batch loss per epoch.

    ``on_epoch(epoch, model)`` is called before the first epoch (with 0) and
    after every epoch.
    """
    if np.unique(dataset.labels).size < 2:
        raise ValueError("training needs at least two classes")
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(lr=cfg.learning_rate, weight_decay=cfg.weight_decay)
    trajectory = []
    last = None
    if on_epoch is not None:
        on_epoch(0, model)
    for epoch in range(1, cfg.epochs + 1):
        epoch_losses = []
        for b, idx in enumerate(iterate_minibatches(dataset.labels, cfg.batch_size, rng)):
            breakdown, grads = train_step(model, dataset.features[idx], dataset.labels[idx], cfg.loss)
            if not np.isfinite(breakdown.total):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {b}")
            opt.step(model.params, grads)
            epoch_losses.append(breakdown)
        if not epoch_losses:
            raise TrainingError(f"epoch {epoch} produced no usable mini-batch")
        trajectory.append(float(np.mean([bd.total for bd in epoch_losses])))
        last = LossBreakdown(*(float(np.mean([getattr(bd, f) for bd in epoch_losses]))
                               for f in ("geometric", "probabilistic", "hybrid", "cross_entropy", "total")))
        log.debug("epoch %d loss %.6f", epoch, trajectory[-1])
        if on_epoch is not None:
            on_epoch(epoch, model)
    return TrainResult(model, trajectory, last)


def predict_proba(model: MLP, x: np.ndarray) -> np.ndarray:
    return softmax(model.forward(x)[1], axis=1)


def stratified_folds(labels: np.ndarray, folds: int, seed: int) -> np.ndarray:
    """Fold id per sample; each class is shuffled and dealt round-robin."""
    labels = np.asarray(labels)
    classes, counts = np.unique(labels, return_counts=True)
    if folds < 2:
        raise ValueError("cross-validation needs folds >= 2")
    if counts.min() < folds:
        small = classes[counts.argmin()]
        raise ValueError(f"class {small} has {counts.min()} samples, fewer than {folds} folds")
    rng = np.random.default_rng(seed)
    assignment = np.empty(labels.shape[0], dtype=np.int64)
    offset = 0
    for c in classes:
        idx = rng.permutation(np.flatnonzero(labels == c))
        assignment[idx] = (np.arange(idx.size) + offset) % folds
        offset += idx.size
    return assignment


def k_fold_cv(dataset: Dataset, model_cfg: MLPConfig, cfg: TrainConfig) -> list[FoldResult]:
    assignment = stratified_folds(dataset.labels, cfg.folds, cfg.seed)
    results = []
    for fold in range(cfg.folds):
        test_idx = np.flatnonzero(assignment == fold)
        train_idx = np.flatnonzero(assignment != fold)
        model = MLP(replace(model_cfg, seed=model_cfg.seed + fold))
        out = train(model, dataset.subset(train_idx), replace(cfg, seed=cfg.seed + fold))
        probs = predict_proba(out.model, dataset.features[test_idx])
        report = classification_report(probs, dataset.labels[test_idx])
        log.info("fold %d: auc=%.4f acc=%.4f", fold, report.auc, report.accuracy)
        results.append(FoldResult(fold, report, out.final_loss, out.trajectory, test_idx))
    return results
