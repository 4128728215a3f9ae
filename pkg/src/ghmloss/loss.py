"""Pair-likelihood metric loss, its geometric/probabilistic/hybrid variants, and the
multi-task objective with a cross-entropy classification branch.

All losses come with hand-derived gradients. Gradients through the mixture fit
hold the EM responsibilities fixed: means and stds are recomputed from the
embedding components with the closed-form M-step, and only that map is
differentiated. Pass the same ``responsibilities`` back in to evaluate the loss
on the identical surrogate (finite-difference checks rely on this).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from ghmloss.embedding import Batch, IndexSets, build_index_sets
from ghmloss.geometric import ProximityMatrix, cosine_matrix, cosine_matrix_backward
from ghmloss.probabilistic import EMSettings, fit_gmm_batch, pairwise_js, refit_from_responsibilities

PROB_EPS = 1e-12
SIGN_MODES = ("similarity", "literal_eq8")


class NonFiniteGradientError(FloatingPointError):
    pass


@dataclass(frozen=True)
class LossConfig:
    """Weights of the hybrid objective.

    ``lam`` weights the geometric branch against the probabilistic one and
    ``beta`` weights the metric branch against cross-entropy. In ``similarity``
    mode the probabilistic proximity enters the softmax as ``1 - S_p``; in
    ``literal_eq8`` mode it enters as ``S_p`` and its loss is subtracted.
    ``geometric_only`` skips the probabilistic branch entirely.
    """

    lam: float = 0.5
    beta: float = 1.0
    sign_mode: str = "similarity"
    gmm: EMSettings = field(default_factory=EMSettings)
    grid_size: int = 512
    geometric_only: bool = False

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if not self.beta >= 0.0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.sign_mode not in SIGN_MODES:
            raise ValueError(f"sign_mode must be one of {SIGN_MODES}, got {self.sign_mode!r}")
        if self.grid_size < 16:
            raise ValueError("grid_size must be >= 16")


@dataclass(frozen=True)
class LossBreakdown:
    geometric: float
    probabilistic: float
    hybrid: float
    cross_entropy: float
    total: float
    clamped: bool = False

    def to_dict(self) -> dict:
        return {
            "geometric": self.geometric,
            "probabilistic": self.probabilistic,
            "hybrid": self.hybrid,
            "cross_entropy": self.cross_entropy,
            "total": self.total,
        }


@dataclass(frozen=True)
class Gradients:
    d_embeddings: np.ndarray
    d_logits: np.ndarray


# ---------------------------------------------------------------------------
# Pair likelihood


def _values(S) -> np.ndarray:
    return S.values if isinstance(S, ProximityMatrix) else np.asarray(S, dtype=np.float64)


def pair_probabilities(S) -> np.ndarray:
    """Row-wise softmax over j != i; the diagonal of the result is 0."""
    s = _values(S)
    n = s.shape[0]
    if n < 2:
        raise ValueError("pair probabilities need at least two samples")
    masked = np.where(np.eye(n, dtype=bool), -np.inf, s)
    masked = masked - masked.max(axis=1, keepdims=True)
    e = np.exp(masked)
    return e / e.sum(axis=1, keepdims=True)


def pair_probability(S, i: int, j: int) -> float:
    if i == j:
        raise ValueError("pair probability is only defined for j != i")
    return float(pair_probabilities(S)[i, j])


def _metric_loss_and_grad(s: np.ndarray, sets: IndexSets):
    """Loss and dL/dS (entry [i, j] is the derivative w.r.t. row i's S_ij)."""
    p = pair_probabilities(s)
    pos, neg = sets.positive_mask, sets.negative_mask
    n_pos = pos.sum(axis=1).astype(np.float64)
    n_neg = neg.sum(axis=1).astype(np.float64)

    p_pos = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    q = 1.0 - p
    q_neg = np.clip(q, PROB_EPS, 1.0 - PROB_EPS)
    clamped = bool(np.any(pos & (p_pos != p)) or np.any(neg & (q_neg != q)))

    pos_terms = np.where(pos, np.log(p_pos), 0.0).sum(axis=1)
    neg_terms = np.where(neg, np.log(q_neg), 0.0).sum(axis=1)
    loss = -float(np.sum(n_neg * pos_terms + n_pos * neg_terms))

    # dL/d log p_ij and dL/d log(1-p_ij), zero where the clamp is active.
    c = np.zeros_like(p)
    c = np.where(pos & (p_pos == p), -n_neg[:, None], c)
    c = np.where(neg & (q_neg == q), n_pos[:, None] * p / q_neg, c)
    grad = c - p * c.sum(axis=1, keepdims=True)
    np.fill_diagonal(grad, 0.0)
    return loss, grad, clamped


def general_metric_loss(S, sets: IndexSets) -> float:
    """Negative log pair-likelihood with |V(i)| and |U(i)| set-size weights."""
    return _metric_loss_and_grad(_values(S), sets)[0]


# ---------------------------------------------------------------------------
# Cross-entropy


def _ce_and_grad(logits: np.ndarray, labels: np.ndarray):
    logits = np.asarray(logits, dtype=np.float64)
    n, c = logits.shape
    if c < 2:
        raise ValueError("cross-entropy needs at least two classes")
    lse = logsumexp(logits, axis=1)
    loss = float(np.mean(lse - logits[np.arange(n), labels]))
    grad = np.exp(logits - lse[:, None])
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n


def cross_entropy_loss(logits, labels) -> float:
    return _ce_and_grad(np.asarray(logits), np.asarray(labels))[0]


# ---------------------------------------------------------------------------
# Hybrid objective


@dataclass
class Evaluation:
    """Loss breakdown plus what was needed to produce it."""

    breakdown: LossBreakdown
    gradients: Gradients | None
    responsibilities: np.ndarray | None
    cosine: np.ndarray
    probabilistic: np.ndarray | None


def evaluate(
    batch: Batch,
    cfg: LossConfig,
    logits: np.ndarray | None = None,
    sets: IndexSets | None = None,
    responsibilities: np.ndarray | None = None,
    with_grad: bool = False,
) -> Evaluation:
    x = batch.embeddings
    sets = build_index_sets(batch) if sets is None else sets

    s_g = cosine_matrix(x)
    loss_g, dg, clamp_g = _metric_loss_and_grad(s_g, sets)

    s_p = None
    loss_p, dp, clamp_p = 0.0, None, False
    backward_p = None
    if not cfg.geometric_only:
        if responsibilities is None:
            fits = fit_gmm_batch(x, cfg.gmm)
            responsibilities = np.stack([f.responsibilities for f in fits])
        st = refit_from_responsibilities(x, responsibilities, cfg.gmm.sigma_floor)
        s_p, backward_p = pairwise_js(st, cfg.grid_size, with_grad=with_grad)
        fed = 1.0 - s_p if cfg.sign_mode == "similarity" else s_p
        loss_p, dp, clamp_p = _metric_loss_and_grad(fed, sets)

    sign_p = -1.0 if cfg.sign_mode == "literal_eq8" else 1.0
    hybrid = cfg.lam * loss_g + sign_p * (1.0 - cfg.lam) * loss_p

    if logits is not None:
        ce, d_logits = _ce_and_grad(logits, batch.labels)
    else:
        ce, d_logits = 0.0, None
    total = cfg.beta * hybrid + ce
    breakdown = LossBreakdown(loss_g, loss_p, hybrid, ce, total, clamped=clamp_g or clamp_p)

    gradients = None
    if with_grad:
        d_emb = cfg.beta * cfg.lam * cosine_matrix_backward(x, s_g, dg + dg.T)
        if backward_p is not None:
            # similarity mode feeds 1 - S_p, literal mode subtracts the branch.
            d_emb = d_emb + cfg.beta * (1.0 - cfg.lam) * -backward_p(dp + dp.T)
        if d_logits is None:
            d_logits = np.zeros((x.shape[0], 0))
        _check_finite(d_emb, "embedding")
        _check_finite(d_logits, "logit")
        gradients = Gradients(d_emb, d_logits)

    return Evaluation(breakdown, gradients, responsibilities, s_g, s_p)


def _check_finite(g: np.ndarray, what: str):
    bad = np.argwhere(~np.isfinite(g))
    if bad.size:
        raise NonFiniteGradientError(f"non-finite {what} gradient at index {tuple(bad[0].tolist())}")


def ghm_loss(batch: Batch, sets: IndexSets | None = None, cfg: LossConfig = LossConfig(), **kw) -> LossBreakdown:
    """Metric-branch losses only (cross-entropy reported as 0)."""
    return evaluate(batch, cfg, sets=sets, **kw).breakdown


def total_loss(batch: Batch, sets: IndexSets | None, logits, cfg: LossConfig = LossConfig(), **kw) -> LossBreakdown:
    return evaluate(batch, cfg, logits=logits, sets=sets, **kw).breakdown


def loss_gradients(batch: Batch, sets: IndexSets | None, logits, cfg: LossConfig = LossConfig(), **kw) -> Gradients:
    return evaluate(batch, cfg, logits=logits, sets=sets, with_grad=True, **kw).gradients
