"""Probabilistic proximity between embeddings.

Each embedding's d components are treated as d scalar samples and summarized by
a 1-D Gaussian mixture fit with EM. Two mixtures are compared by discretizing
them on a shared grid and taking the Jensen-Shannon divergence, normalized by
ln 2 so that the result lies in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ghmloss.embedding import Embedding

LN2 = math.log(2.0)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
#: Half-width of the shared grid in units of the largest component std.
GRID_SPAN = 6.0
_TINY = np.finfo(np.float64).tiny


def logsumexp(a, axis=None, keepdims=False):
    a = np.asarray(a)
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return out if keepdims else np.squeeze(out, axis=axis)


class GridCoverageError(ValueError):
    """The grid does not cover any of the mixture's mass."""


@dataclass(frozen=True)
class EMSettings:
    K: int = 2
    max_iter: int = 100
    tol: float = 1e-6
    seed: int = 0
    sigma_floor: float = 1e-3

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if not self.sigma_floor > 0:
            raise ValueError("sigma_floor must be > 0")


@dataclass(frozen=True)
class GMMParams:
    """A K-component 1-D Gaussian mixture.

    ``responsibilities`` (d x K) and ``log_likelihood`` (one entry per EM
    iteration) are only set when the params come from :func:`fit_gmm`.
    """

    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    collapsed: bool = False
    responsibilities: np.ndarray | None = field(default=None, repr=False, compare=False)
    log_likelihood: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        mu = np.atleast_1d(np.asarray(self.means, dtype=np.float64))
        sd = np.atleast_1d(np.asarray(self.stds, dtype=np.float64))
        if not (w.shape == mu.shape == sd.shape) or w.ndim != 1:
            raise ValueError("weights, means and stds must be 1-D arrays of equal length")
        if np.any(sd <= 0):
            raise ValueError("component stds must be positive")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("mixture weights must be nonnegative and sum to 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "stds", sd)

    @property
    def K(self) -> int:
        return self.weights.shape[0]

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "collapsed": self.collapsed,
        }


@dataclass(frozen=True)
class DensityGrid:
    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        m = np.asarray(self.masses, dtype=np.float64)
        if pts.shape != m.shape or pts.ndim != 1:
            raise ValueError("points and masses must be 1-D arrays of equal length")
        if np.any(m < 0) or abs(m.sum() - 1.0) > 1e-9:
            raise ValueError("masses must be nonnegative and sum to 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", m)

    @property
    def spacing(self) -> float:
        return float(self.points[1] - self.points[0]) if self.points.size > 1 else 0.0

    def __len__(self):
        return self.points.shape[0]


# ---------------------------------------------------------------------------
# EM fitting


def _log_normal(x, mu, sigma):
    return -np.log(sigma) - _HALF_LOG_2PI - 0.5 * ((x - mu) / sigma) ** 2


def _kmeanspp_centers(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [x[rng.integers(x.shape[0])]]
    for _ in range(1, k):
        d2 = np.min((x[:, None] - np.asarray(centers)[None, :]) ** 2, axis=1)
        total = d2.sum()
        if total > 0:
            idx = rng.choice(x.shape[0], p=d2 / total)
        else:
            idx = rng.integers(x.shape[0])
        centers.append(x[idx])
    return np.sort(np.asarray(centers))


def mstep(x: np.ndarray, resp: np.ndarray, sigma_floor: float):
    """Closed-form M-step for rows of ``x`` (N x d) and responsibilities (N x d x K).

    Returns weights, means, stds (each N x K) and a boolean N x K mask of
    components whose std was raised to the floor.
    """
    w, mu, sd, fl = _mstep_kd(x, np.swapaxes(resp, 1, 2), sigma_floor)
    return w, mu, sd, fl


def _mstep_kd(x, resp, sigma_floor):
    # resp is N x K x d here; reductions run over the contiguous last axis.
    nk = np.maximum(resp.sum(axis=2), 1e-300)
    weights = nk / x.shape[1]
    means = np.sum(resp * x[:, None, :], axis=2) / nk
    var = np.sum(resp * (x[:, None, :] - means[:, :, None]) ** 2, axis=2) / nk
    std = np.sqrt(var)
    floored = std < sigma_floor
    return weights, means, np.where(floored, sigma_floor, std), floored


def _estep_kd(x, weights, means, stds):
    with np.errstate(divide="ignore"):
        const = np.log(weights) - np.log(stds) - _HALF_LOG_2PI
    z = (x[:, None, :] - means[:, :, None]) / stds[:, :, None]
    logp = const[:, :, None] - 0.5 * z * z
    top = logp.max(axis=1)
    lse = top + np.log(np.sum(np.exp(logp - top[:, None, :]), axis=1))
    return np.exp(logp - lse[:, None, :]), lse.sum(axis=1)


def fit_gmm_batch(x: np.ndarray, settings: EMSettings = EMSettings()) -> list[GMMParams]:
    """Fit one mixture per row of ``x``; every row is seeded identically."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    n, d = x.shape
    k = settings.K
    if d < k:
        raise ValueError(f"cannot fit K={k} components to d={d} values")

    means = np.empty((n, k))
    for i in range(n):
        means[i] = _kmeanspp_centers(x[i], k, np.random.default_rng(settings.seed))
    stds = np.repeat(np.maximum(x.std(axis=1), settings.sigma_floor)[:, None], k, axis=1)
    weights = np.full((n, k), 1.0 / k)
    floored = np.zeros((n, k), dtype=bool)

    history = [[] for _ in range(n)]
    resp = np.empty((n, k, d))
    active = np.ones(n, dtype=bool)
    prev = np.full(n, -np.inf)
    idx = np.arange(n)
    xa = x
    for _ in range(settings.max_iter):
        r, ll = _estep_kd(xa, weights[idx], means[idx], stds[idx])
        resp[idx] = r
        for j, i in enumerate(idx):
            history[i].append(float(ll[j]))
        done = np.abs(ll - prev[idx]) < settings.tol
        prev[idx] = ll
        w, mu, sd, fl = _mstep_kd(xa, r, settings.sigma_floor)
        weights[idx], means[idx], stds[idx], floored[idx] = w, mu, sd, fl
        if done.any():
            active[idx[done]] = False
            idx = np.flatnonzero(active)
            xa = x[idx]
            if idx.size == 0:
                break

    # The returned params are exactly the M-step of the returned responsibilities,
    # which is what the frozen-responsibility gradient path re-derives.
    _, final_ll = _estep_kd(x, weights, means, stds)
    resp = np.ascontiguousarray(np.swapaxes(resp, 1, 2))
    out = []
    for i in range(n):
        out.append(
            GMMParams(
                weights[i] / weights[i].sum(),
                means[i],
                stds[i],
                collapsed=bool(floored[i].any()),
                responsibilities=resp[i],
                log_likelihood=tuple(history[i] + [float(final_ll[i])]),
            )
        )
    return out


def fit_gmm(e, settings: EMSettings = EMSettings()) -> GMMParams:
    """Fit a 1-D Gaussian mixture to the components of one embedding."""
    values = e.values if isinstance(e, Embedding) else np.asarray(e, dtype=np.float64)
    return fit_gmm_batch(values[None, :], settings)[0]


# ---------------------------------------------------------------------------
# Densities and grids


def gmm_log_density(p: GMMParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore"):
        logp = np.log(p.weights) + _log_normal(x[..., None], p.means, p.stds)
    return logsumexp(logp, axis=-1)


def gmm_density(p: GMMParams, x):
    """Mixture density at ``x`` (scalar or array)."""
    out = np.exp(gmm_log_density(p, x))
    return float(out) if np.ndim(out) == 0 else out


def grid_points(lo: float, hi: float, size: int) -> np.ndarray:
    return lo + (hi - lo) * np.linspace(0.0, 1.0, size)


def discretize(p: GMMParams, lo: float, hi: float, G: int = 512) -> DensityGrid:
    if not lo < hi:
        raise ValueError(f"grid bounds must satisfy lo < hi, got [{lo}, {hi}]")
    if G < 16:
        raise ValueError(f"grid size must be >= 16, got {G}")
    points = grid_points(lo, hi, G)
    logd = gmm_log_density(p, points)
    if not np.any(np.exp(logd) > 0):
        raise GridCoverageError(f"mixture density underflows everywhere on [{lo}, {hi}]")
    return DensityGrid(points, np.exp(logd - logsumexp(logd)))


def shared_bounds(*params: GMMParams, span: float = GRID_SPAN) -> tuple[float, float]:
    mu = np.concatenate([p.means for p in params])
    sd = max(float(p.stds.max()) for p in params)
    return float(mu.min() - span * sd), float(mu.max() + span * sd)


# ---------------------------------------------------------------------------
# Divergences (all in nats unless normalized)


def _masses(g) -> np.ndarray:
    return g.masses if isinstance(g, DensityGrid) else np.asarray(g, dtype=np.float64)


def _xlogy_ratio(p, q):
    """p * ln(p / q) with the 0 ln 0 = 0 convention.

    Subnormal p is treated as zero: halving it in a mixture can round to 0.
    """
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return np.where(p >= _TINY, p * np.log(p / q), 0.0)


def entropy(g) -> float:
    p = _masses(g)
    with np.errstate(divide="ignore", invalid="ignore"):
        return float(-np.sum(np.where(p > 0, p * np.log(p), 0.0)))


def _check_same_grid(p, q):
    if isinstance(p, DensityGrid) and isinstance(q, DensityGrid):
        if p.points.shape != q.points.shape or not np.array_equal(p.points, q.points):
            raise ValueError("density grids are defined on different points")
    elif np.shape(_masses(p)) != np.shape(_masses(q)):
        raise ValueError("mass vectors have different lengths")


def kl_divergence(p, q) -> float:
    """KL(p || q) over bins where p > 0; ``inf`` if q vanishes where p does not."""
    _check_same_grid(p, q)
    pm, qm = _masses(p), _masses(q)
    if np.any((pm > 0) & (qm == 0)):
        return math.inf
    return float(max(0.0, np.sum(_xlogy_ratio(pm, qm))))


def js_divergence(p, q) -> float:
    """Normalized Jensen-Shannon divergence in [0, 1] from the two KL terms."""
    _check_same_grid(p, q)
    pm, qm = _masses(p), _masses(q)
    mid = 0.5 * (pm + qm)
    js = 0.5 * (np.sum(_xlogy_ratio(pm, mid)) + np.sum(_xlogy_ratio(qm, mid)))
    return float(min(1.0, max(0.0, js / LN2)))


def js_via_entropy(p, q) -> float:
    """Same quantity as :func:`js_divergence`, via H(mid) - (H(p) + H(q)) / 2."""
    _check_same_grid(p, q)
    pm, qm = _masses(p), _masses(q)
    js = entropy(0.5 * (pm + qm)) - 0.5 * (entropy(pm) + entropy(qm))
    return float(js / LN2)


def js_proximity(a, b, settings: EMSettings = EMSettings(), grid_size: int = 512) -> float:
    """Probabilistic proximity of two embeddings: 0 for identical, 1 for disjoint."""
    pa = a if isinstance(a, GMMParams) else fit_gmm(a, settings)
    pb = b if isinstance(b, GMMParams) else fit_gmm(b, settings)
    lo, hi = shared_bounds(pa, pb)
    return js_divergence(discretize(pa, lo, hi, grid_size), discretize(pb, lo, hi, grid_size))


def gaussian_kl_closed_form(mu_p: float, var_p: float, mu_q: float, var_q: float) -> float:
    """KL(N(mu_p, var_p) || N(mu_q, var_q)) in nats."""
    if var_p <= 0 or var_q <= 0:
        raise ValueError("variances must be positive")
    return 0.5 * math.log(var_q / var_p) + (var_p + (mu_p - mu_q) ** 2) / (2.0 * var_q) - 0.5


# ---------------------------------------------------------------------------
# Batched pairwise proximities with gradients


@dataclass
class _Stacked:
    """Mixture parameters for N embeddings, each N x K, plus what the backward pass needs."""

    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    floored: np.ndarray
    resp: np.ndarray
    x: np.ndarray


def refit_from_responsibilities(x: np.ndarray, resp: np.ndarray, sigma_floor: float) -> _Stacked:
    w, mu, sd, fl = mstep(x, resp, sigma_floor)
    return _Stacked(w, mu, sd, fl, resp, x)


def _pair_forward(st: _Stacked, ia, ib, grid_size):
    """Grid masses for every pair (ia[p], ib[p]) on that pair's shared grid."""
    mu = np.concatenate([st.means[ia], st.means[ib]], axis=1)
    sd = np.concatenate([st.stds[ia], st.stds[ib]], axis=1)
    lo = mu.min(axis=1) - GRID_SPAN * sd.max(axis=1)
    hi = mu.max(axis=1) + GRID_SPAN * sd.max(axis=1)
    t = np.linspace(0.0, 1.0, grid_size)
    pts = lo[:, None] + (hi - lo)[:, None] * t[None, :]

    def side(idx):
        with np.errstate(divide="ignore"):
            logc = np.log(st.weights[idx])[:, None, :] + _log_normal(
                pts[:, :, None], st.means[idx][:, None, :], st.stds[idx][:, None, :]
            )
        logd = logsumexp(logc, axis=2)
        # Grid points where the density underflows carry no mass and no gradient.
        with np.errstate(invalid="ignore"):
            gamma = np.nan_to_num(np.exp(logc - logd[:, :, None]), nan=0.0)
        masses = np.exp(logd - logsumexp(logd, axis=1, keepdims=True))
        return masses, gamma

    pa, ga = side(ia)
    pb, gb = side(ib)
    return dict(mu=mu, sd=sd, lo=lo, hi=hi, t=t, pts=pts, pa=pa, pb=pb, ga=ga, gb=gb)


def pairwise_js(st: _Stacked, grid_size: int = 512, with_grad: bool = False):
    """Normalized JS proximity matrix (zero diagonal) and optional backward closure.

    The backward closure maps a symmetric N x N matrix of dL/dS_p (one entry per
    unordered pair, mirrored) to dL/dx for the rows of ``st.x`` with the
    responsibilities held fixed.
    """
    n = st.means.shape[0]
    ia, ib = np.triu_indices(n, k=1)
    fw = _pair_forward(st, ia, ib, grid_size)
    pa, pb = fw["pa"], fw["pb"]
    mid = 0.5 * (pa + pb)
    ua = 0.5 * _xlogy_ratio(pa, mid)
    ub = 0.5 * _xlogy_ratio(pb, mid)
    raw = (ua.sum(axis=1) + ub.sum(axis=1)) / LN2
    vals = np.clip(raw, 0.0, 1.0)
    sp = np.zeros((n, n))
    sp[ia, ib] = vals
    sp[ib, ia] = vals
    if not with_grad:
        return sp, None

    def backward(grad_sp: np.ndarray) -> np.ndarray:
        # Clipped pairs have zero slope.
        g = np.where((raw >= 0.0) & (raw <= 1.0), grad_sp[ia, ib], 0.0) / LN2
        k = st.means.shape[1]
        # d JS / d log-density at each grid point, after the softmax normalization.
        va = ua - pa * ua.sum(axis=1, keepdims=True)
        vb = ub - pb * ub.sum(axis=1, keepdims=True)
        pts = fw["pts"]

        def side_grads(v, gamma, idx):
            mu = st.means[idx][:, None, :]
            sd = st.stds[idx][:, None, :]
            z = (pts[:, :, None] - mu) / sd
            c = v[:, :, None] * gamma
            d_mu = np.sum(c * z / sd, axis=1)
            d_sd = np.sum(c * (z * z - 1.0) / sd, axis=1)
            d_x = -np.sum(c * z / sd, axis=2)
            return d_mu, d_sd, d_x

        dmu_a, dsd_a, dx_a = side_grads(va, fw["ga"], ia)
        dmu_b, dsd_b, dx_b = side_grads(vb, fw["gb"], ib)
        d_pts = dx_a + dx_b
        t = fw["t"]
        d_lo = np.sum(d_pts * (1.0 - t)[None, :], axis=1)
        d_hi = np.sum(d_pts * t[None, :], axis=1)

        rows = np.arange(ia.shape[0])
        mu_all, sd_all = fw["mu"], fw["sd"]
        d_mu_all = np.zeros_like(mu_all)
        d_sd_all = np.zeros_like(sd_all)
        d_mu_all[rows, mu_all.argmin(axis=1)] += d_lo
        d_mu_all[rows, mu_all.argmax(axis=1)] += d_hi
        d_sd_all[rows, sd_all.argmax(axis=1)] += GRID_SPAN * (d_hi - d_lo)
        dmu_a += d_mu_all[:, :k]
        dmu_b += d_mu_all[:, k:]
        dsd_a += d_sd_all[:, :k]
        dsd_b += d_sd_all[:, k:]

        grad_mu = np.zeros((n, k))
        grad_sd = np.zeros((n, k))
        np.add.at(grad_mu, ia, g[:, None] * dmu_a)
        np.add.at(grad_mu, ib, g[:, None] * dmu_b)
        np.add.at(grad_sd, ia, g[:, None] * dsd_a)
        np.add.at(grad_sd, ib, g[:, None] * dsd_b)
        return params_backward(st, grad_mu, grad_sd)

    return sp, backward


def params_backward(st: _Stacked, grad_mu: np.ndarray, grad_sd: np.ndarray) -> np.ndarray:
    """Chain dL/d(means, stds) through the frozen-responsibility M-step to dL/dx."""
    nk = np.maximum(st.resp.sum(axis=1), 1e-300)
    gs = np.where(st.floored, 0.0, grad_sd / st.stds)
    centered = st.x[:, :, None] - st.means[:, None, :]
    coef = (grad_mu / nk)[:, None, :] + (gs / nk)[:, None, :] * centered
    return np.sum(st.resp * coef, axis=2)
