"""Cosine proximity and pairwise proximity matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ghmloss.embedding import Batch, DegenerateEmbeddingError, Embedding


@dataclass(frozen=True)
class ProximityMatrix:
    """Symmetric N x N proximities; the diagonal is NaN when excluded."""

    values: np.ndarray
    kind: str = "geometric"
    diagonal_excluded: bool = True

    def __post_init__(self):
        if self.kind not in ("geometric", "probabilistic"):
            raise ValueError(f"unknown proximity kind {self.kind!r}")

    def __len__(self):
        return self.values.shape[0]


def _as_array(x) -> np.ndarray:
    return x.values if isinstance(x, Embedding) else np.asarray(x, dtype=np.float64)


def cosine_proximity(a, b) -> float:
    a, b = _as_array(a), _as_array(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateEmbeddingError("cosine proximity is undefined for a zero vector")
    # Summation order is symmetric in (a, b) so the result is exactly symmetric.
    s = float(np.dot(a / na, b / nb))
    return min(1.0, max(-1.0, s))


def proximity_matrix(batch: Batch, fn: Callable, kind: str = "geometric") -> ProximityMatrix:
    """Evaluate ``fn`` once per unordered pair and mirror it.

    Errors raised by ``fn`` are re-raised with the offending pair attached.
    """
    x = batch.embeddings if isinstance(batch, Batch) else np.asarray(batch, dtype=np.float64)
    n = x.shape[0]
    values = np.full((n, n), np.nan)
    for i in range(n):
        for j in range(i + 1, n):
            try:
                v = fn(x[i], x[j])
            except Exception as exc:
                raise type(exc)(f"proximity failed for pair ({i}, {j}): {exc}") from exc
            values[i, j] = values[j, i] = v
    return ProximityMatrix(values, kind=kind, diagonal_excluded=True)


def cosine_matrix(x: np.ndarray) -> np.ndarray:
    """Vectorized pairwise cosine proximities of the rows of ``x`` (diagonal kept)."""
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms == 0.0)[0])
        raise DegenerateEmbeddingError(f"embedding {bad} is the zero vector")
    unit = x / norms[:, None]
    s = unit @ unit.T
    s = 0.5 * (s + s.T)
    return np.clip(s, -1.0, 1.0)


def cosine_matrix_backward(x: np.ndarray, s: np.ndarray, grad_s: np.ndarray) -> np.ndarray:
    """Pull back dL/dS (symmetric pair gradient, zero diagonal) onto the rows of ``x``."""
    norms = np.linalg.norm(x, axis=1)
    unit = x / norms[:, None]
    g = grad_s.copy()
    np.fill_diagonal(g, 0.0)
    return (g @ unit - (g * s).sum(axis=1)[:, None] * unit) / norms[:, None]
