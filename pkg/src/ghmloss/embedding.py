"""Embedding vectors, batches and per-anchor positive/negative index sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateEmbeddingError(ValueError):
    """Raised when an embedding has no direction (all-zero vector)."""


@dataclass(frozen=True)
class Embedding:
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.shape[0] < 2:
            raise ValueError(f"embedding must be a 1-D vector with d >= 2, got shape {values.shape}")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def l2_normalize(e: Embedding | np.ndarray) -> Embedding:
    """Scale an embedding to unit Euclidean norm.

    Raises DegenerateEmbeddingError for the zero vector.
    """
    values = e.values if isinstance(e, Embedding) else np.asarray(e, dtype=np.float64)
    norm = np.linalg.norm(values)
    if not np.isfinite(norm) or norm == 0.0:
        raise DegenerateEmbeddingError("cannot normalize a zero (or non-finite) embedding")
    return Embedding(values / norm, normalized=True)


@dataclass(frozen=True)
class Batch:
    """N embeddings (rows of an N x d array) with their integer labels."""

    embeddings: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        emb = np.asarray(self.embeddings, dtype=np.float64)
        labels = np.asarray(self.labels)
        if emb.ndim != 2:
            raise ValueError("embeddings must be an N x d array")
        if emb.shape[0] < 2:
            raise ValueError(f"a batch needs N >= 2 samples, got {emb.shape[0]}")
        if emb.shape[1] < 2:
            raise ValueError(f"embedding dimension must be >= 2, got {emb.shape[1]}")
        if labels.shape != (emb.shape[0],):
            raise ValueError("labels must have one entry per embedding")
        if labels.size and (not np.issubdtype(labels.dtype, np.integer) or labels.min() < 0):
            raise ValueError("labels must be nonnegative integers")
        object.__setattr__(self, "embeddings", emb)
        object.__setattr__(self, "labels", labels.astype(np.int64))

    @classmethod
    def from_embeddings(cls, embeddings, labels) -> Batch:
        rows = [e.values if isinstance(e, Embedding) else np.asarray(e, dtype=np.float64) for e in embeddings]
        dims = {r.shape for r in rows}
        if len(dims) != 1:
            raise ValueError(f"embeddings have mixed dimensions: {sorted(dims)}")
        return cls(np.stack(rows), np.asarray(labels))

    def __len__(self) -> int:
        return self.embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    @property
    def indices(self) -> range:
        return range(len(self))

    def __getitem__(self, i) -> Embedding:
        return Embedding(self.embeddings[i])


@dataclass(frozen=True)
class IndexSets:
    """Boolean N x N masks; row i marks U(i) (same label) or V(i) (other label)."""

    positive_mask: np.ndarray
    negative_mask: np.ndarray

    def positives(self, i: int) -> frozenset:
        return frozenset(np.flatnonzero(self.positive_mask[i]).tolist())

    def negatives(self, i: int) -> frozenset:
        return frozenset(np.flatnonzero(self.negative_mask[i]).tolist())

    @property
    def n_positives(self) -> np.ndarray:
        return self.positive_mask.sum(axis=1)

    @property
    def n_negatives(self) -> np.ndarray:
        return self.negative_mask.sum(axis=1)


def build_index_sets(batch: Batch | np.ndarray) -> IndexSets:
    labels = batch.labels if isinstance(batch, Batch) else np.asarray(batch)
    same = labels[:, None] == labels[None, :]
    off_diag = ~np.eye(labels.shape[0], dtype=bool)
    pos = same & off_diag
    neg = ~same
    pos.flags.writeable = False
    neg.flags.writeable = False
    return IndexSets(pos, neg)
