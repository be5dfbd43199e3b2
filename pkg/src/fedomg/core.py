"""Flat-vector numerical primitives shared by every other module.

A parameter vector is a plain 1-D float64 ``numpy`` array; ``ParamVector``
is an alias, not a wrapper class. All arithmetic is 64-bit, single-threaded
and sequential (client sums accumulate left to right, no parallel
reductions), so repeated runs are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidInputError

ParamVector = np.ndarray


def as_param_vector(values) -> ParamVector:
    """Coerce to a 1-D float64 array and reject non-finite entries."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"parameter vector must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("parameter vector contains NaN or Inf")
    return arr


def dot(a: ParamVector, b: ParamVector) -> float:
    """Euclidean inner product of two equal-length vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"dot: shapes differ, {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


def norm(a: ParamVector) -> float:
    """Euclidean norm, sqrt(a . a)."""
    a = np.asarray(a, dtype=np.float64)
    return float(np.sqrt(np.dot(a, a)))


def weighted_sum(vectors, weights) -> ParamVector:
    """Componentwise sum_u w_u * v_u, accumulated in client order."""
    if len(vectors) != len(weights):
        raise DimensionError(
            f"weighted_sum: {len(vectors)} vectors but {len(weights)} weights"
        )
    if len(vectors) == 0:
        raise DimensionError("weighted_sum: empty input")
    first = np.asarray(vectors[0], dtype=np.float64)
    acc = np.zeros_like(first)
    for u, vec in enumerate(vectors):
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != first.shape:
            raise DimensionError(
                f"weighted_sum: vector {u} has shape {vec.shape}, expected {first.shape}"
            )
        acc += float(weights[u]) * vec
    return acc


@dataclass
class GradientSet:
    """One pseudo-gradient per participating client plus its sample count.

    ``gradients`` is stacked row-wise, one client per row; row order fixes
    the client order used everywhere downstream (weights, reports, CSV).
    """

    gradients: np.ndarray  # (num_clients, dim)
    sample_counts: np.ndarray  # (num_clients,) positive integers
    client_ids: tuple

    def __post_init__(self):
        self.gradients = np.asarray(self.gradients, dtype=np.float64)
        self.sample_counts = np.asarray(self.sample_counts, dtype=np.int64)
        self.client_ids = tuple(self.client_ids)
        if self.gradients.ndim != 2 or self.gradients.shape[0] == 0:
            raise DimensionError(
                f"gradients must stack to a nonempty 2-D array, got shape {self.gradients.shape}"
            )
        n = self.gradients.shape[0]
        if self.sample_counts.shape != (n,) or len(self.client_ids) != n:
            raise DimensionError(
                "gradients, sample_counts and client_ids must have equal length"
            )
        if not np.all(np.isfinite(self.gradients)):
            raise InvalidInputError("gradient set contains NaN or Inf")
        if np.any(self.sample_counts <= 0):
            raise InvalidInputError("sample counts must be positive")

    @classmethod
    def from_lists(cls, gradients, sample_counts=None, client_ids=None) -> "GradientSet":
        stacked = np.stack([np.asarray(g, dtype=np.float64) for g in gradients])
        if sample_counts is None:
            sample_counts = np.ones(stacked.shape[0], dtype=np.int64)
        if client_ids is None:
            client_ids = tuple(range(stacked.shape[0]))
        return cls(stacked, sample_counts, client_ids)

    @property
    def num_clients(self) -> int:
        return self.gradients.shape[0]

    @property
    def dim(self) -> int:
        return self.gradients.shape[1]
