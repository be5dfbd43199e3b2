"""Projection onto the probability simplex and a projected-gradient
minimizer with heavy-ball momentum, used by the server-side solve."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backends
from .errors import DimensionError, InvalidInputError, NumericalError

SIMPLEX_TOL = 1e-9


@dataclass
class InnerOptConfig:
    """Settings of the inner simplex solve.

    Defaults follow the reported schedule for the matching solve
    (step 25, 21 iterations, momentum 0.5). The step is aggressive; the
    solver returns the best iterate seen, not the last, so overshooting
    cannot worsen the reported solution.
    """

    learning_rate: float = 25.0
    iterations: int = 21
    momentum: float = 0.5

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidInputError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.iterations < 1:
            raise InvalidInputError(f"iterations must be >= 1, got {self.iterations}")
        if not 0.0 <= self.momentum < 1.0:
            raise InvalidInputError(f"momentum must be in [0, 1), got {self.momentum}")


def validate_simplex_weights(w, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Check nonnegativity and unit sum; returns the array unchanged."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] == 0:
        raise DimensionError(f"simplex weights must be a nonempty vector, got shape {w.shape}")
    if np.any(w < -tol):
        raise InvalidInputError(f"simplex weights have negative entries: min {w.min()}")
    if abs(float(w.sum()) - 1.0) > tol:
        raise InvalidInputError(f"simplex weights sum to {w.sum()}, expected 1")
    return w


def project_to_simplex(v) -> np.ndarray:
    """Euclidean projection onto {w : w >= 0, sum(w) = 1}.

    Sort-based algorithm: sort descending, take the largest rho with
    u_rho - (sum_{i<=rho} u_i - 1)/rho > 0 and threshold at
    tau = (sum_{i<=rho} u_i - 1)/rho. Ties among equal entries cannot
    change tau, so the output is deterministic regardless of sort order.
    """
    arr = np.ascontiguousarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise DimensionError(f"projection input must be a nonempty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("projection input contains NaN or Inf")
    return backends.project_simplex(arr)


def minimize_on_simplex(objective, gradient, init, cfg: InnerOptConfig) -> np.ndarray:
    """Projected gradient descent with momentum over the simplex.

    Iterates gamma <- project(gamma - lr * (momentum * m + grad)) with the
    heavy-ball buffer m <- momentum * m + grad, and returns the iterate
    with the lowest observed objective value (the init counts as observed).
    ``objective`` and ``gradient`` receive the raw weight array.
    """
    gamma = validate_simplex_weights(np.array(init, dtype=np.float64, copy=True))
    m = np.zeros_like(gamma)

    f = float(objective(gamma))
    if not np.isfinite(f):
        raise NumericalError("non-finite objective at iteration 0")
    best_gamma = gamma.copy()
    best_f = f

    for k in range(cfg.iterations):
        grad = np.asarray(gradient(gamma), dtype=np.float64)
        if grad.shape != gamma.shape:
            raise DimensionError(
                f"gradient returned shape {grad.shape}, expected {gamma.shape}"
            )
        if not np.all(np.isfinite(grad)):
            raise NumericalError(f"non-finite gradient at iteration {k}")
        m = cfg.momentum * m + grad
        gamma = backends.project_simplex(gamma - cfg.learning_rate * m)
        f = float(objective(gamma))
        if not np.isfinite(f):
            raise NumericalError(f"non-finite objective at iteration {k}")
        if f < best_f:
            best_f = f
            best_gamma = gamma.copy()
    return best_gamma
