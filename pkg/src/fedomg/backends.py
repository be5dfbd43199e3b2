"""Backend selection for the hot kernels: simplex projection and the
Gram-form matching solve.

Two interchangeable implementations exist: the compiled Cython extension
(``fedomg._kernels``) and the pure-NumPy fallback below. The extension is
preferred when importable; set ``FEDOMG_BACKEND=pure`` or
``FEDOMG_BACKEND=ext`` to force one. Both run the identical algorithm;
results agree to floating-point reassociation noise (~1e-12 relative).
"""

from __future__ import annotations

import os

import numpy as np

from .errors import NumericalError

try:
    from . import _kernels as _ext
except ImportError:
    _ext = None

_DEGENERATE_NORM = 1e-12


def _project_simplex_pure(v: np.ndarray) -> np.ndarray:
    # Sort-based Euclidean projection: sort descending, find the largest
    # rho with u_rho - (cumsum_rho - 1)/rho > 0, threshold at that point.
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    ranks = np.arange(1, v.shape[0] + 1, dtype=np.float64)
    cand = (css - 1.0) / ranks
    rho = np.nonzero(u - cand > 0.0)[0][-1]
    return np.maximum(v - cand[rho], 0.0)


def _solve_gram_pure(G, b, c, lr, iterations, momentum):
    """Projected gradient descent with heavy-ball momentum on the simplex.

    Minimizes F(gamma) = gamma.b + c*sqrt(gamma'G gamma) from uniform init
    and returns (best-so-far gamma, best objective value).
    """
    n = b.shape[0]
    gamma = np.full(n, 1.0 / n)
    m = np.zeros(n)

    t = G @ gamma
    quad = float(gamma @ t)
    nrm = np.sqrt(max(quad, 0.0))
    f = float(gamma @ b) + c * nrm
    if not np.isfinite(f):
        raise NumericalError("non-finite objective at iteration 0")
    best_gamma = gamma.copy()
    best_f = f

    for k in range(iterations):
        if nrm > _DEGENERATE_NORM:
            coef = c / nrm
            grad = b + coef * t
        else:
            grad = b.copy()
        if not np.all(np.isfinite(grad)):
            raise NumericalError(f"non-finite gradient at iteration {k}")
        m = momentum * m + grad
        gamma = _project_simplex_pure(gamma - lr * m)
        t = G @ gamma
        quad = float(gamma @ t)
        nrm = np.sqrt(max(quad, 0.0))
        f = float(gamma @ b) + c * nrm
        if not np.isfinite(f):
            raise NumericalError(f"non-finite objective at iteration {k}")
        if f < best_f:
            best_f = f
            best_gamma = gamma.copy()
    return best_gamma, best_f


def _project_simplex_ext(v: np.ndarray) -> np.ndarray:
    out = np.empty_like(v)
    _ext.project_simplex(v, out)
    return out


def _solve_gram_ext(G, b, c, lr, iterations, momentum):
    gamma = np.empty_like(b)
    best_f, nan_iter = _ext.solve_gram(G, b, c, lr, iterations, momentum, gamma)
    if nan_iter >= 0:
        raise NumericalError(f"non-finite objective at iteration {nan_iter}")
    return gamma, best_f


def _select() -> str:
    requested = os.environ.get("FEDOMG_BACKEND", "auto")
    if requested not in ("auto", "ext", "pure"):
        raise ValueError(f"FEDOMG_BACKEND must be auto, ext or pure, got {requested!r}")
    if requested == "ext" and _ext is None:
        raise ImportError("FEDOMG_BACKEND=ext but the fedomg._kernels extension is not built")
    if requested in ("auto", "ext") and _ext is not None:
        return "ext"
    return "pure"


_ACTIVE = _select()


def backend_name() -> str:
    """Name of the backend selected at import: 'ext' or 'pure'."""
    return _ACTIVE


def extension_available() -> bool:
    return _ext is not None


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a contiguous float64 vector onto the simplex."""
    if _ACTIVE == "ext":
        return _project_simplex_ext(v)
    return _project_simplex_pure(v)


def solve_gram(G, b, c, lr, iterations, momentum):
    """Run the simplex solve on Gram-form inputs with the active backend."""
    if _ACTIVE == "ext":
        return _solve_gram_ext(G, b, c, lr, iterations, momentum)
    return _solve_gram_pure(G, b, c, lr, iterations, momentum)


def get_backend(name: str):
    """Return (project_simplex, solve_gram) for an explicit backend name.

    Used by the parity tests and the benchmark; raises if the extension is
    requested but missing.
    """
    if name == "pure":
        return _project_simplex_pure, _solve_gram_pure
    if name == "ext":
        if _ext is None:
            raise ImportError("fedomg._kernels extension is not built")
        return _project_simplex_ext, _solve_gram_ext
    raise ValueError(f"unknown backend {name!r}")
