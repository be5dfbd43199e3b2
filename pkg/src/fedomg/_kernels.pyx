# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: simplex projection and the Gram-form matching
solve. Mirrors the pure-NumPy algorithms in fedomg.backends exactly
(same iteration, same degenerate-norm threshold)."""

from libc.math cimport isfinite, sqrt
from libc.stdlib cimport free, malloc, qsort

cdef double DEGENERATE_NORM = 1e-12


cdef int _cmp_desc(const void *pa, const void *pb) noexcept nogil:
    cdef double a = (<const double *> pa)[0]
    cdef double b = (<const double *> pb)[0]
    if a < b:
        return 1
    if a > b:
        return -1
    return 0


cdef int _project(const double *v, double *out, double *work, Py_ssize_t n) noexcept nogil:
    # Sort descending, find the largest rho with u_rho - (cumsum - 1)/rho > 0,
    # then clip at that threshold. Ties cannot change the threshold value.
    cdef Py_ssize_t i
    cdef double css = 0.0
    cdef double tau = 0.0
    cdef double cand
    for i in range(n):
        work[i] = v[i]
    qsort(work, n, sizeof(double), &_cmp_desc)
    for i in range(n):
        css += work[i]
        cand = (css - 1.0) / (i + 1)
        if work[i] - cand > 0.0:
            tau = cand
    for i in range(n):
        out[i] = v[i] - tau
        if out[i] < 0.0:
            out[i] = 0.0
    return 0


def project_simplex(const double[::1] v, double[::1] out):
    """Euclidean projection onto the probability simplex, into ``out``."""
    cdef Py_ssize_t n = v.shape[0]
    if out.shape[0] != n:
        raise ValueError("output buffer has wrong length")
    cdef double *work = <double *> malloc(n * sizeof(double))
    if work == NULL:
        raise MemoryError()
    try:
        _project(&v[0], &out[0], work, n)
    finally:
        free(work)


def solve_gram(const double[:, ::1] G, const double[::1] b, double c,
               double lr, int iterations, double momentum, double[::1] gamma_out):
    """Projected gradient descent with heavy-ball momentum on the simplex.

    Minimizes F(gamma) = gamma.b + c*sqrt(gamma'G gamma) from uniform init.
    Writes the best-so-far gamma into ``gamma_out`` and returns
    (best objective, nan_iteration); nan_iteration is -1 on success and the
    failing iteration index when a non-finite value appears.
    """
    cdef Py_ssize_t n = b.shape[0]
    if G.shape[0] != n or G.shape[1] != n or gamma_out.shape[0] != n:
        raise ValueError("Gram matrix, linear term and output must agree in size")
    cdef double *buf = <double *> malloc(6 * n * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double *gamma = buf
    cdef double *m = buf + n
    cdef double *t = buf + 2 * n
    cdef double *y = buf + 3 * n
    cdef double *best = buf + 4 * n
    cdef double *work = buf + 5 * n

    cdef Py_ssize_t i, j
    cdef int k
    cdef double quad, nrm, f, lin, coef, grad_i
    cdef double best_f
    cdef int nan_iter = -1

    with nogil:
        for i in range(n):
            gamma[i] = 1.0 / n
            m[i] = 0.0

        # objective at the init (the init counts as an observed iterate)
        quad = 0.0
        lin = 0.0
        for i in range(n):
            t[i] = 0.0
            for j in range(n):
                t[i] += G[i, j] * gamma[j]
            quad += gamma[i] * t[i]
            lin += gamma[i] * b[i]
        if quad < 0.0:
            quad = 0.0
        nrm = sqrt(quad)
        f = lin + c * nrm
        best_f = f
        for i in range(n):
            best[i] = gamma[i]
        if not isfinite(f):
            nan_iter = 0

        if nan_iter < 0:
            for k in range(iterations):
                if nrm > DEGENERATE_NORM:
                    coef = c / nrm
                else:
                    coef = 0.0
                for i in range(n):
                    grad_i = b[i] + coef * t[i]
                    if not isfinite(grad_i):
                        nan_iter = k
                        break
                    m[i] = momentum * m[i] + grad_i
                    y[i] = gamma[i] - lr * m[i]
                if nan_iter >= 0:
                    break
                _project(y, gamma, work, n)
                quad = 0.0
                lin = 0.0
                for i in range(n):
                    t[i] = 0.0
                    for j in range(n):
                        t[i] += G[i, j] * gamma[j]
                    quad += gamma[i] * t[i]
                    lin += gamma[i] * b[i]
                if quad < 0.0:
                    quad = 0.0
                nrm = sqrt(quad)
                f = lin + c * nrm
                if not isfinite(f):
                    nan_iter = k
                    break
                if f < best_f:
                    best_f = f
                    for i in range(n):
                        best[i] = gamma[i]

        for i in range(n):
            gamma_out[i] = best[i]

    free(buf)
    return best_f, nan_iter
