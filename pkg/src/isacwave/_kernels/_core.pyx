# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the hot kernels.

Same algorithms as ``_fallback``: series / continued-fraction split for the
regularized incomplete gamma, and tight scalar loops for the batched
Hermitian quadratic forms.
"""

from libc.math cimport exp, fabs, lgamma, log

import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "compiled"

DEF EPS = 1e-15
DEF MAX_ITER = 500
DEF TINY = 1e-300


cdef double _series_p(double q, double x) nogil:
    cdef double ap = q
    cdef double total = 1.0 / q
    cdef double term = total
    cdef int i
    for i in range(MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if fabs(term) < fabs(total) * EPS:
            break
    return total * exp(-x + q * log(x) - lgamma(q))


cdef double _contfrac_q(double q, double x) nogil:
    cdef double b = x + 1.0 - q
    cdef double c = 1.0 / TINY
    cdef double d = 1.0 / b
    cdef double h = d
    cdef double an, delta
    cdef int i
    for i in range(1, MAX_ITER + 1):
        an = -i * (i - q)
        b += 2.0
        d = an * d + b
        if fabs(d) < TINY:
            d = TINY
        c = b + an / c
        if fabs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < EPS:
            break
    return h * exp(-x + q * log(x) - lgamma(q))


cdef double _reg_lower(double q, double x) nogil:
    if x <= 0.0:
        return 0.0
    if x < q + 1.0:
        return _series_p(q, x)
    return 1.0 - _contfrac_q(q, x)


cdef double _reg_upper(double q, double x) nogil:
    if x <= 0.0:
        return 1.0
    if x < q + 1.0:
        return 1.0 - _series_p(q, x)
    return _contfrac_q(q, x)


def reg_lower_gamma(double q, double p):
    """Scalar regularized lower incomplete gamma P(q, p)."""
    if q <= 0.0:
        raise ValueError("gamma shape parameter must be positive")
    if p < 0.0:
        raise ValueError("gamma argument must be nonnegative")
    return _reg_lower(q, p)


def reg_upper_gamma(double q, double p):
    """Scalar regularized upper incomplete gamma Q(q, p)."""
    if q <= 0.0:
        raise ValueError("gamma shape parameter must be positive")
    if p < 0.0:
        raise ValueError("gamma argument must be nonnegative")
    return _reg_upper(q, p)


def reg_lower_gamma_array(double q, p):
    """Regularized lower incomplete gamma P(q, p) for an array of p >= 0."""
    if q <= 0.0:
        raise ValueError("gamma shape parameter must be positive")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] arr = np.ascontiguousarray(p, dtype=np.float64)
    cdef Py_ssize_t n = arr.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] xv = arr
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    for i in range(n):
        if xv[i] < 0.0:
            raise ValueError("gamma argument must be nonnegative")
    with nogil:
        for i in range(n):
            ov[i] = _reg_lower(q, xv[i])
    return out


def reg_upper_gamma_array(double q, p):
    """Regularized upper incomplete gamma Q(q, p) for an array of p >= 0."""
    if q <= 0.0:
        raise ValueError("gamma shape parameter must be positive")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] arr = np.ascontiguousarray(p, dtype=np.float64)
    cdef Py_ssize_t n = arr.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] xv = arr
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    for i in range(n):
        if xv[i] < 0.0:
            raise ValueError("gamma argument must be nonnegative")
    with nogil:
        for i in range(n):
            ov[i] = _reg_upper(q, xv[i])
    return out


def quad_form_batch(G, C):
    """Real parts of the Hermitian quadratic forms g_s^H C g_s, one per row of G."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] g = np.ascontiguousarray(G, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] c = np.ascontiguousarray(C, dtype=np.complex128)
    if c.shape[0] != c.shape[1]:
        raise ValueError("G must be (n_samples, dim) and C square")
    if g.shape[1] != c.shape[0]:
        raise ValueError(
            "dimension mismatch: G has %d columns, C is %dx%d"
            % (g.shape[1], c.shape[0], c.shape[1])
        )
    cdef Py_ssize_t n = g.shape[0]
    cdef Py_ssize_t dim = g.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double complex[:, ::1] gv = g
    cdef double complex[:, ::1] cv = c
    cdef double[::1] ov = out
    cdef double complex acc, row
    cdef Py_ssize_t s, i, j
    with nogil:
        for s in range(n):
            acc = 0
            for i in range(dim):
                row = 0
                for j in range(dim):
                    row = row + cv[i, j] * gv[s, j]
                acc = acc + gv[s, i].conjugate() * row
            ov[s] = acc.real
    return out
