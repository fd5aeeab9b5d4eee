"""Pure-numpy implementation of the hot kernels.

Mirrors the compiled extension in ``_core.pyx``. The regularized
incomplete-gamma evaluation uses the classic split: power series for
p < q + 1, continued fraction (modified Lentz) for the complement
otherwise. Array variants iterate with convergence masks so large sample
vectors stay vectorized.
"""

import math

import numpy as np

NAME = "python"

_EPS = 1e-15
_MAX_ITER = 500
_TINY = 1e-300


def _series_p(q, x):
    # Lower regularized gamma by power series; x > 0 elementwise.
    total = np.full_like(x, 1.0 / q)
    term = total.copy()
    ap = q
    pending = np.ones(x.shape, dtype=bool)
    for _ in range(_MAX_ITER):
        ap += 1.0
        term = term * (x / ap)
        total = np.where(pending, total + term, total)
        pending = pending & (np.abs(term) >= np.abs(total) * _EPS)
        if not pending.any():
            break
    return total * np.exp(-x + q * np.log(x) - math.lgamma(q))


def _contfrac_q(q, x):
    # Upper regularized gamma by continued fraction; best for x >= q + 1.
    b = x + 1.0 - q
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    pending = np.ones(x.shape, dtype=bool)
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - q)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(pending, h * delta, h)
        pending = pending & (np.abs(delta - 1.0) >= _EPS)
        if not pending.any():
            break
    return h * np.exp(-x + q * np.log(x) - math.lgamma(q))


def reg_lower_gamma_array(q, p):
    """Regularized lower incomplete gamma P(q, p) for an array of p >= 0."""
    q = float(q)
    if q <= 0.0:
        raise ValueError("gamma shape parameter must be positive")
    p = np.ascontiguousarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("p must be a 1-D array")
    if p.size and float(p.min()) < 0.0:
        raise ValueError("gamma argument must be nonnegative")
    out = np.zeros_like(p)
    lo = (p > 0.0) & (p < q + 1.0)
    hi = p >= q + 1.0
    if lo.any():
        out[lo] = _series_p(q, p[lo])
    if hi.any():
        out[hi] = 1.0 - _contfrac_q(q, p[hi])
    return out


def reg_upper_gamma_array(q, p):
    """Regularized upper incomplete gamma Q(q, p) for an array of p >= 0."""
    q = float(q)
    if q <= 0.0:
        raise ValueError("gamma shape parameter must be positive")
    p = np.ascontiguousarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("p must be a 1-D array")
    if p.size and float(p.min()) < 0.0:
        raise ValueError("gamma argument must be nonnegative")
    out = np.ones_like(p)
    lo = (p > 0.0) & (p < q + 1.0)
    hi = p >= q + 1.0
    if lo.any():
        out[lo] = 1.0 - _series_p(q, p[lo])
    if hi.any():
        out[hi] = _contfrac_q(q, p[hi])
    return out


def reg_lower_gamma(q, p):
    """Scalar regularized lower incomplete gamma P(q, p)."""
    return float(reg_lower_gamma_array(q, np.array([p], dtype=np.float64))[0])


def reg_upper_gamma(q, p):
    """Scalar regularized upper incomplete gamma Q(q, p)."""
    return float(reg_upper_gamma_array(q, np.array([p], dtype=np.float64))[0])


def quad_form_batch(G, C):
    """Real parts of the Hermitian quadratic forms g_s^H C g_s, one per row of G."""
    G = np.ascontiguousarray(G, dtype=np.complex128)
    C = np.ascontiguousarray(C, dtype=np.complex128)
    if G.ndim != 2 or C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError("G must be (n_samples, dim) and C square")
    if G.shape[1] != C.shape[0]:
        raise ValueError(
            f"dimension mismatch: G has {G.shape[1]} columns, C is {C.shape[0]}x{C.shape[1]}"
        )
    return np.einsum("si,ij,sj->s", G.conj(), C, G).real
