"""Special functions and closed-form probabilities for the constraint
transformation, plus empirical-CDF machinery for goodness-of-fit checks.

The solver path only ever needs two closed forms: the zero-noncentrality
Marcum value Q1(0, z) = exp(-z^2/2) and the even-dof chi-squared CDF
F(2m; x) = P(m, x/2). The general-argument Marcum series exists purely as a
cross-check oracle.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError

__all__ = [
    "EmpiricalCdf",
    "lower_incomplete_gamma",
    "regularized_gamma_p",
    "regularized_gamma_q",
    "chi2_cdf",
    "marcum_q1",
    "comm_power_tail_prob",
    "ks_statistic",
]


def regularized_gamma_p(q, p):
    """Regularized lower incomplete gamma P(q, p) = gamma(q, p) / Gamma(q).

    Monotone nondecreasing in p, with P(q, 0) = 0 and limit 1 as p -> inf.
    Evaluated by power series for p < q + 1 and via the continued-fraction
    complement otherwise.
    """
    if q <= 0:
        raise DomainError(f"shape parameter must be positive, got q={q}")
    if p < 0:
        raise DomainError(f"argument must be nonnegative, got p={p}")
    return float(_kernels.reg_lower_gamma(float(q), float(p)))


def regularized_gamma_q(q, p):
    """Regularized upper incomplete gamma Q(q, p) = Gamma(q, p) / Gamma(q)."""
    if q <= 0:
        raise DomainError(f"shape parameter must be positive, got q={q}")
    if p < 0:
        raise DomainError(f"argument must be nonnegative, got p={p}")
    return float(_kernels.reg_upper_gamma(float(q), float(p)))


def lower_incomplete_gamma(q, p):
    """Lower incomplete gamma gamma(q, p) = integral of t^(q-1) e^-t over [0, p]."""
    return regularized_gamma_p(q, p) * math.exp(math.lgamma(float(q)))


def chi2_cdf(dof, x):
    """Chi-squared CDF for even dof = 2m, i.e. P(m, x/2).

    ``x`` may be a scalar or a 1-D array; arrays go through the vectorized
    kernel (the hot path of the goodness-of-fit tests).
    """
    dof = int(dof)
    if dof < 2 or dof % 2 != 0:
        raise DomainError(f"dof must be a positive even integer, got {dof}")
    m = dof // 2
    if np.isscalar(x) or np.ndim(x) == 0:
        if x < 0:
            raise DomainError(f"chi-squared argument must be nonnegative, got {x}")
        return float(_kernels.reg_lower_gamma(float(m), float(x) / 2.0))
    x = np.asarray(x, dtype=np.float64)
    if x.size and float(x.min()) < 0:
        raise DomainError("chi-squared argument must be nonnegative")
    return _kernels.reg_lower_gamma_array(float(m), np.ravel(x) / 2.0).reshape(x.shape)


def marcum_q1(a, b):
    """First-order Marcum Q-function Q1(a, b).

    For a = 0 the exact closed form exp(-b^2/2) is returned; for a > 0 the
    Poisson-mixture series is summed until the remaining Poisson mass is
    below 1e-16 (validation use only).
    """
    if a < 0 or b < 0:
        raise DomainError("Marcum arguments must be nonnegative")
    if a == 0.0:
        return math.exp(-0.5 * b * b)
    if b == 0.0:
        return 1.0
    ha = 0.5 * a * a
    hb = 0.5 * b * b
    # Q1(a,b) = sum_k Pois(k; ha) * Prob(chi2_{2(k+1)} > b^2), where the
    # survival factor is e^{-hb} * sum_{j<=k} hb^j / j!.
    pois = math.exp(-ha)
    cum_pois = pois
    tail_term = math.exp(-hb)
    survival = tail_term
    total = pois * survival
    k = 0
    while 1.0 - cum_pois > 1e-16 and k < 100_000:
        k += 1
        pois *= ha / k
        cum_pois += pois
        tail_term *= hb / k
        survival = min(survival + tail_term, 1.0)
        total += pois * survival
    return min(total, 1.0)


def comm_power_tail_prob(w_norm_sq, sigma_h_sq, xi):
    """Closed form of Prob(|h^H w|^2 >= xi) for h ~ CN(0, sigma_h_sq I).

    |h^H w|^2 is exponentially distributed with mean ||w||^2 sigma_h^2, so the
    tail equals Q1(0, sqrt(xi)/sigma_u) = exp(-xi / (||w||^2 sigma_h^2)) with
    sigma_u^2 = ||w||^2 sigma_h^2 / 2.
    """
    if w_norm_sq <= 0:
        raise DomainError(f"precoder power must be positive, got {w_norm_sq}")
    if sigma_h_sq <= 0:
        raise DomainError(f"channel variance must be positive, got {sigma_h_sq}")
    if xi < 0:
        raise DomainError(f"power threshold must be nonnegative, got {xi}")
    return math.exp(-xi / (w_norm_sq * sigma_h_sq))


@dataclass(frozen=True)
class EmpiricalCdf:
    """Step CDF of a sample: evaluation at x returns (#samples <= x) / n."""

    sorted_samples: np.ndarray
    n: int

    def __post_init__(self):
        if self.n < 1 or self.n != len(self.sorted_samples):
            raise DomainError("sample count must be >= 1 and match the data")
        if np.any(np.diff(self.sorted_samples) < 0):
            raise DomainError("samples must be sorted ascending")

    @classmethod
    def from_samples(cls, values):
        values = np.sort(np.asarray(values, dtype=np.float64))
        return cls(sorted_samples=values, n=len(values))

    def __call__(self, x):
        idx = np.searchsorted(self.sorted_samples, x, side="right")
        return idx / self.n


def ks_statistic(samples, reference_cdf):
    """Kolmogorov-Smirnov sup distance between an EmpiricalCdf and a reference.

    Both one-sided jumps are evaluated at every sample point, so the supremum
    over the step function is exact for a monotone reference.
    """
    if samples.n < 1:
        raise DomainError("empty sample")
    xs = samples.sorted_samples
    ref = reference_cdf(xs)
    ref = np.asarray(ref, dtype=np.float64)
    if ref.shape != xs.shape:
        # scalar-only callables
        ref = np.array([float(reference_cdf(x)) for x in xs])
    n = samples.n
    steps = np.arange(n, dtype=np.float64)
    d_plus = float(np.max((steps + 1.0) / n - ref))
    d_minus = float(np.max(ref - steps / n))
    return max(d_plus, d_minus, 0.0)
