"""Construction and certification of Hermitian idempotent (orthogonal
projector) sensing covariance matrices, with steering-subspace seeding and
power accounting.
"""

from dataclasses import dataclass

import numpy as np

from .array_model import steering_matrix
from .errors import ConditioningError, DomainError, ShapeError

__all__ = [
    "CovarianceMatrix",
    "ProjectorMatrix",
    "IdempotencyCertificate",
    "construct_projector",
    "validate_idempotent",
    "steering_subspace_seed",
    "scale_to_power",
    "matrix_to_json",
    "matrix_from_json",
]

_HERMITIAN_RTOL = 1e-10
_PSD_FLOOR = -1e-10


@dataclass(frozen=True)
class CovarianceMatrix:
    """Hermitian positive-semidefinite transmit covariance."""

    entries: np.ndarray
    n: int

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.complex128)
        object.__setattr__(self, "entries", entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ShapeError(f"covariance must be square, got {entries.shape}")
        if entries.shape[0] != self.n:
            raise ShapeError(f"declared dimension {self.n} != matrix size {entries.shape[0]}")
        scale = np.linalg.norm(entries)
        if np.linalg.norm(entries - entries.conj().T) > _HERMITIAN_RTOL * max(scale, 1e-30):
            raise DomainError("covariance is not Hermitian within tolerance")
        if scale > 0 and np.linalg.eigvalsh(entries).min() < _PSD_FLOOR:
            raise DomainError("covariance is not positive semidefinite within tolerance")

    @classmethod
    def from_entries(cls, entries):
        entries = np.asarray(entries, dtype=np.complex128)
        return cls(entries=entries, n=entries.shape[0])

    @property
    def trace(self):
        return float(np.real(np.trace(self.entries)))


@dataclass(frozen=True)
class ProjectorMatrix:
    """Idempotent covariance with its rank and idempotency certificate."""

    base: CovarianceMatrix
    rank_m: int
    idem_residual: float

    def __post_init__(self):
        if self.rank_m < 1:
            raise DomainError(f"projector rank must be >= 1, got {self.rank_m}")
        if self.idem_residual > 1e-10:
            raise DomainError(
                f"idempotency residual {self.idem_residual:.3e} exceeds 1e-10"
            )
        if abs(self.base.trace - self.rank_m) > 1e-8:
            raise DomainError(
                f"trace {self.base.trace!r} differs from rank {self.rank_m} by more than 1e-8"
            )
        eigs = np.linalg.eigvalsh(self.base.entries)
        if np.any(np.minimum(np.abs(eigs), np.abs(eigs - 1.0)) > 1e-8):
            raise DomainError("projector eigenvalues must lie in {0, 1} within 1e-8")

    @property
    def entries(self):
        return self.base.entries

    @property
    def n(self):
        return self.base.n


@dataclass(frozen=True)
class IdempotencyCertificate:
    """Residuals and rank diagnostics from validate_idempotent."""

    symmetry_residual: float
    idem_residual: float
    numeric_rank: int
    trace: float
    tol: float
    passed: bool
    is_identity: bool

    def as_dict(self):
        return {
            "symmetry_residual": self.symmetry_residual,
            "idem_residual": self.idem_residual,
            "numeric_rank": self.numeric_rank,
            "trace": self.trace,
            "tol": self.tol,
            "passed": self.passed,
            "is_identity": self.is_identity,
        }


def construct_projector(seed):
    """Orthogonal projector onto the column space of a full-rank n x m seed.

    Equivalent to A (A^H A)^-1 A^H but computed from a rank-revealing SVD of
    the seed for conditioning safety; the output is explicitly symmetrized.
    The seed must have 1 <= m < n independent columns, so the result can be
    neither the zero nor the identity matrix.
    """
    a = np.asarray(seed, dtype=np.complex128)
    if a.ndim != 2:
        raise ShapeError(f"seed must be a 2-D matrix, got shape {a.shape}")
    n, m = a.shape
    if m < 1:
        raise DomainError("seed must have at least one column")
    if m >= n:
        raise DomainError(
            f"seed must be tall (m < n) so the projector is not the identity; got {n}x{m}"
        )
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s[0] == 0.0 or s[-1] <= 1e-10 * s[0]:
        raise ConditioningError(
            f"seed is numerically rank deficient (singular values {s[-1]:.3e} vs {s[0]:.3e})"
        )
    c = u @ u.conj().T
    c = 0.5 * (c + c.conj().T)
    residual = float(np.linalg.norm(c @ c - c))
    base = CovarianceMatrix.from_entries(c)
    return ProjectorMatrix(base=base, rank_m=m, idem_residual=residual)


def validate_idempotent(C, tol=1e-10):
    """Certificate of symmetry/idempotency residuals, numeric rank and trace.

    Always returns a certificate; ``passed`` requires both residuals below
    ``tol`` and the trace to agree with the eigenvalue-counted rank within
    ``tol * n``. The identity matrix certifies as idempotent but is flagged,
    since the projector construction excludes it.
    """
    entries = np.asarray(getattr(C, "entries", C), dtype=np.complex128)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise ShapeError(f"matrix must be square, got {entries.shape}")
    n = entries.shape[0]
    symmetry = float(np.linalg.norm(entries - entries.conj().T))
    idem = float(np.linalg.norm(entries @ entries - entries))
    eigs = np.linalg.eigvalsh(0.5 * (entries + entries.conj().T))
    rank = int(np.count_nonzero(eigs > 0.5))
    trace = float(np.real(np.trace(entries)))
    passed = symmetry <= tol and idem <= tol and abs(trace - rank) <= tol * n
    return IdempotencyCertificate(
        symmetry_residual=symmetry,
        idem_residual=idem,
        numeric_rank=rank,
        trace=trace,
        tol=tol,
        passed=passed,
        is_identity=bool(rank == n and idem <= tol),
    )


def steering_subspace_seed(targets, geometry, m):
    """Seed matrix whose columns are steering vectors of the first m targets.

    Distinct target angles give a full-column-rank seed whenever m <= number
    of targets and m < n_antennas; duplicates surface as a conditioning error
    in construct_projector.
    """
    phis = np.asarray(targets.angles_deg, dtype=np.float64)
    if m < 1 or m > len(phis):
        raise DomainError(f"rank m={m} must lie in [1, {len(phis)}] (number of targets)")
    if m >= geometry.n_antennas:
        raise DomainError(f"rank m={m} must be below the antenna count {geometry.n_antennas}")
    return steering_matrix(geometry, phis[:m]).T.copy()


def scale_to_power(P, budget_Ps, full_budget=False, rho=None, alpha=None, sigma_g_sq=None):
    """Rescale a projector against the sensing power budget Tr(C) <= P_s.

    In full-budget mode the trace is pushed to the budget with gamma = P_s/m;
    otherwise the projector is returned unchanged whenever its trace (= m)
    already fits, and shrunk to fit when it does not. Any gamma != 1 destroys
    idempotency: the quadratic form becomes (gamma sigma_g^2 / 2) * chi2(2m),
    which the returned metadata records. When the interference threshold and
    probability are supplied, the metadata also warns if the scaled matrix
    can no longer meet them.

    Returns (covariance, metadata).
    """
    if budget_Ps <= 0:
        raise DomainError(f"power budget must be positive, got {budget_Ps}")
    m = P.rank_m
    if full_budget:
        gamma = budget_Ps / m
    elif m <= budget_Ps:
        gamma = 1.0
    else:
        gamma = budget_Ps / m
    scaled = P.base if gamma == 1.0 else CovarianceMatrix.from_entries(gamma * P.entries)
    meta = {
        "gamma": gamma,
        "idempotent": gamma == 1.0,
        "trace": scaled.trace,
        "rank": m,
        "quadratic_form": f"({gamma!r}*sigma_g_sq/2)*chi2({2 * m})",
        "interference_warning": None,
    }
    if gamma != 1.0 and rho is not None and alpha is not None and sigma_g_sq is not None:
        from .stats import chi2_cdf

        prob = chi2_cdf(2 * m, 2.0 * rho / (gamma * sigma_g_sq))
        meta["interference_warning"] = bool(prob < alpha)
        meta["interference_prob"] = prob
    return scaled, meta


def matrix_to_json(entries):
    """JSON-ready dict: dimension header plus row-major [re, im] pairs."""
    entries = np.asarray(entries, dtype=np.complex128)
    return {
        "shape": list(entries.shape),
        "data": [[float(z.real), float(z.imag)] for z in entries.ravel()],
    }


def matrix_from_json(obj):
    """Inverse of matrix_to_json."""
    shape = tuple(obj["shape"])
    flat = np.array([complex(re, im) for re, im in obj["data"]], dtype=np.complex128)
    return flat.reshape(shape)
