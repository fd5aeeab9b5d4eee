"""Uniform linear array model: steering vectors, transmit and desired
beampatterns, and the least-squares pattern matching objective.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, ShapeError

__all__ = [
    "UlaGeometry",
    "AngleGrid",
    "DesiredPattern",
    "steering_vector",
    "steering_matrix",
    "transmit_beampattern",
    "desired_beampattern",
    "matching_error",
    "optimal_delta",
    "pattern_to_delimited",
]


@dataclass(frozen=True)
class UlaGeometry:
    """Uniform linear array: antenna count and element spacing in wavelengths."""

    n_antennas: int
    spacing_ratio: float = 0.5

    def __post_init__(self):
        if self.n_antennas < 1:
            raise DomainError(f"n_antennas must be >= 1, got {self.n_antennas}")
        if self.spacing_ratio <= 0:
            raise DomainError(f"spacing_ratio must be positive, got {self.spacing_ratio}")


@dataclass(frozen=True)
class AngleGrid:
    """Strictly increasing azimuth angles in degrees, all within [-90, 90]."""

    angles_deg: np.ndarray

    def __post_init__(self):
        angles = np.asarray(self.angles_deg, dtype=np.float64)
        object.__setattr__(self, "angles_deg", angles)
        if angles.ndim != 1 or angles.size == 0:
            raise DomainError("angle grid must be a nonempty 1-D sequence")
        if np.any(np.diff(angles) <= 0):
            raise DomainError("angle grid must be strictly increasing")
        if angles[0] < -90 or angles[-1] > 90:
            raise DomainError("angles must lie in [-90, 90] degrees")

    def __len__(self):
        return len(self.angles_deg)

    @classmethod
    def regular(cls, step_deg=1.0, lo=-90.0, hi=90.0):
        """Evenly spaced grid covering [lo, hi] with the given step."""
        n = int(round((hi - lo) / step_deg)) + 1
        return cls(np.linspace(lo, hi, n))


@dataclass(frozen=True)
class DesiredPattern:
    """Target beampattern on a grid: unit-peak triangles of half-width Delta."""

    grid: AngleGrid
    values: np.ndarray
    half_width_deg: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.shape != self.grid.angles_deg.shape:
            raise ShapeError("pattern values must match the grid length")
        if np.any(values < 0) or np.any(values > 1):
            raise DomainError("desired pattern values must lie in [0, 1]")


def steering_vector(geometry, theta_deg):
    """Steering vector of the ULA toward azimuth ``theta_deg``.

    Element p carries phase 2*pi*spacing_ratio*p*sin(theta); element 0 is
    exactly 1 and the squared norm equals ``n_antennas``.
    """
    if theta_deg < -90 or theta_deg > 90:
        raise DomainError(f"azimuth must lie in [-90, 90] degrees, got {theta_deg}")
    p = np.arange(geometry.n_antennas)
    phase = 2.0 * np.pi * geometry.spacing_ratio * np.sin(np.deg2rad(theta_deg))
    return np.exp(1j * phase * p)


def steering_matrix(geometry, angles_deg):
    """Rows are steering vectors for each angle: shape (n_angles, n_antennas)."""
    angles = np.asarray(angles_deg, dtype=np.float64)
    if angles.size and (angles.min() < -90 or angles.max() > 90):
        raise DomainError("azimuths must lie in [-90, 90] degrees")
    p = np.arange(geometry.n_antennas)
    phase = 2.0 * np.pi * geometry.spacing_ratio * np.sin(np.deg2rad(angles))
    return np.exp(1j * np.outer(phase, p))


def transmit_beampattern(C, grid, geometry):
    """Transmitted power a^H(theta) C a(theta) at every grid angle.

    ``C`` may be a plain complex matrix or any object with an ``entries``
    attribute; it must be Hermitian of size n_antennas.
    """
    entries = np.asarray(getattr(C, "entries", C), dtype=np.complex128)
    n = geometry.n_antennas
    if entries.shape != (n, n):
        raise ShapeError(f"covariance must be {n}x{n}, got {entries.shape}")
    a = steering_matrix(geometry, grid.angles_deg)
    return _kernels.quad_form_batch(a, entries)


def desired_beampattern(grid, targets, half_width_deg):
    """Multi-target desired pattern: one unit-peak triangle per target.

    Each target angle phi contributes max(0, 1 - |theta - phi| / Delta); the
    grid value is the pointwise maximum over targets. Targets closer than
    2*Delta would make the triangles conflict and are rejected.
    """
    if half_width_deg <= 0:
        raise DomainError(f"half width must be positive, got {half_width_deg}")
    phis = np.asarray(targets.angles_deg, dtype=np.float64)
    if len(phis) > 1 and np.min(np.diff(phis)) <= 2 * half_width_deg:
        raise DomainError(
            "target separation must exceed twice the half width "
            f"(min gap {np.min(np.diff(phis)):g} deg, half width {half_width_deg:g} deg)"
        )
    theta = grid.angles_deg
    tri = 1.0 - np.abs(theta[:, None] - phis[None, :]) / half_width_deg
    values = np.max(np.maximum(tri, 0.0), axis=1)
    return DesiredPattern(grid=grid, values=values, half_width_deg=half_width_deg)


def _pattern_values(desired):
    return np.asarray(getattr(desired, "values", desired), dtype=np.float64)


def matching_error(delta, desired, actual):
    """Least-squares mismatch sum |delta*desired - actual|^2 over the grid."""
    want = _pattern_values(desired)
    have = np.asarray(actual, dtype=np.float64)
    if want.shape != have.shape:
        raise ShapeError(f"pattern length mismatch: {want.shape} vs {have.shape}")
    diff = delta * want - have
    return float(np.dot(diff, diff))


def optimal_delta(desired, actual):
    """Scaling delta* minimizing matching_error for a fixed actual pattern.

    Closed form of the inner least squares: sum(desired*actual)/sum(desired^2),
    clamped at zero.
    """
    want = _pattern_values(desired)
    have = np.asarray(actual, dtype=np.float64)
    if want.shape != have.shape:
        raise ShapeError(f"pattern length mismatch: {want.shape} vs {have.shape}")
    denom = float(np.dot(want, want))
    if denom == 0.0:
        raise DomainError("desired pattern is identically zero")
    return max(float(np.dot(want, have)) / denom, 0.0)


def pattern_to_delimited(grid, values, delimiter=","):
    """Two-column (angle_deg, value) text serialization of a pattern."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != grid.angles_deg.shape:
        raise ShapeError("pattern values must match the grid length")
    lines = [
        f"{angle!r}{delimiter}{value!r}"
        for angle, value in zip(grid.angles_deg, values)
    ]
    return "\n".join(lines)
