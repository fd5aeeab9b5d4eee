"""Problem definition: array split, user population, powers, thresholds and
probabilities. The defaults reproduce the reference simulation scenario
(24 antennas split evenly, 3 users, 3 targets at [-22, 0, 22] degrees).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .sca import ScaConfig

__all__ = ["ProblemSpec", "dbw_to_watts"]


def dbw_to_watts(dbw):
    """Convert a power in dBW to watts."""
    return 10.0 ** (dbw / 10.0)


@dataclass
class ProblemSpec:
    """All scalars defining one waveform-design instance.

    Powers are in watts (10 dBW total = 10 W split evenly between sensing
    and communication). Thresholds follow the reference ratios relative to
    unit noise power: interference beta = 0.1 * noise, sensing rho = 2 *
    noise, intended-user power xi = 0.01 * beta. ``interference_threshold``
    and ``interference_prob`` accept scalars (broadcast over users) or
    per-user sequences. ``intended_user`` is 1-based.
    """

    n_total: int = 24
    n_sensing: int = 12
    n_comm: int = 12
    n_users: int = 3
    intended_user: int = 1
    target_angles_deg: np.ndarray = field(
        default_factory=lambda: np.array([-22.0, 0.0, 22.0])
    )
    half_width_deg: float = 5.0
    p_total: float = dbw_to_watts(10.0)
    p_sensing: float = dbw_to_watts(10.0) / 2.0
    p_comm: float = dbw_to_watts(10.0) / 2.0
    noise_var: float = 1.0
    comm_channel_var: float = 0.05
    sense_channel_var: float = 0.05
    comm_power_threshold: float = 0.001
    interference_threshold: np.ndarray = 0.1
    sensing_threshold: float = 2.0
    comm_power_prob: float = 0.9
    interference_prob: np.ndarray = 0.5
    sensing_prob: float = 0.9
    spacing_ratio: float = 0.5
    grid_step_deg: float = 1.0
    literal_margin_coeffs: bool = False
    sca: ScaConfig = field(default_factory=ScaConfig)

    def __post_init__(self):
        if self.n_sensing < 1 or self.n_comm < 0:
            raise DomainError("antenna split must be positive")
        if self.n_total != self.n_sensing + self.n_comm:
            raise DomainError(
                f"n_total={self.n_total} must equal n_sensing+n_comm="
                f"{self.n_sensing + self.n_comm}"
            )
        if self.n_users < 0:
            raise DomainError("n_users must be nonnegative")
        if self.n_users >= 1 and not 1 <= self.intended_user <= self.n_users:
            raise DomainError(
                f"intended_user={self.intended_user} must lie in 1..{self.n_users}"
            )
        self.target_angles_deg = np.asarray(self.target_angles_deg, dtype=np.float64)
        if self.target_angles_deg.size == 0:
            raise DomainError("at least one target direction is required")
        if np.any(np.diff(self.target_angles_deg) <= 0):
            raise DomainError("target directions must be strictly increasing")
        if self.half_width_deg <= 0:
            raise DomainError("half_width_deg must be positive")
        for name in ("p_total", "p_sensing", "noise_var", "comm_channel_var",
                     "sense_channel_var", "comm_power_threshold", "sensing_threshold"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")
        if self.p_comm < 0:
            raise DomainError("p_comm must be nonnegative")
        if self.p_sensing + self.p_comm > self.p_total * (1 + 1e-12):
            raise DomainError(
                f"p_sensing+p_comm={self.p_sensing + self.p_comm} exceeds p_total={self.p_total}"
            )
        for name in ("comm_power_prob", "sensing_prob"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise DomainError(f"{name} must lie strictly in (0, 1)")
        self.interference_threshold = self._per_user(
            "interference_threshold", self.interference_threshold
        )
        if np.any(self.interference_threshold <= 0):
            raise DomainError("interference_threshold entries must be positive")
        self.interference_prob = self._per_user("interference_prob", self.interference_prob)
        if self.n_users and (
            np.any(self.interference_prob <= 0) or np.any(self.interference_prob >= 1)
        ):
            raise DomainError("interference_prob entries must lie strictly in (0, 1)")
        if self.grid_step_deg <= 0:
            raise DomainError("grid_step_deg must be positive")
        if self.spacing_ratio <= 0:
            raise DomainError("spacing_ratio must be positive")

    def _per_user(self, name, value):
        arr = np.asarray(value, dtype=np.float64)
        if arr.ndim == 0:
            return np.full(self.n_users, float(arr))
        if arr.shape != (self.n_users,):
            raise DomainError(f"{name} must be scalar or length {self.n_users}")
        return arr

    @property
    def intended_index(self):
        """0-based index of the intended user."""
        return self.intended_user - 1

    @property
    def n_targets(self):
        return len(self.target_angles_deg)

    def as_dict(self):
        """JSON-ready echo of every field (step weights as their first values)."""
        sca = self.sca
        omega_repr = [sca.omega(k) for k in range(min(sca.max_iter, 8))]
        return {
            "n_total": self.n_total,
            "n_sensing": self.n_sensing,
            "n_comm": self.n_comm,
            "n_users": self.n_users,
            "intended_user": self.intended_user,
            "target_angles_deg": list(map(float, self.target_angles_deg)),
            "half_width_deg": self.half_width_deg,
            "p_total": self.p_total,
            "p_sensing": self.p_sensing,
            "p_comm": self.p_comm,
            "noise_var": self.noise_var,
            "comm_channel_var": self.comm_channel_var,
            "sense_channel_var": self.sense_channel_var,
            "comm_power_threshold": self.comm_power_threshold,
            "interference_threshold": list(map(float, self.interference_threshold)),
            "sensing_threshold": self.sensing_threshold,
            "comm_power_prob": self.comm_power_prob,
            "interference_prob": list(map(float, self.interference_prob)),
            "sensing_prob": self.sensing_prob,
            "spacing_ratio": self.spacing_ratio,
            "grid_step_deg": self.grid_step_deg,
            "literal_margin_coeffs": self.literal_margin_coeffs,
            "sca": {
                "omega_head": omega_repr,
                "zeta1": sca.zeta1,
                "zeta2": sca.zeta2,
                "max_iter": sca.max_iter,
            },
        }
