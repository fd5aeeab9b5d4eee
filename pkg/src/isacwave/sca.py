"""Successive convex approximation engine: damped surrogate iterations with
convergence bookkeeping, plus the precoder-norm feasibility solver built on
two second-order Taylor surrogates.

The feasibility problem lives in the reciprocal-norm variables
v_i = 1/||w_i||. After the closed-form probability transformations every
constraint is an interval in one coordinate:

    intended user k:  exp(-a_k^2/2) >= nu      <=>  v_k <= v_max
    interferer i:     exp(-b_i^2/2) <= 1-eps_i <=>  v_i >= v_min_i
    power:            sum_i 1/v_i^2 <= P_c

with a_k, b_i linear in v. The surrogate subproblems are one-dimensional
quadratics solved in closed form.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DomainError, InfeasibilityError
from .stats import comm_power_tail_prob

__all__ = [
    "ScaConfig",
    "ScaTrace",
    "FeasibilityReport",
    "surrogate_f",
    "surrogate_g",
    "minimize_surrogate_f",
    "minimize_surrogate_g",
    "sca_iterate",
    "solve_v_feasibility",
    "check_feasibility",
    "geometric_weights",
]


def geometric_weights(base=0.1):
    """Step-weight schedule omega_k = base**k (full first step, fast damping)."""

    def omega(k):
        return base**k

    return omega


@dataclass
class ScaConfig:
    """Step weights and stopping rules for the damped surrogate iteration."""

    omega_schedule: Union[Callable[[int], float], Sequence[float]] = field(
        default_factory=geometric_weights
    )
    zeta1: float = 1e-4
    zeta2: float = 1e-4
    max_iter: int = 50

    def __post_init__(self):
        if self.zeta1 <= 0 or self.zeta2 <= 0:
            raise DomainError("convergence tolerances must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")
        if not callable(self.omega_schedule):
            weights = [float(w) for w in self.omega_schedule]
            if not weights:
                raise DomainError("omega schedule must not be empty")

    def omega(self, k):
        """Step weight for iteration k, validated to lie in (0, 1]."""
        if callable(self.omega_schedule):
            w = float(self.omega_schedule(k))
        else:
            seq = self.omega_schedule
            w = float(seq[min(k, len(seq) - 1)])
        if not 0.0 < w <= 1.0:
            raise DomainError(f"step weight omega_{k}={w} outside (0, 1]")
        return w


@dataclass
class ScaTrace:
    """Iterate history of one damped surrogate sequence."""

    iterates: list
    step_norms: list
    converged: bool
    iterations_used: int


@dataclass(frozen=True)
class FeasibilityReport:
    """Post-hoc check of the original probabilistic constraints at a point v.

    All probabilities are the exact closed forms, not surrogate values.
    """

    comm_tail: float
    comm_tail_required: float
    interferer_tails: np.ndarray
    interferer_tails_allowed: np.ndarray
    total_power: float
    power_budget: float
    slack: float
    passed: bool

    def as_dict(self):
        return {
            "comm_tail": self.comm_tail,
            "comm_tail_required": self.comm_tail_required,
            "interferer_tails": list(map(float, self.interferer_tails)),
            "interferer_tails_allowed": list(map(float, self.interferer_tails_allowed)),
            "total_power": self.total_power,
            "power_budget": self.power_budget,
            "slack": self.slack,
            "passed": self.passed,
        }


def surrogate_f(z, z0):
    """Second-order expansion of f(z) = exp(-z^2/2) around z0."""
    e = math.exp(-0.5 * z0 * z0)
    dz = z - z0
    return e * (1.0 - z0 * dz + 0.5 * (z0 * z0 - 1.0) * dz * dz)


def surrogate_g(v, v0):
    """Per-coordinate second-order expansion of g(v) = sum_i 1/v_i^2 around v0."""
    v = np.asarray(v, dtype=np.float64)
    v0 = np.asarray(v0, dtype=np.float64)
    if v.shape != v0.shape:
        raise DomainError(f"shape mismatch: {v.shape} vs {v0.shape}")
    if np.any(v0 <= 0):
        raise DomainError("expansion point entries must be positive")
    dv = v - v0
    terms = 1.0 / v0**2 - (2.0 / v0**3) * dv + (3.0 / v0**4) * dv**2
    return float(np.sum(terms))


def minimize_surrogate_f(z0, lo, hi):
    """Closed-form minimizer of the f-surrogate over the interval [lo, hi].

    The quadratic's curvature (z0^2 - 1) flips sign at z0 = 1: convex above
    (interior stationary point z0 + z0/(z0^2-1)), concave or linear at or
    below (minimum at an endpoint).
    """
    if lo > hi:
        raise DomainError(f"empty interval [{lo}, {hi}]")
    curv = z0 * z0 - 1.0
    if curv > 0.0:
        return min(max(z0 + z0 / curv, lo), hi)
    return lo if surrogate_f(lo, z0) < surrogate_f(hi, z0) else hi


def minimize_surrogate_g(v0, lo, hi):
    """Coordinatewise minimizer of the g-surrogate over the box [lo, hi].

    Each coordinate is an independent convex quadratic with stationary point
    (4/3) v0_i.
    """
    v0 = np.asarray(v0, dtype=np.float64)
    if np.any(v0 <= 0):
        raise DomainError("expansion point entries must be positive")
    return np.clip((4.0 / 3.0) * v0, lo, hi)


def sca_iterate(subproblem_solver, x0, config):
    """Damped surrogate iteration x_{k+1} = x_k + omega_k (xhat(x_k) - x_k).

    ``subproblem_solver`` maps the current point to the surrogate minimizer
    within the feasible restriction. Terminates when the step norm drops to
    ``config.zeta1`` or at ``config.max_iter``; the full trace is returned.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=np.float64)).copy()
    iterates = [x.copy()]
    step_norms = []
    converged = False
    for k in range(config.max_iter):
        try:
            xhat = np.atleast_1d(np.asarray(subproblem_solver(x), dtype=np.float64))
        except InfeasibilityError as err:
            if err.detail is None:
                err.detail = x.copy()
            raise
        if xhat.shape != x.shape:
            raise DomainError(f"subproblem returned shape {xhat.shape}, expected {x.shape}")
        x_new = x + config.omega(k) * (xhat - x)
        step = float(np.linalg.norm(x_new - x))
        iterates.append(x_new.copy())
        step_norms.append(step)
        x = x_new
        if step <= config.zeta1:
            converged = True
            break
    return ScaTrace(
        iterates=iterates,
        step_norms=step_norms,
        converged=converged,
        iterations_used=len(step_norms),
    )


def _margin_scales(spec):
    """Per-user factors c with Marcum argument = c * v.

    The variance-consistent value is sqrt(2*xi)/sigma_h (and likewise with
    beta_i for interferers); the literal-coefficient switch doubles the
    sqrt(xi)/sigma_h base instead, for comparison runs.
    """
    factor = 2.0 if spec.literal_margin_coeffs else math.sqrt(2.0)
    sigma_h = math.sqrt(spec.comm_channel_var)
    c_a = factor * math.sqrt(spec.comm_power_threshold) / sigma_h
    c_b = factor * np.sqrt(spec.interference_threshold) / sigma_h
    return c_a, c_b


def _feasible_box(spec):
    """Interval bounds on v from inverting the two probability constraints."""
    c_a, c_b = _margin_scales(spec)
    v_max = math.sqrt(2.0 * math.log(1.0 / spec.comm_power_prob)) / c_a
    eps = np.asarray(spec.interference_prob, dtype=np.float64)
    z_req = np.sqrt(2.0 * np.log(1.0 / (1.0 - eps)))
    v_min = z_req / c_b
    return c_a, c_b, v_max, z_req, v_min


def solve_v_feasibility(spec):
    """Feasible precoder-norm inverses via the dual damped surrogate loop.

    Runs the margin sequence (one f-surrogate subproblem per interferer) and
    the power sequence (g-surrogate subproblem on the full v vector, with the
    interferer coordinates mirroring the margins through the change of
    variables) in lockstep until both step norms fall below their tolerances.
    Every iterate stays inside the interval restrictions, and the returned
    point is re-checked against the exact closed-form constraints.

    Returns (v, (margin_trace, power_trace)).
    """
    k_idx = spec.intended_index
    K = spec.n_users
    p_c = spec.p_comm
    if p_c <= 0:
        raise InfeasibilityError(
            f"communication power budget must be positive, got {p_c}",
            stage="v-feasibility",
        )
    c_a, c_b, v_max, z_req, v_min = _feasible_box(spec)
    others = [i for i in range(K) if i != k_idx]
    c_b_others = np.asarray(c_b, dtype=np.float64)[others]
    z_req_others = np.asarray(z_req, dtype=np.float64)[others]
    v_min_others = np.asarray(v_min, dtype=np.float64)[others]

    # Provable lower bound on the total power: the intended user alone needs
    # 1/v_max^2; interferers can be throttled arbitrarily close to zero.
    power_floor = 1.0 / (v_max * v_max)
    margin = 0.0 if K == 1 else p_c * 1e-12
    if power_floor > p_c - margin:
        raise InfeasibilityError(
            f"feasible set is empty: intended-user power floor {power_floor:.6g} W "
            f"exceeds the communication budget {p_c:.6g} W",
            stage="v-feasibility",
            detail=power_floor,
        )

    # Initial point: equal power split projected into the interval bounds,
    # then interferer powers shrunk by a common factor if the projection
    # pushed the total above budget.
    v = np.full(K, math.sqrt(K / p_c))
    v[k_idx] = min(v[k_idx], v_max)
    v[others] = np.maximum(v[others], v_min_others)
    total = float(np.sum(1.0 / v**2))
    if total > p_c and others:
        remaining = (p_c - 1.0 / v[k_idx] ** 2) * (1.0 - 1e-12)
        p_others = 1.0 / v[others] ** 2
        shrink = remaining / float(np.sum(p_others))
        v[others] = v[others] / math.sqrt(shrink)

    z = c_b_others * v[others]
    z_cap = 10.0 * z  # margins may grow until interferer power falls 100-fold

    config = spec.sca
    z_iterates = [z.copy()]
    v_iterates = [v.copy()]
    z_norms = []
    b_norms = []
    z_done = b_done = False
    for it in range(config.max_iter):
        w = config.omega(it)
        z_hat = np.array(
            [
                minimize_surrogate_f(z[j], z_req_others[j], z_cap[j])
                for j in range(len(others))
            ]
        )
        z_new = z + w * (z_hat - z)
        v_new = v.copy()
        v_hat_k = float(minimize_surrogate_g(v[k_idx : k_idx + 1], 0.0, v_max)[0])
        v_new[k_idx] = v[k_idx] + w * (v_hat_k - v[k_idx])
        v_new[others] = z_new / c_b_others
        z_step = float(np.linalg.norm(z_new - z)) if others else 0.0
        b_step = float(np.linalg.norm(v_new - v))
        z = z_new
        v = v_new
        z_iterates.append(z.copy())
        v_iterates.append(v.copy())
        z_norms.append(z_step)
        b_norms.append(b_step)
        z_done = z_step <= config.zeta1
        b_done = b_step <= config.zeta2
        if z_done and b_done:
            break
    margin_trace = ScaTrace(z_iterates, z_norms, z_done, len(z_norms))
    power_trace = ScaTrace(v_iterates, b_norms, b_done, len(b_norms))

    report = check_feasibility(spec, v)
    if not report.passed:
        raise InfeasibilityError(
            "surrogate solution violates the exact closed-form constraints "
            f"(slack {report.slack:.3e}); check the margin-coefficient mode",
            stage="v-feasibility",
            detail=report,
        )
    return v, (margin_trace, power_trace)


def check_feasibility(spec, v, slack_tol=1e-9):
    """Evaluate the original closed-form constraints at v (not surrogates)."""
    v = np.asarray(v, dtype=np.float64)
    if np.any(v <= 0):
        raise DomainError("precoder-norm inverses must be positive")
    k_idx = spec.intended_index
    sigma_h_sq = spec.comm_channel_var
    comm_tail = comm_power_tail_prob(
        1.0 / v[k_idx] ** 2, sigma_h_sq, spec.comm_power_threshold
    )
    others = [i for i in range(spec.n_users) if i != k_idx]
    beta = np.asarray(spec.interference_threshold, dtype=np.float64)
    eps = np.asarray(spec.interference_prob, dtype=np.float64)
    tails = np.array(
        [comm_power_tail_prob(1.0 / v[i] ** 2, sigma_h_sq, beta[i]) for i in others]
    )
    allowed = 1.0 - eps[others]
    total_power = float(np.sum(1.0 / v**2))
    violations = [spec.comm_power_prob - comm_tail, total_power - spec.p_comm]
    violations.extend(tails - allowed)
    slack = max(violations) if violations else 0.0
    return FeasibilityReport(
        comm_tail=comm_tail,
        comm_tail_required=spec.comm_power_prob,
        interferer_tails=tails,
        interferer_tails_allowed=allowed,
        total_power=total_power,
        power_budget=spec.p_comm,
        slack=float(slack),
        passed=bool(slack <= slack_tol),
    )
