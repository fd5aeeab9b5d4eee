"""Pipeline orchestration: rank selection, projector construction, scaling
elimination, precoder-norm feasibility, precoder realization, rate
evaluation, and internal baseline comparisons.

The beampattern objective depends only on the sensing covariance while the
precoder-norm constraints never touch it, so the solve decomposes into
sequential stages: rank, projector, scaling, feasibility, precoders.
"""

import json
import time
from dataclasses import dataclass

import numpy as np

from .array_model import (
    AngleGrid,
    UlaGeometry,
    desired_beampattern,
    matching_error,
    optimal_delta,
    transmit_beampattern,
)
from .errors import DomainError, InfeasibilityError, ShapeError
from .idempotent import (
    CovarianceMatrix,
    construct_projector,
    matrix_to_json,
    steering_subspace_seed,
    validate_idempotent,
)
from .problem import ProblemSpec
from .sca import FeasibilityReport, ScaTrace, check_feasibility, solve_v_feasibility
from .stats import chi2_cdf

__all__ = [
    "ProblemSpec",
    "PrecoderSet",
    "Solution",
    "choose_rank",
    "solve",
    "build_precoders",
    "achievable_rate",
    "compare_baselines",
    "solution_to_json",
]


@dataclass(frozen=True)
class PrecoderSet:
    """Per-user precoding vectors with their reciprocal norms."""

    vectors: np.ndarray  # (K, n_comm) complex
    v: np.ndarray  # (K,) reciprocal norms

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.complex128)
        v = np.asarray(self.v, dtype=np.float64)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "v", v)
        if vectors.ndim != 2 or len(v) != vectors.shape[0]:
            raise ShapeError("need one norm per precoder vector")
        norms = np.linalg.norm(vectors, axis=1)
        if norms.size and np.max(np.abs(norms - 1.0 / v)) > 1e-9:
            raise DomainError("precoder norms must equal 1/v within 1e-9")

    @property
    def total_power(self):
        return float(np.sum(np.abs(self.vectors) ** 2))


@dataclass
class Solution:
    """Everything the solve pipeline produced, ready for serialization."""

    spec: ProblemSpec
    rank_m: int
    projector: object
    certificate: object
    delta: float
    v: np.ndarray
    precoders: PrecoderSet
    matching_error: float
    grid: AngleGrid
    beampattern: np.ndarray
    desired: np.ndarray
    traces: tuple
    feasibility_report: FeasibilityReport
    wall_time_ms: float


def choose_rank(spec, target_seeded=True):
    """Largest projector rank meeting the sensing-interference probability.

    The normalized quadratic-form statistic 2 g^H C g / sigma_g^2 is
    chi-squared with 2m degrees of freedom, so the constraint reads
    F(2m; 2 rho / sigma_g^2) >= alpha, which is decreasing in m. The rank is
    additionally capped by the trace budget floor(P_s), by n_sensing - 1
    (the projector may not be the identity), and by the number of targets
    when the seed is built from steering vectors.
    """
    if spec.sensing_threshold <= 0:
        raise DomainError("sensing_threshold must be positive")
    x = 2.0 * spec.sensing_threshold / spec.sense_channel_var
    cap = min(int(np.floor(spec.p_sensing)), spec.n_sensing - 1)
    if target_seeded:
        cap = min(cap, spec.n_targets)
    if cap < 1:
        raise InfeasibilityError(
            f"no admissible rank: trace budget floor(P_s)={int(np.floor(spec.p_sensing))} "
            f"and antenna bound {spec.n_sensing - 1} leave no m >= 1",
            stage="rank-selection",
        )
    m = 0
    for cand in range(1, cap + 1):
        if chi2_cdf(2 * cand, x) >= spec.sensing_prob:
            m = cand
        else:
            break
    if m == 0:
        raise InfeasibilityError(
            "sensing-interference constraint is infeasible at every rank: "
            f"F(2; {x:.6g}) = {chi2_cdf(2, x):.6g} < alpha = {spec.sensing_prob}",
            stage="rank-selection",
            detail=chi2_cdf(2, x),
        )
    return m


def build_precoders(v, directions=None, dim=None):
    """Precoders w_i = direction_i / v_i.

    Directions default to the first canonical basis vector; pass unit-norm
    channel estimates to get matched-filter beams. Only the norms are fixed
    by the feasibility stage, so any unit direction preserves the power
    budget.
    """
    v = np.asarray(v, dtype=np.float64)
    if np.any(v <= 0):
        raise DomainError("precoder-norm inverses must be positive")
    K = len(v)
    if directions is None:
        if dim is None:
            raise DomainError("dim is required when directions are omitted")
        directions = np.zeros((K, dim), dtype=np.complex128)
        directions[:, 0] = 1.0
    else:
        directions = np.asarray(directions, dtype=np.complex128)
        if directions.ndim != 2 or directions.shape[0] != K:
            raise ShapeError(f"need {K} direction vectors, got {directions.shape}")
        norms = np.linalg.norm(directions, axis=1)
        if np.any(norms == 0):
            raise DomainError("direction vectors must be nonzero")
        directions = directions / norms[:, None]
    vectors = directions / v[:, None]
    return PrecoderSet(vectors=vectors, v=v)


def achievable_rate(precoders, C, h_all, g_k, sigma_n_sq, user_index,
                    literal_interference=False):
    """Rate log2(1 + SINR) at one user, in bits per channel use.

    The denominator sums the inter-user interference, the sensing leakage
    g_k^H C g_k, and the noise power. By default every interference term is
    evaluated at the receiving user's channel h_k; the literal switch instead
    uses each interferer's own channel h_i (a published variant, kept for
    comparison).
    """
    if sigma_n_sq <= 0:
        raise DomainError("noise variance must be positive")
    W = precoders.vectors
    K, n_c = W.shape
    h_all = np.asarray(h_all, dtype=np.complex128)
    if h_all.shape != (K, n_c):
        raise ShapeError(f"channel matrix must be {K}x{n_c}, got {h_all.shape}")
    if not 0 <= user_index < K:
        raise DomainError(f"user_index={user_index} outside 0..{K - 1}")
    entries = np.asarray(getattr(C, "entries", C), dtype=np.complex128)
    g_k = np.asarray(g_k, dtype=np.complex128)
    if entries.shape != (len(g_k), len(g_k)):
        raise ShapeError(
            f"sensing covariance {entries.shape} inconsistent with channel length {len(g_k)}"
        )
    h_k = h_all[user_index]
    signal = float(np.abs(np.vdot(h_k, W[user_index])) ** 2)
    interference = 0.0
    for i in range(K):
        if i == user_index:
            continue
        h = h_all[i] if literal_interference else h_k
        interference += float(np.abs(np.vdot(h, W[i])) ** 2)
    sensing = float(np.real(np.vdot(g_k, entries @ g_k)))
    return float(np.log2(1.0 + signal / (interference + sensing + sigma_n_sq)))


def _sensing_geometry(spec):
    return UlaGeometry(n_antennas=spec.n_sensing, spacing_ratio=spec.spacing_ratio)


def _pattern_stage(spec, entries):
    grid = AngleGrid.regular(spec.grid_step_deg)
    targets = AngleGrid(spec.target_angles_deg)
    desired = desired_beampattern(grid, targets, spec.half_width_deg)
    pattern = transmit_beampattern(entries, grid, _sensing_geometry(spec))
    delta = optimal_delta(desired, pattern)
    err = matching_error(delta, desired, pattern)
    return grid, desired, pattern, delta, err


def solve(spec):
    """Run the full pipeline and return a Solution with all certificates."""
    t0 = time.perf_counter()
    m = choose_rank(spec)
    targets = AngleGrid(spec.target_angles_deg)
    seed = steering_subspace_seed(targets, _sensing_geometry(spec), m)
    projector = construct_projector(seed)
    certificate = validate_idempotent(projector.base, tol=1e-10)
    grid, desired, pattern, delta, err = _pattern_stage(spec, projector.entries)
    if spec.n_users >= 1:
        v, traces = solve_v_feasibility(spec)
        report = check_feasibility(spec, v)
        precoders = build_precoders(v, dim=spec.n_comm)
    else:
        v = np.array([])
        empty = ScaTrace(iterates=[], step_norms=[], converged=True, iterations_used=0)
        traces = (empty, empty)
        report = FeasibilityReport(
            comm_tail=1.0,
            comm_tail_required=0.0,
            interferer_tails=np.array([]),
            interferer_tails_allowed=np.array([]),
            total_power=0.0,
            power_budget=spec.p_comm,
            slack=0.0,
            passed=True,
        )
        precoders = PrecoderSet(vectors=np.zeros((0, spec.n_comm)), v=np.array([]))
    wall = (time.perf_counter() - t0) * 1e3
    return Solution(
        spec=spec,
        rank_m=m,
        projector=projector,
        certificate=certificate,
        delta=delta,
        v=v,
        precoders=precoders,
        matching_error=err,
        grid=grid,
        beampattern=pattern,
        desired=desired.values,
        traces=traces,
        feasibility_report=report,
        wall_time_ms=wall,
    )


@dataclass(frozen=True)
class BaselineRow:
    scheme: str
    rank: int
    matching_error: float
    peak_sidelobe_ratio: float
    mean_interference: float


def _peak_sidelobe_ratio(spec, grid, pattern):
    theta = grid.angles_deg
    near = np.zeros(len(theta), dtype=bool)
    for phi in spec.target_angles_deg:
        near |= np.abs(theta - phi) <= spec.half_width_deg
    peak = float(np.max(pattern[near]))
    side = float(np.max(pattern[~near])) if np.any(~near) else np.nan
    return peak / side if side > 0 else np.inf


def compare_baselines(spec, n_samples=20_000, seed=0):
    """Match the proposed projector against internal reference covariances.

    Rows: the proposed construction, the isotropic covariance
    (P_s / n_sensing) I, and a target-seeded rank sweep. Columns: matching
    error after the optimal scaling, peak-to-sidelobe ratio, and the Monte
    Carlo mean of the sensing interference power g^H C g.
    """
    from .sim import sensing_interference_samples

    geometry = _sensing_geometry(spec)
    targets = AngleGrid(spec.target_angles_deg)
    rows = []

    def add_row(scheme, rank, entries):
        grid, _, pattern, delta, err = _pattern_stage(spec, entries)
        samples = sensing_interference_samples(
            CovarianceMatrix.from_entries(entries),
            spec.sense_channel_var,
            n_samples,
            seed,
            label=f"baseline-{scheme}",
        )
        rows.append(
            BaselineRow(
                scheme=scheme,
                rank=rank,
                matching_error=err,
                peak_sidelobe_ratio=_peak_sidelobe_ratio(spec, grid, pattern),
                mean_interference=float(np.mean(samples.values)),
            )
        )

    m_star = choose_rank(spec)
    proposed = construct_projector(steering_subspace_seed(targets, geometry, m_star))
    add_row("proposed", m_star, proposed.entries)
    iso = (spec.p_sensing / spec.n_sensing) * np.eye(spec.n_sensing, dtype=np.complex128)
    add_row("isotropic", spec.n_sensing, iso)
    sweep_cap = min(spec.n_targets, spec.n_sensing - 1)
    for m in range(1, sweep_cap + 1):
        proj = construct_projector(steering_subspace_seed(targets, geometry, m))
        add_row(f"rank-{m}", m, proj.entries)
    return rows


def _trace_to_json(trace):
    return {
        "step_norms": [float(s) for s in trace.step_norms],
        "converged": trace.converged,
        "iterations_used": trace.iterations_used,
        "final_point": [float(x) for x in np.atleast_1d(trace.iterates[-1])]
        if trace.iterates
        else [],
    }


def solution_to_json(solution, meta=None, include_wall_time=False):
    """Deterministic JSON text for a Solution.

    Wall time is volatile, so it is nulled unless explicitly requested; this
    keeps repeated runs byte-identical.
    """
    doc = {
        "meta": meta or {},
        "spec": solution.spec.as_dict(),
        "rank_m": solution.rank_m,
        "delta": solution.delta,
        "matching_error": solution.matching_error,
        "v": [float(x) for x in solution.v],
        "precoder_norms": [float(x) for x in 1.0 / solution.v] if len(solution.v) else [],
        "precoders": matrix_to_json(solution.precoders.vectors)
        if len(solution.v)
        else {"shape": [0, solution.spec.n_comm], "data": []},
        "projector": {
            "matrix": matrix_to_json(solution.projector.entries),
            "rank_m": solution.projector.rank_m,
            "idem_residual": solution.projector.idem_residual,
            "certificate": solution.certificate.as_dict(),
        },
        "beampattern": {
            "angles_deg": [float(a) for a in solution.grid.angles_deg],
            "values": [float(x) for x in solution.beampattern],
            "desired": [float(x) for x in solution.desired],
            "normalization": "raw; divide values by n_sensing for unit-peak plots",
        },
        "traces": {
            "margin": _trace_to_json(solution.traces[0]),
            "power": _trace_to_json(solution.traces[1]),
        },
        "feasibility": solution.feasibility_report.as_dict(),
        "wall_time_ms": solution.wall_time_ms if include_wall_time else None,
    }
    return json.dumps(doc, indent=2)
