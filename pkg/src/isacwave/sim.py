"""Seeded Monte Carlo: channel sampling, distributional verification of the
closed-form claims, and the interference-CDF-versus-rank experiment.

All randomness flows from one root seed through a counter-based generator
(Philox) with named streams, so every sample set is reproducible and
independent of evaluation order.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, ShapeError
from .idempotent import construct_projector
from .stats import comm_power_tail_prob

__all__ = [
    "SampleSet",
    "CdfExperimentResult",
    "stream_rng",
    "sample_complex_gaussian_vector",
    "sensing_interference_samples",
    "interference_cdf_experiment",
    "comm_constraint_mc_check",
    "rate_mc_check",
]


def stream_rng(root_seed, label):
    """Independent generator for a named stream under one root seed.

    The stream label is folded into the Philox key via a stable hash, so the
    same (seed, label) pair always yields the same draws regardless of which
    other streams were consumed first.
    """
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    stream_key = int.from_bytes(digest[:8], "big")
    seq = np.random.SeedSequence([int(root_seed), stream_key])
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class SampleSet:
    """Tagged Monte Carlo draws with seed provenance."""

    values: np.ndarray
    seed: int
    n: int
    statistic_name: str

    def __post_init__(self):
        if self.n != len(self.values):
            raise DomainError("sample count must match the data length")


def _complex_gaussian(rng, shape, variance):
    scale = np.sqrt(variance / 2.0)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return scale * (re + 1j * im)


def sample_complex_gaussian_vector(dim, variance, seed, label="channel"):
    """One draw of h ~ CN(0, variance * I_dim).

    Real and imaginary parts of every entry are independent N(0, variance/2),
    so the per-entry second moment E|h_p|^2 equals ``variance``.
    """
    if dim < 1:
        raise DomainError(f"dimension must be >= 1, got {dim}")
    if variance <= 0:
        raise DomainError(f"variance must be positive, got {variance}")
    rng = stream_rng(seed, label)
    return _complex_gaussian(rng, (dim,), variance)


def sensing_interference_samples(C, sigma_g_sq, n_samples, seed, label="interference"):
    """Quadratic forms g^H C g for n_samples draws of g ~ CN(0, sigma_g_sq I).

    For an idempotent C of rank m, 2 * value / sigma_g_sq is chi-squared
    with 2m degrees of freedom.
    """
    if sigma_g_sq <= 0:
        raise DomainError(f"variance must be positive, got {sigma_g_sq}")
    entries = np.asarray(getattr(C, "entries", C), dtype=np.complex128)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise ShapeError(f"covariance must be square, got {entries.shape}")
    rng = stream_rng(seed, label)
    g = _complex_gaussian(rng, (n_samples, entries.shape[0]), sigma_g_sq)
    values = _kernels.quad_form_batch(g, entries)
    return SampleSet(values=values, seed=int(seed), n=n_samples, statistic_name=label)


@dataclass(frozen=True)
class CdfExperimentResult:
    """Empirical interference CDFs on a shared threshold grid, one row per rank."""

    ranks: list
    thresholds: np.ndarray
    cdf: np.ndarray  # (len(ranks), len(thresholds))

    def rows(self):
        for r, rank in enumerate(self.ranks):
            for t, threshold in enumerate(self.thresholds):
                yield rank, float(threshold), float(self.cdf[r, t])


def interference_cdf_experiment(ranks, spec, n_samples=100_000, seed=0, n_thresholds=50):
    """Empirical CDF of g^H C g across projector ranks on a fixed grid.

    Projectors come from random full-rank seeds (the distribution of the
    quadratic form only depends on the rank, not on the subspace). Lower
    ranks are stochastically smaller, so their CDFs dominate pointwise.
    """
    ranks = [int(m) for m in ranks]
    for m in ranks:
        if m < 1 or m >= spec.n_sensing:
            raise DomainError(f"rank {m} outside [1, {spec.n_sensing - 1}]")
    sigma = spec.sense_channel_var
    m_max = max(ranks)
    # chi-squared mean 2m plus six standard deviations, mapped to raw units
    hi = (sigma / 2.0) * (2.0 * m_max + 12.0 * np.sqrt(m_max))
    thresholds = np.linspace(0.0, hi, n_thresholds)
    cdf = np.empty((len(ranks), n_thresholds))
    for r, m in enumerate(ranks):
        rng = stream_rng(seed, f"cdf-projector-rank-{m}")
        a = _complex_gaussian(rng, (spec.n_sensing, m), 1.0)
        projector = construct_projector(a)
        samples = sensing_interference_samples(
            projector.base, sigma, n_samples, seed, label=f"cdf-interference-rank-{m}"
        )
        data = np.sort(samples.values)
        cdf[r] = np.searchsorted(data, thresholds, side="right") / n_samples
    return CdfExperimentResult(ranks=ranks, thresholds=thresholds, cdf=cdf)


def comm_constraint_mc_check(w_norm, sigma_h_sq, xi, n_samples=100_000, seed=0):
    """Monte Carlo check of Prob(|h^H w|^2 >= xi) against its closed form.

    Returns the empirical tail frequency, the closed-form value, their gap,
    and the 4-sigma binomial tolerance.
    """
    if w_norm <= 0 or sigma_h_sq <= 0:
        raise DomainError("w_norm and sigma_h_sq must be positive")
    if xi < 0:
        raise DomainError("threshold must be nonnegative")
    dim = 8
    w = np.zeros(dim, dtype=np.complex128)
    w[0] = w_norm
    rng = stream_rng(seed, "comm-tail")
    h = _complex_gaussian(rng, (n_samples, dim), sigma_h_sq)
    powers = np.abs(h @ w.conj()) ** 2
    empirical = float(np.mean(powers >= xi))
    closed = 1.0 if xi == 0 else comm_power_tail_prob(w_norm**2, sigma_h_sq, xi)
    tolerance = 4.0 * np.sqrt(max(closed * (1.0 - closed), 1e-12) / n_samples)
    return {
        "empirical_prob": empirical,
        "closed_form": closed,
        "abs_gap": abs(empirical - closed),
        "tolerance": float(tolerance),
    }


@dataclass(frozen=True)
class RateMcResult:
    mean_rates: np.ndarray
    n_channels: int
    signal_path_residual: float


def rate_mc_check(solution, spec, n_channels=500, seed=0):
    """Average achievable rate per user over fresh channel draws.

    Also assembles one received-signal sample path (useful + inter-user +
    sensing + noise terms with unit-power symbols) and reports the residual
    between the term-by-term and the aggregated evaluation as a bookkeeping
    smoke test.
    """
    from .solver import achievable_rate

    K = spec.n_users
    if K < 1:
        raise DomainError("rate check needs at least one user")
    rng_h = stream_rng(seed, "rate-comm-channels")
    rng_g = stream_rng(seed, "rate-sense-channels")
    h = _complex_gaussian(rng_h, (n_channels, K, spec.n_comm), spec.comm_channel_var)
    g = _complex_gaussian(rng_g, (n_channels, K, spec.n_sensing), spec.sense_channel_var)
    entries = solution.projector.entries
    rates = np.zeros((n_channels, K))
    for d in range(n_channels):
        for u in range(K):
            rates[d, u] = achievable_rate(
                solution.precoders, entries, h[d], g[d, u], spec.noise_var, u
            )
    # one sample path of the received signal at the intended user
    rng_s = stream_rng(seed, "rate-symbols")
    symbols = _complex_gaussian(rng_s, (K,), 1.0)
    radar = entries @ _complex_gaussian(rng_s, (spec.n_sensing,), 1.0)
    noise = _complex_gaussian(rng_s, (1,), spec.noise_var)[0]
    k_idx = spec.intended_index
    h_k = h[0, k_idx]
    g_k = g[0, k_idx]
    W = solution.precoders.vectors
    useful = np.vdot(h_k, W[k_idx]) * symbols[k_idx]
    inter_user = sum(
        np.vdot(h_k, W[i]) * symbols[i] for i in range(K) if i != k_idx
    )
    sensing_leak = np.vdot(g_k, radar)
    aggregate = np.vdot(h_k, W.T @ symbols) + sensing_leak + noise
    parts = useful + inter_user + sensing_leak + noise
    residual = float(abs(aggregate - parts))
    return RateMcResult(
        mean_rates=rates.mean(axis=0),
        n_channels=n_channels,
        signal_path_residual=residual,
    )
