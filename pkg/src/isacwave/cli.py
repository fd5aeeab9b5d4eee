"""Command-line front end: runs the solver and experiments, emitting
plot-ready data files. All outputs are deterministic for a fixed config and
seed; timing information goes to stdout only.

Commands: solve, beampattern, convergence, cdf, check, bench.
"""

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .array_model import AngleGrid, UlaGeometry, transmit_beampattern
from .errors import DomainError, InfeasibilityError
from .idempotent import construct_projector, steering_subspace_seed, validate_idempotent
from .problem import ProblemSpec, dbw_to_watts
from .sca import ScaConfig, check_feasibility, geometric_weights
from .sim import (
    comm_constraint_mc_check,
    interference_cdf_experiment,
    sensing_interference_samples,
    stream_rng,
)
from .solver import compare_baselines, solution_to_json, solve
from .stats import EmpiricalCdf, chi2_cdf, ks_statistic, marcum_q1

ENV_CONFIG = "ISACWAVE_CONFIG"

_SPEC_KEYS = {
    "n_total", "n_sensing", "n_comm", "n_users", "intended_user",
    "target_angles_deg", "half_width_deg", "p_total", "p_sensing", "p_comm",
    "noise_var", "comm_channel_var", "sense_channel_var",
    "comm_power_threshold", "interference_threshold", "sensing_threshold",
    "comm_power_prob", "interference_prob", "sensing_prob",
    "spacing_ratio", "grid_step_deg", "literal_margin_coeffs",
}
_DBW_KEYS = {"p_total_dbw": "p_total", "p_sensing_dbw": "p_sensing", "p_comm_dbw": "p_comm"}
_RUN_KEYS = {"seed", "out_dir", "n_samples", "cdf_ranks", "sca"}


class CliConfigError(Exception):
    def __init__(self, field, message):
        super().__init__(f"config field '{field}': {message}")
        self.field = field


class RunConfig:
    """Parsed configuration: a ProblemSpec plus run settings."""

    def __init__(self, spec, seed, out_dir, n_samples, cdf_ranks, raw):
        self.spec = spec
        self.seed = seed
        self.out_dir = Path(out_dir)
        self.n_samples = n_samples
        self.cdf_ranks = cdf_ranks
        self.raw = raw

    @property
    def config_hash(self):
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _build_sca(obj):
    if not isinstance(obj, dict):
        raise CliConfigError("sca", "must be an object")
    known = {"omega_base", "omega_values", "zeta1", "zeta2", "max_iter"}
    for key in obj:
        if key not in known:
            raise CliConfigError(f"sca.{key}", "unknown field")
    kwargs = {}
    if "omega_values" in obj:
        kwargs["omega_schedule"] = [float(w) for w in obj["omega_values"]]
    elif "omega_base" in obj:
        kwargs["omega_schedule"] = geometric_weights(float(obj["omega_base"]))
    for key in ("zeta1", "zeta2"):
        if key in obj:
            kwargs[key] = float(obj[key])
    if "max_iter" in obj:
        kwargs["max_iter"] = int(obj["max_iter"])
    try:
        return ScaConfig(**kwargs)
    except DomainError as err:
        raise CliConfigError("sca", str(err)) from err


def load_config(path=None, seed=None, out_dir=None, grid_step_deg=None):
    """Build a RunConfig from a JSON file plus command-line overrides.

    With no file the reference scenario defaults apply. dB-valued power keys
    (``p_total_dbw`` etc.) are converted to watts.
    """
    raw = {}
    if path is None:
        path = os.environ.get(ENV_CONFIG) or None
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise CliConfigError("config", f"file not found: {path}")
        except json.JSONDecodeError as err:
            raise CliConfigError("config", f"invalid JSON: {err}")
        if not isinstance(raw, dict):
            raise CliConfigError("config", "top level must be an object")
    spec_kwargs = {}
    run = {"seed": 12345, "out_dir": "out", "n_samples": 100_000, "cdf_ranks": [1, 3, 5]}
    for key, value in raw.items():
        if key in _DBW_KEYS:
            spec_kwargs[_DBW_KEYS[key]] = dbw_to_watts(float(value))
        elif key in _SPEC_KEYS:
            spec_kwargs[key] = value
        elif key == "sca":
            spec_kwargs["sca"] = _build_sca(value)
        elif key in _RUN_KEYS:
            run[key] = value
        else:
            raise CliConfigError(key, "unknown field")
    if grid_step_deg is not None:
        spec_kwargs["grid_step_deg"] = float(grid_step_deg)
    try:
        spec = ProblemSpec(**spec_kwargs)
    except DomainError as err:
        raise CliConfigError(_guess_field(str(err)), str(err)) from err
    if seed is not None:
        run["seed"] = seed
    if out_dir is not None:
        run["out_dir"] = out_dir
    try:
        run_seed = int(run["seed"])
        if run_seed < 0:
            raise ValueError
    except (TypeError, ValueError):
        raise CliConfigError("seed", f"must be a nonnegative integer, got {run['seed']!r}")
    ranks = run["cdf_ranks"]
    if not isinstance(ranks, (list, tuple)) or not ranks:
        raise CliConfigError("cdf_ranks", "must be a nonempty list of ranks")
    echo = dict(raw)
    echo["seed"] = run_seed
    echo["grid_step_deg"] = spec.grid_step_deg
    return RunConfig(
        spec=spec,
        seed=run_seed,
        out_dir=run["out_dir"],
        n_samples=int(run["n_samples"]),
        cdf_ranks=[int(m) for m in ranks],
        raw=echo,
    )


def _guess_field(message):
    for key in sorted(_SPEC_KEYS, key=len, reverse=True):
        if key in message:
            return key
    return "spec"


def _header_lines(cfg, extra=()):
    lines = [
        f"# config_hash: {cfg.config_hash}",
        f"# seed: {cfg.seed}",
        f"# version: {__version__}",
    ]
    lines.extend(extra)
    return lines


def _write_csv(path, cfg, columns, rows, extra_header=()):
    lines = _header_lines(cfg, extra_header)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(repr(x) if isinstance(x, float) else str(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


def _meta(cfg):
    return {"config_hash": cfg.config_hash, "seed": cfg.seed, "version": __version__}


def cmd_solve(cfg, timing=False):
    """Run the pipeline; write solution.json and print a summary."""
    t0 = time.perf_counter()
    solution = solve(cfg.spec)
    wall_ms = (time.perf_counter() - t0) * 1e3
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.out_dir / "solution.json"
    out.write_text(solution_to_json(solution, meta=_meta(cfg), include_wall_time=timing))
    feasible = solution.feasibility_report.passed
    print(f"rank m            : {solution.rank_m}")
    print(f"delta             : {solution.delta:.6g}")
    print(f"matching error    : {solution.matching_error:.6g}")
    print(f"feasibility       : {'pass' if feasible else 'FAIL'}")
    print(f"iterations (z, b) : {solution.traces[0].iterations_used}, "
          f"{solution.traces[1].iterations_used}")
    print(f"wall time         : {wall_ms:.1f} ms")
    print(f"wrote {out}")
    return 0


def _pattern_file(cfg, name, entries, desired_scaled, extra=()):
    spec = cfg.spec
    grid = AngleGrid.regular(spec.grid_step_deg)
    geometry = UlaGeometry(spec.n_sensing, spec.spacing_ratio)
    pattern = transmit_beampattern(entries, grid, geometry)
    rows = zip(
        (float(a) for a in grid.angles_deg),
        (float(x) for x in pattern),
        (float(x) for x in desired_scaled),
    )
    path = cfg.out_dir / f"beampattern_{name}.csv"
    header = [
        f"# scheme: {name}",
        f"# normalization: raw; divide value by n_sensing={spec.n_sensing} for unit-peak plots",
    ]
    header.extend(extra)
    _write_csv(path, cfg, ["angle_deg", "value", "desired"], rows, header)
    return path


def cmd_beampattern(cfg):
    """Emit one (angle, value, desired) file per scheme."""
    from .array_model import desired_beampattern, optimal_delta

    spec = cfg.spec
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    grid = AngleGrid.regular(spec.grid_step_deg)
    targets = AngleGrid(spec.target_angles_deg)
    geometry = UlaGeometry(spec.n_sensing, spec.spacing_ratio)
    desired = desired_beampattern(grid, targets, spec.half_width_deg)

    solution = solve(spec)
    schemes = [("proposed", solution.projector.entries)]
    iso = (spec.p_sensing / spec.n_sensing) * np.eye(spec.n_sensing, dtype=np.complex128)
    schemes.append(("isotropic", iso))
    for m in range(1, min(spec.n_targets, spec.n_sensing - 1) + 1):
        proj = construct_projector(steering_subspace_seed(targets, geometry, m))
        schemes.append((f"rank{m}", proj.entries))
    paths = []
    for name, entries in schemes:
        pattern = transmit_beampattern(entries, grid, geometry)
        delta = optimal_delta(desired, pattern)
        paths.append(
            _pattern_file(cfg, name, entries, delta * desired.values, [f"# delta: {delta!r}"])
        )
    for path in paths:
        print(f"wrote {path}")
    return 0


def cmd_convergence(cfg):
    """Emit the per-iteration step-norm trace of the dual surrogate loop."""
    solution = solve(cfg.spec)
    margin, power = solution.traces
    n = max(margin.iterations_used, power.iterations_used)
    rows = []
    for it in range(n):
        z = margin.step_norms[it] if it < len(margin.step_norms) else 0.0
        b = power.step_norms[it] if it < len(power.step_norms) else 0.0
        rows.append((it + 1, float(z), float(b)))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / "convergence.csv"
    extra = [
        f"# converged: {margin.converged and power.converged}",
        f"# zeta1: {cfg.spec.sca.zeta1!r}",
        f"# zeta2: {cfg.spec.sca.zeta2!r}",
    ]
    _write_csv(path, cfg, ["iteration", "step_norm_z", "step_norm_b"], rows, extra)
    print(f"wrote {path}")
    return 0


def cmd_cdf(cfg):
    """Emit the interference CDF table across projector ranks."""
    result = interference_cdf_experiment(
        cfg.cdf_ranks, cfg.spec, n_samples=cfg.n_samples, seed=cfg.seed
    )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / "interference_cdf.csv"
    _write_csv(path, cfg, ["rank", "threshold", "cdf"], result.rows())
    print(f"wrote {path}")
    return 0


def _run_checks(cfg, inject_fault=None):
    spec = cfg.spec
    seed = cfg.seed
    checks = []

    def record(name, passed, detail):
        checks.append({"name": name, "passed": bool(passed), "detail": detail})

    # construction residuals over random seeds
    rng = stream_rng(seed, "check-construction")
    worst = 0.0
    for _ in range(20):
        m = int(rng.integers(1, spec.n_sensing))
        a = rng.standard_normal((spec.n_sensing, m)) + 1j * rng.standard_normal(
            (spec.n_sensing, m)
        )
        proj = construct_projector(a)
        cert = validate_idempotent(proj.base, tol=1e-10)
        worst = max(worst, cert.idem_residual, abs(cert.trace - proj.rank_m))
        if not cert.passed:
            break
    record("idempotent_construction", worst <= 1e-8, {"worst_residual": worst})

    # eigenvalues of the pipeline projector
    targets = AngleGrid(spec.target_angles_deg)
    geometry = UlaGeometry(spec.n_sensing, spec.spacing_ratio)
    from .solver import choose_rank

    m_star = choose_rank(spec)
    projector = construct_projector(steering_subspace_seed(targets, geometry, m_star))
    eigs = np.linalg.eigvalsh(projector.entries)
    eig_ok = bool(np.all(np.minimum(np.abs(eigs), np.abs(eigs - 1.0)) <= 1e-8))
    record("projector_eigenvalues", eig_ok, {"rank": m_star})

    # distributional claim: normalized quadratic form vs chi-squared
    fault_scale = 0.5 if inject_fault == "scale_c_half" else 1.0
    ks_worst = 0.0
    for m in (1, 2, 3, 4, 6, 8):
        if m >= spec.n_sensing:
            continue
        rng_m = stream_rng(seed, f"check-seed-{m}")
        a = rng_m.standard_normal((spec.n_sensing, m)) + 1j * rng_m.standard_normal(
            (spec.n_sensing, m)
        )
        entries = fault_scale * construct_projector(a).entries
        samples = sensing_interference_samples(
            entries, spec.sense_channel_var, 100_000, seed, label=f"check-ks-{m}"
        )
        normalized = 2.0 * samples.values / spec.sense_channel_var
        stat = ks_statistic(
            EmpiricalCdf.from_samples(normalized), lambda x, m=m: chi2_cdf(2 * m, x)
        )
        ks_worst = max(ks_worst, stat)
    record("chi2_distribution_ks", ks_worst < 0.01, {"worst_ks": ks_worst})

    # negative control: a scaled projector must fail the same test
    rng_n = stream_rng(seed, "check-negative")
    a = rng_n.standard_normal((spec.n_sensing, 2)) + 1j * rng_n.standard_normal(
        (spec.n_sensing, 2)
    )
    entries = 0.5 * construct_projector(a).entries
    samples = sensing_interference_samples(
        entries, spec.sense_channel_var, 100_000, seed, label="check-negative"
    )
    normalized = 2.0 * samples.values / spec.sense_channel_var
    stat = ks_statistic(EmpiricalCdf.from_samples(normalized), lambda x: chi2_cdf(4, x))
    record("negative_control_scaled_projector", stat > 0.05, {"ks": stat})

    # Marcum closed form vs series at a > 0 continuity limit
    marcum_gap = max(
        abs(marcum_q1(0.0, z) - np.exp(-0.5 * z * z)) for z in np.linspace(0, 5, 11)
    )
    record("marcum_closed_form", marcum_gap <= 1e-12, {"max_gap": marcum_gap})

    # surrogate tangency
    from .sca import surrogate_f, surrogate_g

    rng_t = stream_rng(seed, "check-tangency")
    tangency_ok = True
    for _ in range(50):
        z0 = float(rng_t.uniform(0.05, 3.0))
        if surrogate_f(z0, z0) != marcum_q1(0.0, z0):
            tangency_ok = False
        v0 = rng_t.uniform(0.5, 3.0, size=3)
        if surrogate_g(v0, v0) != float(np.sum(1.0 / v0**2)):
            tangency_ok = False
    record("surrogate_tangency", tangency_ok, {})

    # communication tail probability Monte Carlo
    mc = comm_constraint_mc_check(1.3, spec.comm_channel_var, 0.05, 100_000, seed)
    record(
        "comm_tail_probability_mc",
        mc["abs_gap"] <= mc["tolerance"],
        {"gap": mc["abs_gap"], "tolerance": mc["tolerance"]},
    )

    # end-to-end feasibility on this spec
    if spec.n_users >= 1:
        from .sca import solve_v_feasibility

        try:
            v, traces = solve_v_feasibility(spec)
            report = check_feasibility(spec, v)
            record(
                "solve_feasibility",
                report.passed and traces[0].converged and traces[1].converged,
                {"slack": report.slack},
            )
        except InfeasibilityError as err:
            record("solve_feasibility", False, {"error": str(err)})
    else:
        record("solve_feasibility", True, {"skipped": "no users"})

    # beampattern bound: projector pattern never exceeds the antenna count
    grid = AngleGrid.regular(spec.grid_step_deg)
    pattern = transmit_beampattern(projector.entries, grid, geometry)
    record(
        "beampattern_bounds",
        bool(np.all(pattern <= spec.n_sensing + 1e-9) and np.all(pattern >= -1e-10)),
        {"max": float(pattern.max())},
    )
    return checks


def cmd_check(cfg, inject_fault=None):
    """Run the property suite; write a machine-readable report."""
    checks = _run_checks(cfg, inject_fault=inject_fault)
    all_passed = all(c["passed"] for c in checks)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / "check_report.json"
    report = {
        "meta": _meta(cfg),
        "fault_injected": inject_fault,
        "checks": checks,
        "all_passed": all_passed,
    }
    path.write_text(json.dumps(report, indent=2, default=float))
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}")
    print(f"wrote {path}")
    return 0 if all_passed else 1


def _time_call(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cmd_bench(cfg):
    """Time the hot kernels on every available backend, plus one full solve.

    Timings are inherently run-dependent, so this command writes no files.
    """
    backends = _kernels.available_backends()
    rng = stream_rng(cfg.seed, "bench")
    p = rng.uniform(0.0, 40.0, size=100_000)
    g = (
        rng.standard_normal((100_000, cfg.spec.n_sensing))
        + 1j * rng.standard_normal((100_000, cfg.spec.n_sensing))
    )
    targets = AngleGrid(cfg.spec.target_angles_deg)
    geometry = UlaGeometry(cfg.spec.n_sensing, cfg.spec.spacing_ratio)
    m = min(3, cfg.spec.n_sensing - 1, cfg.spec.n_targets)
    entries = construct_projector(steering_subspace_seed(targets, geometry, m)).entries
    print(f"active backend: {_kernels.BACKEND}")
    print(f"{'kernel':<28}{'backend':<12}{'best of 3':>12}")
    for name, mod in sorted(backends.items()):
        t = _time_call(lambda: mod.reg_lower_gamma_array(3.0, p))
        print(f"{'reg_lower_gamma_array(1e5)':<28}{name:<12}{t * 1e3:>10.2f} ms")
    for name, mod in sorted(backends.items()):
        t = _time_call(lambda: mod.quad_form_batch(g, entries))
        print(f"{'quad_form_batch(1e5)':<28}{name:<12}{t * 1e3:>10.2f} ms")
    t = _time_call(lambda: solve(cfg.spec), repeats=3)
    print(f"{'solve(reference spec)':<28}{'pipeline':<12}{t * 1e3:>10.2f} ms")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="isacwave",
        description="Waveform design and verification experiments for a "
        "dual-function sensing/communication array.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "run the design pipeline and write solution.json"),
        ("beampattern", "emit beampattern files for the proposed and baseline schemes"),
        ("convergence", "emit the per-iteration step-norm trace"),
        ("cdf", "emit the interference CDF table across ranks"),
        ("check", "run the property suite and write a pass/fail report"),
        ("bench", "time the hot kernels on every available backend"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=str, default=None, help="JSON config path "
                       f"(default: ${ENV_CONFIG} or built-in reference scenario)")
        p.add_argument("--seed", type=int, default=None, help="root seed override")
        p.add_argument("--out", type=str, default=None, help="output directory")
        p.add_argument("--grid-deg", type=float, default=None, help="angle grid step")
        if name == "solve":
            p.add_argument("--timing", action="store_true",
                           help="embed wall time in solution.json (breaks byte-identity)")
        if name == "check":
            p.add_argument("--inject-fault", choices=["scale_c_half"], default=None,
                           help="negative-control fault injection")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed, out_dir=args.out,
                          grid_step_deg=args.grid_deg)
    except CliConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    try:
        if args.command == "solve":
            return cmd_solve(cfg, timing=args.timing)
        if args.command == "beampattern":
            return cmd_beampattern(cfg)
        if args.command == "convergence":
            return cmd_convergence(cfg)
        if args.command == "cdf":
            return cmd_cdf(cfg)
        if args.command == "check":
            return cmd_check(cfg, inject_fault=args.inject_fault)
        if args.command == "bench":
            return cmd_bench(cfg)
    except InfeasibilityError as err:
        stage = err.stage or "unknown"
        print(f"infeasible at stage '{stage}': {err}", file=sys.stderr)
        return 1
    except DomainError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
