"""End-to-end orchestration: analysis, renewal reconstruction, file artifacts."""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ProblemSpec, config_hash
from .errors import ConfigurationError, SCHEMA_INVALID
from .montecarlo import MomentEstimate, SimulationConfig, simulate_mean_square
from .renewal import RenewalProblem, mean_square_trace, solve_renewal
from .resolvent import (
    GridTrace,
    ResolventTable,
    SolutionTable,
    compute_resolvent,
    decay_rate_estimate,
    deterministic_solution,
    l2_norm_sq_tail,
)
from .stability import (
    CRITICAL,
    DEGENERATE,
    SUBCRITICAL,
    SUPERCRITICAL,
    UNCERTIFIED,
    StabilityReport,
    classify,
    detect_degenerate,
    g_of_r_trace,
    kernel_first_moment,
    limit_constant_critical,
    limit_constant_supercritical,
    norm_sq_GR,
    solution_functional_trace,
    solve_kappa_supercritical,
    solve_theta_subcritical,
)


@dataclass(eq=False)
class Analysis:
    """Everything the pipeline computes for one problem."""

    report: StabilityReport
    r: ResolventTable
    x: SolutionTable
    gr: GridTrace
    kernel: GridTrace
    forcing: GridTrace
    r_sq_int: float


def analyze(spec: ProblemSpec) -> Analysis:
    """Resolvent, statistic, classification, exponents, and limit constants."""
    h, T = spec.h, spec.T
    r = compute_resolvent(spec.mu, h, T)
    rho = decay_rate_estimate(r.trace)
    r_sq_int, _ = l2_norm_sq_tail(r.trace)
    gr = g_of_r_trace(r, spec.nu)
    norm_sq, trunc = norm_sq_GR(gr)
    kernel = GridTrace(h, gr.values**2)
    phi_seg = spec.phi_segment()
    x = deterministic_solution(spec.mu, phi_seg, h, T)
    forcing = GridTrace(h, solution_functional_trace(x, spec.nu).values ** 2)
    degenerate = detect_degenerate(
        spec.mu, spec.nu, spec.phi.sampler() or phi_seg, h, T
    )
    certified = rho > 0.0 and math.isfinite(trunc)
    if degenerate:
        label = DEGENERATE
    elif not certified:
        label = UNCERTIFIED
    else:
        label = classify(norm_sq, trunc, spec.band)
    report = StabilityReport(
        norm_sq_gr=norm_sq,
        classification=label,
        decay_rate=rho,
        truncation_error=trunc,
        degenerate=degenerate,
    )
    if label == SUBCRITICAL:
        report.theta, report.rate_bound = solve_theta_subcritical(kernel, rho)
    elif label == CRITICAL:
        report.m_zeta = kernel_first_moment(kernel)
        report.limit_constant = limit_constant_critical(forcing, r_sq_int, kernel)
    elif label == SUPERCRITICAL:
        report.kappa = solve_kappa_supercritical(kernel)
        report.m_kappa_zeta = kernel_first_moment(kernel, report.kappa)
        report.limit_constant = limit_constant_supercritical(
            forcing, r, kernel, report.kappa
        )
    elif label == DEGENERATE and certified:
        report.limit_constant = 0.0
    return Analysis(report, r, x, gr, kernel, forcing, r_sq_int)


def renewal_mean_square(analysis: Analysis) -> GridTrace:
    """Second moment via the renewal route.

    A certified-degenerate instance has forcing that is zero up to
    discretization bias; the bias would be amplified exponentially whenever
    the kernel mass exceeds one, so the forcing is zeroed and the second
    moment reduces to the squared deterministic trajectory.
    """
    forcing = analysis.forcing
    if analysis.report.degenerate:
        forcing = GridTrace(forcing.step, np.zeros_like(forcing.values))
    y = solve_renewal(RenewalProblem(forcing, analysis.kernel))
    return mean_square_trace(analysis.x.trace, analysis.r, y)


def simulation_config(spec: ProblemSpec) -> SimulationConfig:
    mc = spec.mc
    if mc is None:
        raise ConfigurationError(
            SCHEMA_INVALID,
            "no Monte Carlo settings: add numerical.mc or pass --paths/--seed",
            field="numerical.mc",
        )
    return SimulationConfig(
        step=spec.h,
        horizon=spec.T,
        path_count=mc.paths,
        master_seed=mc.seed,
        worker_count=mc.workers,
    )


def monte_carlo_mean_square(spec: ProblemSpec) -> MomentEstimate:
    cfg = simulation_config(spec)
    return simulate_mean_square(spec.mu, spec.nu, spec.phi_segment(), cfg)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def emit_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    """Fixed column order, 17 significant digits, LF line endings."""
    n = columns[0].size if columns else 0
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            fh.write(",".join(_fmt(col[i]) for col in columns) + "\n")


def report_document(spec: ProblemSpec, report: StabilityReport) -> dict:
    doc = report.to_dict()
    doc["inputs"] = {
        "config_hash": config_hash(spec),
        "alpha": spec.alpha,
        "h": spec.h,
        "T": spec.T,
        "band": spec.band,
    }
    return doc


COMMANDS = ("classify", "resolvent", "meansquare", "simulate", "compare")


def run_pipeline(spec: ProblemSpec, commands: set[str], out_dir: str = ".") -> int:
    """Run the requested stages, writing artifacts into out_dir.

    Returns the exit code: 0 on success, 2 when a classification came back
    UNCERTIFIED.  Configuration and numerical errors propagate to the
    caller; partially written artifacts are removed.
    """
    unknown = set(commands) - set(COMMANDS)
    if unknown:
        raise ValueError(f"unknown commands: {sorted(unknown)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    analysis = None
    renewal_msq = None
    estimate = None
    uncertified = False

    def track(name: str) -> Path:
        p = out / name
        written.append(p)
        return p

    try:
        if commands & {"classify", "meansquare", "compare"}:
            analysis = analyze(spec)
        if "classify" in commands:
            doc = report_document(spec, analysis.report)
            with open(track("report.json"), "w", newline="\n") as fh:
                json.dump(doc, fh, indent=2)
                fh.write("\n")
            uncertified = analysis.report.classification == UNCERTIFIED
        if "resolvent" in commands:
            r = analysis.r if analysis else compute_resolvent(spec.mu, spec.h, spec.T)
            tr = r.trace
            emit_csv(track("resolvent.csv"), ["t", "value"], [tr.times(), tr.values])
        if commands & {"meansquare", "compare"}:
            renewal_msq = renewal_mean_square(analysis)
        if "meansquare" in commands:
            emit_csv(
                track("meansq_renewal.csv"),
                ["t", "value"],
                [renewal_msq.times(), renewal_msq.values],
            )
        if commands & {"simulate", "compare"}:
            estimate = monte_carlo_mean_square(spec)
        if "simulate" in commands:
            emit_csv(
                track("meansq_mc.csv"),
                ["t", "mean_sq", "stderr"],
                [estimate.times(), estimate.mean_sq, estimate.stderr],
            )
            meta = {
                "seed": estimate.master_seed,
                "paths": estimate.path_count,
                "h": spec.h,
                "T": spec.T,
                "diverged_paths": estimate.diverged_paths,
                "valid": estimate.valid,
                "config_hash": config_hash(spec),
            }
            with open(track("meansq_mc_meta.json"), "w", newline="\n") as fh:
                json.dump(meta, fh, indent=2)
                fh.write("\n")
        if "compare" in commands:
            ren = renewal_msq.values
            mc = estimate.mean_sq
            se = estimate.stderr
            diff = mc - ren
            with np.errstate(divide="ignore", invalid="ignore"):
                z = np.where(
                    se > 0.0, diff / se, np.where(diff == 0.0, 0.0, np.inf * np.sign(diff))
                )
            emit_csv(
                track("compare.csv"),
                ["t", "meansq_renewal", "meansq_mc", "mc_stderr", "z"],
                [renewal_msq.times(), ren, mc, se, z],
            )
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    return 2 if uncertified else 0
