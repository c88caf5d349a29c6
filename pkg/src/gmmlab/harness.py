"""Execution harness: turns validated run specs into report artifacts.

Every entry point returns an Artifacts bundle {report dict, named text
files}; callers (service endpoints, CLI) decide where the bytes go. All
outputs are pure functions of (spec, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .checks import run_checks
from .diagnostics import mode_coverage, terminal_residuals, zeta_sweep
from .guidance import run_guided
from .measurement import (condition_on_measurement, posterior_oracle,
                          grid_posterior_masses, ParticleConditional)
from .mixture import GaussianMixture
from .operators import LinearOp
from .reporting import csv_text, json_text, provenance
from .runspec import RunSpec, build_run_objects
from .samplers import ExactScore, ParticleScore, run_unconditional
from .tasks import Task, get_task

__all__ = ["Artifacts", "execute_run", "execute_toy", "execute_sweep",
           "execute_diagnose"]


@dataclass
class Artifacts:
    report: dict
    files: dict[str, str] = field(default_factory=dict)
    ok: bool = True


def _residual_stats(resid: np.ndarray) -> dict:
    return {
        "median": float(np.median(resid)),
        "mean": float(np.mean(resid)),
        "min": float(np.min(resid)),
        "max": float(np.max(resid)),
    }


def _mode_set(prior: GaussianMixture, meas) -> tuple[np.ndarray, np.ndarray]:
    """Posterior modes and their metric: conditioned components when exact
    conditioning exists, prior components otherwise."""
    if meas.gaussian and isinstance(meas.operator, LinearOp):
        post = condition_on_measurement(prior, meas)
        return post.means, post.covariances
    metric = prior.variances if prior.isotropic else prior.covariances
    return prior.means, metric


def _samples_csv(samples: np.ndarray) -> str:
    d = samples.shape[1]
    header = ["chain"] + [f"dim{j}" for j in range(d)]
    rows = [[i, *samples[i]] for i in range(samples.shape[0])]
    return csv_text(header, rows)


def _curves_csv(telemetry: dict[str, np.ndarray]) -> str:
    names = ["step"] + [k for k in ("residual", "grad_norm", "shell_dev",
                                    "score_error") if k in telemetry]
    cols = [telemetry[name] for name in names]
    rows = list(zip(*cols))
    return csv_text(["t"] + names[1:], rows)


def execute_run(spec: RunSpec, workers: int = 1) -> Artifacts:
    """Run the configured (guided or unconditional) chains and report."""
    prior, schedule, operator, meas, guidance = build_run_objects(spec)
    config_dict = spec.model_dump()
    telemetry: dict[str, np.ndarray] = {}
    if guidance is not None:
        run = run_guided(guidance, prior, schedule, spec.solver, meas,
                         spec.n_chains, spec.seed, workers=workers)
        samples = run.samples
        telemetry = run.telemetry
        method = guidance.method
    else:
        src = ExactScore(prior, schedule)
        samples = run_unconditional(src, schedule, spec.solver, spec.n_chains,
                                    spec.seed, prior.dim, workers=workers).samples
        method = "unconditional"

    modes, metric = _mode_set(prior, meas)
    resid = terminal_residuals(meas, samples)
    summary = {
        "method": method,
        "n_chains": spec.n_chains,
        "terminal_residual": _residual_stats(resid),
        "mode_coverage": mode_coverage(samples, modes, metric).tolist(),
        "per_dim_std_mean": float(samples.std(axis=0, ddof=1).mean())
        if spec.n_chains > 1 else 0.0,
    }
    report = {
        "summary": summary,
        "curves": {k: v.tolist() for k, v in telemetry.items()},
        "provenance": provenance(config_dict, spec.seed),
    }
    files = {
        "report.json": json_text(report),
        "provenance.json": json_text(report["provenance"]),
    }
    if spec.outputs.samples:
        files["samples.csv"] = _samples_csv(samples)
    if spec.outputs.curves:
        if telemetry:
            files["curves.csv"] = _curves_csv(telemetry)
        else:
            steps = list(schedule.step_indices())
            files["curves.csv"] = csv_text(["t"], [[s] for s in steps])
    return Artifacts(report=report, files=files)


_TOY_METHODS = ("dps", "dsg", "dmap")


def execute_toy(seed: int = 0, n_chains: int = 200, workers: int = 1) -> Artifacts:
    """The 2-D replication run: oracle, unconditional, guided methods, and
    the particle-conditional chain, with a scatter file for plotting."""
    task = get_task("toy")
    rng = np.random.default_rng([int(seed), 0x70])
    oracle = posterior_oracle(task.prior, task.meas, 200_000, rng)
    masses_is = oracle.mode_masses(task.modes, task.mode_metric)
    masses_grid = grid_posterior_masses(task.prior, task.meas, task.modes,
                                        task.mode_metric)
    pick = rng.choice(oracle.samples.shape[0], size=n_chains, p=oracle.weights)
    scatter_blocks: list[tuple[str, np.ndarray]] = [("oracle", oracle.samples[pick])]

    uncond = run_unconditional(ExactScore(task.prior, task.schedule),
                               task.schedule, task.solver, n_chains, seed,
                               task.dim, workers=workers)
    scatter_blocks.append(("unconditional", uncond.samples))

    from .guidance import GuidanceConfig
    occupancy = {
        "oracle": masses_is.tolist(),
        "unconditional": mode_coverage(uncond.samples, task.modes,
                                       task.mode_metric).tolist(),
    }
    residuals = {}
    curves: dict[str, np.ndarray] = {}
    dps_samples = None
    for method in _TOY_METHODS:
        cfg = GuidanceConfig(method=method, zeta=task.zeta,
                             K=3 if method == "dmap" else 1)
        run = run_guided(cfg, task.prior, task.schedule, task.solver,
                         task.meas, n_chains, seed, workers=workers)
        scatter_blocks.append((method, run.samples))
        occupancy[method] = mode_coverage(run.samples, task.modes,
                                          task.mode_metric).tolist()
        residuals[method] = _residual_stats(
            terminal_residuals(task.meas, run.samples))
        if method == "dps":
            dps_samples = run.samples
            curves = run.telemetry

    particles = ParticleConditional(task.prior, task.meas, 4000,
                                    np.random.default_rng([int(seed), 0x71]))
    cond = run_unconditional(ParticleScore(particles, task.schedule),
                             task.schedule, task.solver, n_chains, seed,
                             task.dim, workers=workers)
    scatter_blocks.append(("conditional", cond.samples))
    occupancy["conditional"] = mode_coverage(cond.samples, task.modes,
                                             task.mode_metric).tolist()
    residuals["conditional"] = _residual_stats(
        terminal_residuals(task.meas, cond.samples))

    config_dict = {"task": "toy", "n_chains": n_chains, "zeta": task.zeta}
    report = {
        "summary": {
            "oracle_masses_importance": masses_is.tolist(),
            "oracle_masses_quadrature": masses_grid.tolist(),
            "oracle_ess": oracle.ess,
            "mode_occupancy": occupancy,
            "terminal_residual": residuals,
        },
        "curves": {k: v.tolist() for k, v in curves.items()},
        "provenance": provenance(config_dict, seed),
    }
    scatter_rows = []
    for name, block in scatter_blocks:
        for row in block:
            scatter_rows.append([*row, name])
    files = {
        "report.json": json_text(report),
        "provenance.json": json_text(report["provenance"]),
        "samples.csv": _samples_csv(dps_samples),
        "curves.csv": _curves_csv(curves),
        "scatter.csv": csv_text(["x1", "x2", "method"], scatter_rows),
    }
    return Artifacts(report=report, files=files)


def execute_sweep(spec: RunSpec, zetas: list[float]) -> Artifacts:
    """Per-zeta summary table on the configured task."""
    prior, schedule, operator, meas, guidance = build_run_objects(spec)
    method = guidance.method if guidance is not None else "dps"
    modes, metric = _mode_set(prior, meas)
    task = Task(name="custom", prior=prior, schedule=schedule,
                solver=spec.solver, meas=meas,
                zeta=guidance.zeta if guidance is not None and
                not isinstance(guidance.zeta, tuple) else 0.05,
                zeta_grid=tuple(zetas), modes=modes, mode_metric=metric)
    rows = zeta_sweep(task, zetas, method=method, n_chains=spec.n_chains,
                      seed=spec.seed)
    table = [{
        "zeta": r.zeta,
        "residual_median": r.residual_median,
        "score_error_mean": r.score_error_mean,
        "score_mean_norm": r.score_mean_norm,
        "spread_ratio": r.spread_ratio,
    } for r in rows]
    config_dict = {"spec": spec.model_dump(), "zetas": list(zetas)}
    report = {
        "summary": {"method": method, "sweep": table},
        "provenance": provenance(config_dict, spec.seed),
    }
    csv_rows = [[r.zeta, r.residual_median,
                 "" if r.score_error_mean is None else r.score_error_mean,
                 r.score_mean_norm,
                 "" if r.spread_ratio is None else r.spread_ratio]
                for r in rows]
    files = {
        "report.json": json_text(report),
        "provenance.json": json_text(report["provenance"]),
        "sweep.csv": csv_text(
            ["zeta", "residual_median", "score_error_mean",
             "score_mean_norm", "spread_ratio"], csv_rows),
    }
    return Artifacts(report=report, files=files)


def execute_diagnose(task: str, seed: int = 0) -> Artifacts:
    """Observation/proposition battery with pass/fail lines per check."""
    results = run_checks(task, seed)
    ok = all(r.passed for r in results)
    report = {
        "summary": {
            "task": task,
            "ok": ok,
            "checks": [{"name": r.name, "passed": r.passed, **r.detail}
                       for r in results],
        },
        "provenance": provenance({"task": task, "diagnose": True}, seed),
    }
    lines = "\n".join(r.line() for r in results) + "\n"
    files = {
        "report.json": json_text(report),
        "provenance.json": json_text(report["provenance"]),
        "checks.txt": lines,
    }
    return Artifacts(report=report, files=files, ok=ok)
