"""Threshold checks behind `lab diagnose` and the acceptance suite.

Each check returns a CheckResult with the measured numbers it judged, so
reports and tests share one implementation and one set of thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diffusion import (DiffusionScaling, diffuse, posterior_mean,
                        posterior_mean_jacobian)
from .diagnostics import (crossentropy_check, mode_coverage, sample_spread,
                          score_error_curve, score_mean_stat, shell_check,
                          terminal_residuals)
from .guidance import (DpsEffectiveScore, GuidanceConfig, GuidedState,
                       dps_effective_score, dsg_step, gluing_gradient,
                       measurement_gradient, run_guided)
from .measurement import (GaussianNoise, MeasurementModel,
                          condition_on_measurement, grid_posterior_masses,
                          measurement_loglik_gradient, ParticleConditional,
                          posterior_oracle)
from .mixture import GaussianMixture, isotropic_mixture
from .operators import LinearOp, mask_op, quadratic_op
from .samplers import (ConditionalScore, ExactScore, ParticleScore, ddpm_step,
                       run_unconditional)
from .schedules import VpSchedule, make_vp_linear
from .tasks import Task, get_task

__all__ = ["CheckResult", "run_checks", "CHECKS_BY_TASK"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extras = ", ".join(f"{k}={v}" for k, v in self.detail.items())
        return f"[{status}] {self.name}: {extras}"


def _rng(seed, *tags) -> np.random.Generator:
    return np.random.default_rng([int(seed)] + [int(t) for t in tags])


def _random_mixture(rng: np.random.Generator, dim: int) -> GaussianMixture:
    k = int(rng.integers(1, 4))
    means = rng.normal(scale=1.5, size=(k, dim))
    variances = rng.uniform(0.05, 1.5, size=k)
    w = rng.uniform(0.2, 1.0, size=k)
    return GaussianMixture(means=means, weights=w / w.sum(), variances=variances)


def _fd_gradient(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    g = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (f(x + e) - f(x - e)) / (2 * h)
    return g


# ----------------------------------------------------------------------
# 1. Effective-score identity (500 random triples, diff < 1e-12)
# ----------------------------------------------------------------------

def check_prop1_identity(seed: int = 0) -> CheckResult:
    rng = _rng(seed, 1)
    worst = 0.0
    for trial in range(500):
        dim = int(rng.integers(1, 5))
        prior = _random_mixture(rng, dim)
        schedule = make_vp_linear(int(rng.integers(5, 40)), 1e-4, 0.02)
        t = int(rng.integers(1, schedule.T + 1))
        m = max(1, dim - 1)
        op = LinearOp(rng.normal(size=(m, dim)))
        meas = MeasurementModel(op, GaussianNoise(0.1), rng.normal(size=m))
        config = GuidanceConfig(method="dps", zeta=float(rng.uniform(0.01, 2.0)))
        x_t = rng.normal(size=dim)
        eps = rng.normal(size=dim)

        eff = DpsEffectiveScore(prior, schedule, meas, config)
        via_score = ddpm_step(eff, schedule, t, x_t, eps=eps).x

        base = ddpm_step(ExactScore(prior, schedule), schedule, t, x_t, eps=eps)
        state = GuidedState(x_source=x_t, x=base.x, step=t, mu=base.mu,
                            sigma=base.sigma)
        grad, _ = measurement_gradient(prior, schedule.scaling_at(t), meas, x_t)
        via_update = base.x - config.zeta * grad

        worst = max(worst, float(np.max(np.abs(via_score - via_update))))
    return CheckResult("prop1_effective_score_identity", worst < 1e-12,
                       {"max_abs_diff": worst, "threshold": 1e-12})


# ----------------------------------------------------------------------
# 2. Gradient oracles vs central finite differences (rel err < 1e-6)
# ----------------------------------------------------------------------

def check_gradient_oracles(seed: int = 0, probes: int = 100) -> CheckResult:
    rng = _rng(seed, 2)
    toy = isotropic_mixture([[-1.0, -1.0], [1.0, 1.0]], 0.09)
    ops = {
        "mask": (toy, mask_op(2, [0]), np.array([0.5])),
        "quad": (toy, quadratic_op(2, out_dim=2, c=0.4, seed=3),
                 np.array([0.3, -0.2])),
    }
    worst = {"measurement_gradient": 0.0, "posterior_mean_jacobian": 0.0,
             "gluing_gradient": 0.0, "score": 0.0}
    for _ in range(probes):
        a = float(rng.uniform(0.3, 0.99))
        scaling = DiffusionScaling(a=a, sigma=float(np.sqrt(1 - a * a)))
        x = rng.normal(scale=1.2, size=2)
        for name, (prior, op, y) in ops.items():
            meas = MeasurementModel(op, GaussianNoise(0.1), y)
            g, _ = measurement_gradient(prior, scaling, meas, x)
            fd = _fd_gradient(lambda z: float(meas.residual(
                posterior_mean(prior, scaling, z))), x)
            rel = np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12)
            worst["measurement_gradient"] = max(worst["measurement_gradient"], rel)
            if op.linear:
                gl = gluing_gradient(prior, scaling, meas, x)
                def glue_obj(z):
                    x0 = posterior_mean(prior, scaling, z)
                    r = op.transpose_apply(op.apply(x0)) - op.transpose_apply(y)
                    return float(np.linalg.norm(r))
                fdg = _fd_gradient(glue_obj, x)
                rel = np.linalg.norm(gl - fdg) / max(np.linalg.norm(fdg), 1e-12)
                worst["gluing_gradient"] = max(worst["gluing_gradient"], rel)
        jac = posterior_mean_jacobian(toy, scaling, x)
        fdj = np.column_stack([
            (posterior_mean(toy, scaling, x + h_e) - posterior_mean(toy, scaling, x - h_e)) / 2e-5
            for h_e in (1e-5 * np.eye(2))])
        rel = np.linalg.norm(jac - fdj) / max(np.linalg.norm(fdj), 1e-12)
        worst["posterior_mean_jacobian"] = max(worst["posterior_mean_jacobian"], rel)
        marg = diffuse(toy, scaling)
        sc = marg.score(x)
        fds = _fd_gradient(lambda z: float(marg.log_density(z)), x)
        rel = np.linalg.norm(sc - fds) / max(np.linalg.norm(fds), 1e-12)
        worst["score"] = max(worst["score"], rel)
    passed = all(v < 1e-6 for v in worst.values())
    return CheckResult("gradient_finite_difference_oracles", passed,
                       {**{k: float(v) for k, v in worst.items()},
                        "threshold": 1e-6})


# ----------------------------------------------------------------------
# 3. Tweedie consistency (1000 triples, rel err < 1e-10)
# ----------------------------------------------------------------------

def check_tweedie_identity(seed: int = 0, triples: int = 1000) -> CheckResult:
    from .diffusion import posterior_mean_responsibility_form
    rng = _rng(seed, 3)
    worst = 0.0
    for _ in range(triples):
        dim = int(rng.integers(1, 6))
        gmm = _random_mixture(rng, dim)
        a = float(rng.uniform(0.05, 1.5))
        sigma = float(rng.uniform(0.05, 3.0))
        scaling = DiffusionScaling(a=a, sigma=sigma)
        x = rng.normal(scale=2.0, size=dim)
        m1 = posterior_mean(gmm, scaling, x)
        m2 = posterior_mean_responsibility_form(gmm, scaling, x)
        rel = np.linalg.norm(m1 - m2) / max(np.linalg.norm(m2), 1e-12)
        worst = max(worst, float(rel))
    return CheckResult("tweedie_two_forms", worst < 1e-10,
                       {"max_rel_err": worst, "threshold": 1e-10})


# ----------------------------------------------------------------------
# 4. Conditional-score decomposition (200 probes, rel err < 1e-9)
# ----------------------------------------------------------------------

def check_score_decomposition(seed: int = 0, probes: int = 200) -> CheckResult:
    rng = _rng(seed, 4)
    toy = isotropic_mixture([[-1.0, -1.0], [1.0, 1.0]], 0.09)
    cases = [
        (toy, MeasurementModel(mask_op(2, [0]), GaussianNoise(0.1), np.array([0.5]))),
        (toy, MeasurementModel(mask_op(2, [0]), GaussianNoise(0.0), np.array([0.5]))),
    ]
    worst = 0.0
    for _ in range(probes):
        prior, meas = cases[int(rng.integers(len(cases)))]
        a = float(rng.uniform(0.2, 1.0))
        scaling = DiffusionScaling(a=a, sigma=float(rng.uniform(0.1, 2.0)))
        x = rng.normal(scale=1.5, size=prior.dim)
        from .measurement import conditional_score_reference
        lhs = conditional_score_reference(prior, meas, scaling, x)
        rhs = diffuse(prior, scaling).score(x) + measurement_loglik_gradient(
            prior, scaling, meas, x)
        rel = np.linalg.norm(lhs - rhs) / max(np.linalg.norm(lhs), 1e-12)
        worst = max(worst, float(rel))
    return CheckResult("conditional_score_decomposition", worst < 1e-9,
                       {"max_rel_err": worst, "threshold": 1e-9})


# ----------------------------------------------------------------------
# 5. Toy replication
# ----------------------------------------------------------------------

def check_toy_replication(seed: int = 0, n_chains: int = 200) -> CheckResult:
    task = get_task("toy")
    oracle = posterior_oracle(task.prior, task.meas, 200_000, _rng(seed, 5))
    masses = oracle.mode_masses(task.modes, task.mode_metric)
    # component 1 is the (+1,+1) mode the measurement favors
    oracle_ok = (abs(masses[1] - 0.512) <= 0.02 and abs(masses[0] - 0.488) <= 0.02)

    dps = run_guided(GuidanceConfig(method="dps", zeta=task.zeta), task.prior,
                     task.schedule, task.solver, task.meas, n_chains, seed)
    occ_dps = mode_coverage(dps.samples, task.modes, task.mode_metric)
    dps_ok = float(np.max(occ_dps)) >= 0.95

    particles = ParticleConditional(task.prior, task.meas, 4000, _rng(seed, 6))
    cond = run_unconditional(ParticleScore(particles, task.schedule),
                             task.schedule, task.solver, n_chains, seed, task.dim)
    occ_cond = mode_coverage(cond.samples, task.modes, task.mode_metric)
    cond_ok = bool(np.all(np.abs(occ_cond - masses) <= 0.05))

    return CheckResult(
        "toy_replication", oracle_ok and dps_ok and cond_ok,
        {"oracle_masses": np.round(masses, 4).tolist(),
         "oracle_ok": oracle_ok,
         "dps_occupancy": np.round(occ_dps, 4).tolist(), "dps_ok": dps_ok,
         "conditional_occupancy": np.round(occ_cond, 4).tolist(),
         "conditional_ok": cond_ok})


# ----------------------------------------------------------------------
# 6. Score-mean battery (zero-mean bounds and zeta monotonicity)
# ----------------------------------------------------------------------

def check_score_mean(task: Task, seed: int = 0) -> CheckResult:
    schedule, dim = task.schedule, task.dim
    uncond_stat = score_mean_stat(ExactScore(task.prior, schedule), schedule,
                                  dim, seed=seed)
    cond_stat = score_mean_stat(ConditionalScore(task.prior, task.meas, schedule),
                                schedule, dim, seed=seed)
    norms = []
    for z in task.zeta_grid:
        eff = DpsEffectiveScore(task.prior, schedule, task.meas,
                                GuidanceConfig(method="dps", zeta=z))
        norms.append(score_mean_stat(eff, schedule, dim, seed=seed).mean_norm)
    nondecreasing = bool(np.all(np.diff(norms) >= 0))
    ratio = norms[-1] / max(uncond_stat.mean_norm, 1e-300)
    passed = (uncond_stat.within_zero_mean_bound
              and cond_stat.within_zero_mean_bound
              and ratio >= 5.0 and nondecreasing)
    return CheckResult(
        f"score_mean_{task.name}", passed,
        {"uncond_norm": round(uncond_stat.mean_norm, 4),
         "uncond_bound": round(uncond_stat.zero_mean_bound, 4),
         "cond_norm": round(cond_stat.mean_norm, 4),
         "cond_bound": round(cond_stat.zero_mean_bound, 4),
         "dps_norms": [round(v, 4) for v in norms],
         "largest_over_uncond": round(ratio, 2), "nondecreasing": nondecreasing})


# ----------------------------------------------------------------------
# 7. Score-error battery (DPS above unconditional; CSE blend below)
# ----------------------------------------------------------------------

def check_score_error(task: Task, seed: int = 0, n_chains: int = 100,
                      n_probes: int = 32) -> CheckResult:
    best_zeta, best_resid = None, np.inf
    for z in task.zeta_grid:
        run = run_guided(GuidanceConfig(method="dps", zeta=z), task.prior,
                         task.schedule, task.solver, task.meas, n_chains, seed)
        med = float(np.median(terminal_residuals(task.meas, run.samples)))
        if med < best_resid:
            best_zeta, best_resid = z, med

    uncond = ExactScore(task.prior, task.schedule)
    cond = ConditionalScore(task.prior, task.meas, task.schedule)
    lam = 0.25
    methods = {
        "dps": DpsEffectiveScore(task.prior, task.schedule, task.meas,
                                 GuidanceConfig(method="dps", zeta=best_zeta)),
        "uncond": uncond,
        "cse_blend": lambda x, i: (1 - lam) * cond(x, i) + lam * uncond(x, i),
    }
    curves = score_error_curve(methods, task, n_probes, seed)
    dps_avg = float(np.mean(curves["dps"]))
    unc_avg = float(np.mean(curves["uncond"]))
    blend_below = bool(np.all(curves["cse_blend"] <= curves["uncond"] + 1e-12))
    passed = (dps_avg > unc_avg) and blend_below
    return CheckResult(
        f"score_error_{task.name}", passed,
        {"best_zeta": best_zeta, "best_residual": round(best_resid, 4),
         "dps_avg_error": round(dps_avg, 4), "uncond_avg_error": round(unc_avg, 4),
         "blend_below_uncond_everywhere": blend_below})


# ----------------------------------------------------------------------
# 8. Spread battery (DPS/oracle < 0.5; oracle control ~ 1)
# ----------------------------------------------------------------------

def _best_residual_zeta(task: Task, seed: int, n_chains: int = 50) -> float:
    """The working-range step size: grid value with the lowest median residual."""
    best, best_resid = task.zeta_grid[0], np.inf
    for z in task.zeta_grid:
        run = run_guided(GuidanceConfig(method="dps", zeta=z), task.prior,
                         task.schedule, task.solver, task.meas, n_chains, seed)
        med = float(np.median(terminal_residuals(task.meas, run.samples)))
        if med < best_resid:
            best, best_resid = z, med
    return best


def check_spread(task: Task, seed: int = 0, k: int = 50) -> CheckResult:
    posterior = condition_on_measurement(task.prior, task.meas)
    oracle_a = posterior.sample(k, _rng(seed, 81))
    oracle_b = posterior.sample(k, _rng(seed, 82))
    zeta = _best_residual_zeta(task, seed, n_chains=k)
    run = run_guided(GuidanceConfig(method="dps", zeta=zeta), task.prior,
                     task.schedule, task.solver, task.meas, k, seed)
    dps_ratio = sample_spread(run.samples, oracle_a).ratio
    control = sample_spread(oracle_b, oracle_a).ratio
    passed = dps_ratio < 0.5 and abs(control - 1.0) < 0.25
    return CheckResult(
        f"sample_spread_{task.name}", passed,
        {"working_zeta": zeta, "dps_over_oracle": round(dps_ratio, 4),
         "oracle_control": round(control, 4)})


# ----------------------------------------------------------------------
# 9. Thin-shell concentration (d=1000)
# ----------------------------------------------------------------------

def check_shell(seed: int = 0, d: int = 1000, n: int = 10_000) -> CheckResult:
    res = shell_check(sigma=1.0, d=d, n=n, seed=seed)
    q95 = res.deviation_quantile(0.95)
    return CheckResult("thin_shell_d1000", q95 < 0.05,
                       {"q95_abs_deviation": round(q95, 4), "threshold": 0.05,
                        "fluctuation_scale": round(1 / np.sqrt(2 * d), 4)})


# ----------------------------------------------------------------------
# 10. Sphere-argmax property of the projected-gradient step
# ----------------------------------------------------------------------

def check_dsg_argmax(seed: int = 0, trials: int = 100) -> CheckResult:
    prior = isotropic_mixture([[-1.0, -1.0], [1.0, 1.0]], 0.09)
    schedule = make_vp_linear(400, 1e-4, 0.02)
    op = mask_op(2, [0])
    meas = MeasurementModel(op, GaussianNoise(0.1), np.array([0.5]))
    config = GuidanceConfig(method="dsg", zeta=1.0, dsg_mix=1.0)
    rng = _rng(seed, 10)
    hits = 0
    angles = np.linspace(0.0, 2 * np.pi, 10_000, endpoint=False)
    ring = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    for _ in range(trials):
        t = int(rng.integers(2, 8))  # late steps: sigma_trans is small
        scaling = schedule.scaling_at(t)
        tp = schedule.transition_params(t)
        x_t = diffuse(prior, scaling).sample(1, rng)[0]
        base = ddpm_step(ExactScore(prior, schedule), schedule, t, x_t,
                         eps=rng.standard_normal(2))
        state = GuidedState(x_source=x_t, x=base.x, step=t, mu=base.mu,
                            sigma=base.sigma)
        out = dsg_step(state, config, prior, scaling, meas, rng)
        radius = np.sqrt(2.0) * tp.sigma_trans
        # brute-force argmax of log p(y|.) over the circle around mu
        circle = base.mu[None, :] + radius * ring
        x0_hat = posterior_mean(prior, schedule.scaling_at(t - 1), circle)
        obj = -np.asarray(meas.residual(x0_hat))
        theta_star = angles[int(np.argmax(obj))]
        theta_out = float(np.arctan2(*(out - base.mu)[::-1]))
        diff = abs((theta_out - theta_star + np.pi) % (2 * np.pi) - np.pi)
        if diff <= 1e-2:
            hits += 1
    return CheckResult("dsg_sphere_argmax", hits >= 99,
                       {"hits": hits, "trials": trials, "threshold": 99})


# ----------------------------------------------------------------------
# 11. Cross-entropy implication
# ----------------------------------------------------------------------

def check_crossentropy(task: Task, seed: int = 0, n: int = 10_000) -> CheckResult:
    t = task.schedule.T // 2 if isinstance(task.schedule, VpSchedule) else None
    if t is None:
        raise ValueError("cross-entropy check runs on VP tasks")
    rows = crossentropy_check(task.prior, task.meas, task.schedule, t,
                              lambdas=(0.0, 0.25, 0.5, 0.75), n=n, seed=seed)
    violations = [r.lam for r in rows if r.violation]
    lam0 = rows[0]
    return CheckResult(
        f"crossentropy_{task.name}", len(violations) == 0,
        {"violations": violations,
         "lam0_premise": lam0.premise, "lam0_conclusion": lam0.conclusion,
         "rows": [{"lam": r.lam, "h_gap": round(r.h_p - r.h_q, 3),
                   "loglik_gap": round(r.loglik_q - r.loglik_p, 3)}
                  for r in rows]})


# ----------------------------------------------------------------------
# 12./13. Paired-method comparisons
# ----------------------------------------------------------------------

def _posterior_logdensity(task: Task, samples: np.ndarray) -> np.ndarray:
    if task.meas.gaussian and isinstance(task.meas.operator, LinearOp):
        posterior = condition_on_measurement(task.prior, task.meas)
        return np.atleast_1d(posterior.log_density(samples))
    return (np.atleast_1d(task.prior.log_density(samples))
            + np.atleast_1d(task.meas.log_likelihood(samples)))


def check_dmap_improves(task: Task, seed: int = 0, n_chains: int = 100) -> CheckResult:
    dps = run_guided(GuidanceConfig(method="dps", zeta=task.zeta), task.prior,
                     task.schedule, task.solver, task.meas, n_chains, seed)
    dmap = run_guided(GuidanceConfig(method="dmap", zeta=task.zeta, K=3),
                      task.prior, task.schedule, task.solver, task.meas,
                      n_chains, seed)
    r_dps = float(np.median(terminal_residuals(task.meas, dps.samples)))
    r_dmap = float(np.median(terminal_residuals(task.meas, dmap.samples)))
    ld_dps = float(np.median(_posterior_logdensity(task, dps.samples)))
    ld_dmap = float(np.median(_posterior_logdensity(task, dmap.samples)))
    passed = (r_dmap <= r_dps) and (ld_dmap >= ld_dps)
    return CheckResult(
        f"dmap_improves_{task.name}", passed,
        {"dps_residual": round(r_dps, 5), "dmap_residual": round(r_dmap, 5),
         "dps_logdensity": round(ld_dps, 3), "dmap_logdensity": round(ld_dmap, 3)})


def check_cse_improves(task: Task, seed: int = 0, n_chains: int = 100) -> CheckResult:
    oracle_occ = _oracle_occupancy(task, seed)
    dmap = run_guided(GuidanceConfig(method="dmap", zeta=task.zeta, K=3),
                      task.prior, task.schedule, task.solver, task.meas,
                      n_chains, seed)
    cse = run_guided(GuidanceConfig(method="cse_dmap", zeta=task.zeta, K=3,
                                    cse_lambda=0.5),
                     task.prior, task.schedule, task.solver, task.meas,
                     n_chains, seed)
    r_dmap = float(np.median(terminal_residuals(task.meas, dmap.samples)))
    r_cse = float(np.median(terminal_residuals(task.meas, cse.samples)))
    occ_dmap = mode_coverage(dmap.samples, task.modes, task.mode_metric)
    occ_cse = mode_coverage(cse.samples, task.modes, task.mode_metric)
    gap_dmap = float(np.abs(occ_dmap - oracle_occ).sum())
    gap_cse = float(np.abs(occ_cse - oracle_occ).sum())
    passed = (r_cse <= r_dmap) and (gap_cse <= gap_dmap)
    return CheckResult(
        f"cse_improves_{task.name}", passed,
        {"dmap_residual": round(r_dmap, 5), "cse_residual": round(r_cse, 5),
         "oracle_occupancy": np.round(oracle_occ, 3).tolist(),
         "dmap_occupancy_gap": round(gap_dmap, 3),
         "cse_occupancy_gap": round(gap_cse, 3)})


def _oracle_occupancy(task: Task, seed: int) -> np.ndarray:
    if task.meas.gaussian and isinstance(task.meas.operator, LinearOp):
        posterior = condition_on_measurement(task.prior, task.meas)
        samples = posterior.sample(20_000, _rng(seed, 13))
        return mode_coverage(samples, task.modes, task.mode_metric)
    oracle = posterior_oracle(task.prior, task.meas, 100_000, _rng(seed, 13))
    return oracle.mode_masses(task.modes, task.mode_metric)


# ----------------------------------------------------------------------
# Batteries
# ----------------------------------------------------------------------

def run_checks(task_name: str, seed: int = 0) -> list[CheckResult]:
    """The diagnose battery for one task: shared identities plus the
    task-appropriate observation/proposition analogs."""
    results = [
        check_prop1_identity(seed),
        check_tweedie_identity(seed, triples=200),
        check_gradient_oracles(seed, probes=25),
        check_score_decomposition(seed, probes=100),
        check_shell(seed),
        check_dsg_argmax(seed),
    ]
    task = get_task(task_name)
    if task_name == "toy":
        results.append(check_toy_replication(seed))
        results.append(check_dmap_improves(task, seed))
    else:
        results.append(check_score_mean(task, seed))
        results.append(check_score_error(task, seed))
        results.append(check_spread(task, seed))
        results.append(check_crossentropy(task, seed))
        results.append(check_dmap_improves(task, seed))
        if task_name == "bimodal64":
            results.append(check_cse_improves(task, seed))
    return results


CHECKS_BY_TASK = {
    "toy": ["prop1", "tweedie", "gradients", "decomposition", "shell",
            "dsg_argmax", "toy_replication", "dmap_improves"],
    "bimodal64": ["prop1", "tweedie", "gradients", "decomposition", "shell",
                  "dsg_argmax", "score_mean", "score_error", "spread",
                  "crossentropy", "dmap_improves", "cse_improves"],
    "blur256": ["prop1", "tweedie", "gradients", "decomposition", "shell",
                "dsg_argmax", "score_mean", "score_error", "spread",
                "crossentropy", "dmap_improves"],
}
