"""Named, seeded experiments with machine-readable pass/fail checks.

Each experiment takes ``seed`` plus keyword parameters and returns an
``ExperimentResult``. The CLI and the acceptance tests share this registry.
"""

from __future__ import annotations

import inspect
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.special import ndtr

from . import models as M
from . import rng as _rng
from .errors import UsageError
from .geometrical_sde import probe_group_points, probe_points, solve_discrete, solve_grid
from .noise_drivers import (
    AlphaStable,
    AlphaStableMeasure,
    CharacteristicTriplet,
    DriverSpec,
    point_mass,
    sample,
    uniform_ball_jumps,
    zero_measure,
)
from .paths import CadlagPath, PathStyle
from .reduction import reconstruct, solve_gauge_eta, triangular_check
from .schemes import (
    DiscretizedNoise,
    brownian_noise,
    cumulative_iterated_integral,
    euler_sde,
    euler_solve,
    gauge_rotate_milstein,
    milstein_group_path,
    milstein_solve,
    rotate_along_solution,
)
from .stats_verify import ks_one_sample, ks_two_sample
from .symmetry_analysis import (
    brownian_determining_residual,
    check_discrete_gauge,
    check_levy_gauge,
    check_levy_time,
    determining_residual,
    euler_determining_residual,
    is_symmetry_pathwise,
    milstein_determining_residual,
)
from .transformations import (
    R2,
    InfinitesimalStochasticTransformation,
    StochasticTransformation,
    apply_E,
    apply_P,
    bracket,
    compose,
    euler_action,
    euler_time_action,
    flow,
    invert,
    planar_affine_action,
    power_time_action,
    push_forward,
    rotation_action,
    rotation_matrix,
    time_change,
)

__all__ = ["Check", "ExperimentResult", "REGISTRY", "run_experiment", "experiment_names"]


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    comparison: str = "<="
    note: str = ""

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.value):
            return False
        if self.comparison == "<=":
            return self.value <= self.threshold
        return self.value >= self.threshold

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": float(self.value),
            "comparison": self.comparison,
            "threshold": float(self.threshold),
            "passed": self.passed,
            "note": self.note,
        }

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark} {self.name}: {self.value:.3e} {self.comparison} {self.threshold:.3e}"


@dataclass
class ExperimentResult:
    name: str
    seed: int
    params: dict
    checks: list[Check]
    artifacts: dict[str, CadlagPath] = field(default_factory=dict, repr=False)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "experiment": self.name,
            "seed": self.seed,
            "params": _jsonable(self.params),
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "details": _jsonable(self.details),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def le(name, value, threshold, note=""):
    return Check(name, float(value), float(threshold), "<=", note)


def ge(name, value, threshold, note=""):
    return Check(name, float(value), float(threshold), ">=", note)


# ---------------------------------------------------------------------------
# planar affine example


def sec6_determining(seed: int = 0, n_points: int = 200, perturbation: float = 0.1, box: float = 1.0):
    sde = M.planar_affine_sde()
    act = planar_affine_action()
    xs = probe_points(n_points, 2, -box, box, seed=seed)
    zs = probe_group_points(n_points, sde.driver, seed=seed + 1)
    V = M.rotation_generator()
    exact = determining_residual(sde, V, act, None, xs, zs)
    numeric = replace(sde, dz_fn=None, dx_fn=None, dzz_fn=None)
    fd_res = determining_residual(numeric, V, act, None, xs, zs)
    bad = determining_residual(sde, M.rotation_generator(1.0 + perturbation), act, None, xs, zs)
    zero = determining_residual(sde, InfinitesimalStochasticTransformation(2, 2, lambda x: 0 * x), act, None, xs, zs)
    checks = [
        le("residual_analytic", exact.max_abs, 1e-9),
        le("residual_finite_difference", fd_res.max_abs, 1e-6),
        ge("perturbed_residual", bad.max_abs, 1e-2, "C scaled by 1 + perturbation must be detected"),
        le("zero_generator_residual", zero.max_abs, 1e-12),
    ]
    return checks, {}, {"analytic": exact.to_dict(), "perturbed": bad.to_dict()}


def sec6_pathwise(seed: int = 0, angles=(0.3, math.pi / 2), n_paths: int = 100, steps: int = 1000, x0=(1.0, 0.5)):
    sde = M.planar_affine_sde()
    act = planar_affine_action()
    driver = M.planar_discrete_driver(steps, seed)
    checks = []
    for a in angles:
        rep = is_symmetry_pathwise(sde, M.rotation_transformation(a), driver, n_paths, x0, act)
        checks.append(le(f"pathwise_residual[a={a:.4g}]", rep.max_residual, 1e-10))
    rep = is_symmetry_pathwise(sde, StochasticTransformation.identity(2, 2), driver, n_paths, x0, act)
    checks.append(le("identity_residual", rep.max_residual, 1e-12, "rounding from re-accumulating the driver"))
    rep = is_symmetry_pathwise(sde, M.state_rotation_only(angles[0]), driver, min(n_paths, 10), x0, act)
    checks.append(ge("state_only_rotation_residual", rep.max_residual, 1e-2, "rotating X without the noise is not a symmetry"))
    z = sample(driver, 1)
    x = solve_discrete(sde, z, x0)
    xp, _ = apply_P(M.rotation_transformation(angles[0]), x, z, act)
    return checks, {"X": x[0], "X_rotated": xp[0]}, {}


def sec6_et_invariance(seed: int = 0, angles=(0.3, 1.0), n_points: int = 200):
    sde = M.planar_affine_sde()
    act = planar_affine_action()
    xs = probe_points(n_points, 2, seed=seed)
    zs = probe_group_points(n_points, sde.driver, seed=seed + 1)
    base = sde(xs, zs)
    checks = []
    for a in angles:
        E = apply_E(M.rotation_transformation(a), sde, act)
        checks.append(le(f"closed_form_rotation[a={a:.4g}]", np.abs(E(xs, zs) - base).max(), 1e-9))
        E = apply_E(flow(M.rotation_generator(), a), sde, act)
        checks.append(le(f"flow_rotation[a={a:.4g}]", np.abs(E(xs, zs) - base).max(), 1e-9))
    E = apply_E(M.gauge_fixing_transformation(), sde, act)
    checks.append(le("gauge_fixed_closed_form", np.abs(E(xs, zs) - M.gauge_fixed_sde()(xs, zs)).max(), 1e-9))
    zs2 = zs.copy()
    zs2[:, [1, 3]] += 0.3
    checks.append(le("gauge_fixed_ignores_second_column", np.abs(E(xs, zs2) - E(xs, zs)).max(), 1e-12))
    return checks, {}, {}


def sec6_reduction_b(seed: int = 0, n_per_axis: int = 20, box: float = 1.0, hole: float = 0.1, n_pushforward: int = 40):
    V = M.rotation_generator()
    sol = solve_gauge_eta(V, [1.0, 0.0], [(-box, box)] * 2, n_per_axis, exclude=lambda p: np.linalg.norm(p, axis=-1) < hole)
    v = sol.valid
    pts = sol.points[v]
    b_err = np.abs(sol.B[v] - M.radial_frame(pts)).max()
    T = sol.transformation()
    W = push_forward(T, V)
    sub = pts[_rng.generator(seed, 5).choice(pts.shape[0], min(n_pushforward, pts.shape[0]), replace=False)]
    c_err = np.abs(W.C(sub)).max()
    checks = [
        le("B_vs_closed_form", b_err, 1e-6),
        le("eta_minus_one", np.abs(sol.eta[v] - 1.0).max(), 1e-9),
        le("pushforward_C", c_err, 1e-5),
        le("pushforward_Y_unchanged", np.abs(W.Y(sub) - V.Y(sub)).max(), 1e-9),
    ]
    return checks, {}, {"grid_points": int(v.sum())}


def sec6_triangular(seed: int = 0, n_points: int = 200, n_paths: int = 20, steps: int = 1000, x0=(1.0, 0.5)):
    polar = M.polar_sde()
    pts = np.stack([probe_points(n_points, 1, -np.pi, np.pi, seed)[:, 0], probe_points(n_points, 1, 0.1, 2.0, seed + 3)[:, 0]], -1)
    zs = probe_group_points(n_points, polar.driver, radius=0.3, seed=seed + 1)
    tri = triangular_check(polar, 1, pts, zs, seed=seed)
    planar = triangular_check(M.planar_affine_sde(), 1, probe_points(n_points, 2, seed=seed), zs, seed=seed)

    # direct simulation, then gauge fixing of the driver
    sde = M.planar_affine_sde()
    act = planar_affine_action()
    z = sample(M.planar_discrete_driver(steps, seed), n_paths)
    X = solve_discrete(sde, z, x0)
    _, zp = apply_P(M.gauge_fixing_transformation(), X, z, act)
    dz = zp.increments()
    # reduced recursion for rho alone
    rho = np.empty(X.values.shape[:-1])
    rho[..., 0] = float(np.sum(np.square(x0)))
    for l in range(steps):
        rho[..., l + 1] = M.polar_radius_step(rho[..., l], dz[..., l, :])
    reduced = CadlagPath(z.times, rho[..., None], PathStyle.DISCRETE_JUMP)
    theta0 = math.atan2(x0[1], x0[0])
    full = reconstruct(reduced, [lambda lower, d: M.polar_angle_increment(lower[..., -1], d)], zp, [theta0])
    Xr = M.polar_inverse(full.values)
    recon = np.abs(Xr - X.values).max()
    direct = M.unwrap_polar(M.polar_map(X.values))
    checks = [
        le("polar_triangular_residual", tri.max_residual, 1e-9),
        ge("planar_not_triangular", planar.max_residual, 1e-3, "the original coordinates are not triangular"),
        le("reconstruction_vs_direct", recon, 1e-8),
        le("rho_vs_direct", np.abs(rho - (X.values**2).sum(-1)).max(), 1e-8),
        le("theta_vs_unwrapped_angle", np.abs(full.values[..., 0] - direct[..., 0]).max(), 1e-8),
    ]
    return checks, {"X": X[0], "polar_reconstructed": full[0]}, {"triangular": tri.to_dict()}


def sec6_bessel(seed: int = 0, n_paths: int = 100_000, dt: float = 1e-3, horizon: float = 1.0, check_times=(0.5, 1.0), chunk: int = 2000, x0=(1.0, 0.0), n_sigma: float = 3.0):
    sde = M.planar_affine_sde()
    steps = int(round(horizon / dt))
    times = np.linspace(0.0, horizon, steps + 1)
    idx = [int(round(t / dt)) for t in check_times]
    gen = _rng.generator(seed, 7)
    sums = np.zeros(len(idx))
    sq = np.zeros(len(idx))
    done = 0
    first = None
    while done < n_paths:
        n = min(chunk, n_paths - done)
        X = solve_grid(sde, M.bessel_driver(gen, n, times), x0)
        R = (X.values[:, idx, :] ** 2).sum(-1)
        sums += R.sum(0)
        sq += (R**2).sum(0)
        if first is None:
            first = CadlagPath(times, (X.values[0] ** 2).sum(-1)[:, None], PathStyle.GRID_SAMPLED)
        done += n
    checks = []
    r0 = float(np.sum(np.square(x0)))
    for t, s, q in zip(check_times, sums, sq):
        mean = s / n_paths
        se = math.sqrt(max(q / n_paths - mean**2, 0.0) * n_paths / (n_paths - 1) / n_paths)
        checks.append(le(f"mean_R[t={t:g}]_in_stderr", abs(mean - (r0 + 2 * t)) / se, n_sigma, f"mean {mean:.5f}, target {r0 + 2 * t:g}"))
    return checks, {"R": first}, {}


# ---------------------------------------------------------------------------
# driver symmetries


def _cauchy_cdf(scale):
    return lambda x: 0.5 + np.arctan(np.asarray(x) / scale) / np.pi


def alpha_stable_time(seed: int = 0, alphas=(0.7, 1.0, 1.5), rates=(2.0, 0.5), n_seeds: int = 100, steps: int = 1000, level: float = 0.01, min_pass: int = 95):
    checks = []
    dt = 1.0 / steps
    grid = np.linspace(0.0, 1.0, steps + 1)
    for alpha in alphas:
        time = power_time_action(1, 1.0 / alpha)
        for r in rates:
            passes = cauchy_passes = 0
            for s in range(seed, seed + n_seeds):
                z = sample(DriverSpec(AlphaStable(alpha, 1), s, grid))
                incs = time(r, z.increments())
                moved = CadlagPath(z.times, z.descriptor.accumulate(incs), z.style, z.descriptor)
                retimed = time_change(moved, np.full(steps, r))
                ref = sample(DriverSpec(AlphaStable(alpha, 1), 1_000_003 + s, r * grid))
                a = np.diff(retimed.values[:, 0])
                passes += ks_two_sample(a, np.diff(ref.values[:, 0]), level).passed
                if alpha == 1.0:
                    cauchy_passes += ks_one_sample(a, _cauchy_cdf(r * dt), level).passed
            checks.append(ge(f"ks_pass_count[alpha={alpha:g},r={r:g}]", passes, min_pass))
            if alpha == 1.0:
                checks.append(ge(f"cauchy_pass_count[r={r:g}]", cauchy_passes, min_pass))
        tri = CharacteristicTriplet(np.zeros(1), np.zeros((1, 1)), AlphaStableMeasure(alpha, 1))
        checks.append(le(f"triplet_time_invariance[alpha={alpha:g}]", 0.0 if check_levy_time(tri, time, list(rates)).passed else 1.0, 0.0))
    bm = CharacteristicTriplet(np.zeros(2), 0.5 * np.eye(2), zero_measure(2))
    checks.append(le("brownian_sqrt_scaling", 0.0 if check_levy_time(bm, power_time_action(2, 0.5), list(rates)).passed else 1.0, 0.0))
    wrong = check_levy_time(bm, power_time_action(2, 1.0), [2.0]).conditions["diffusion"]
    checks.append(ge("brownian_linear_scaling_rejected", wrong.statistic, 0.1))
    return checks, {}, {}


def levy_gauge_isotropic(seed: int = 0, n_rotations: int = 5, mc_samples: int = 20_000, diffusion: float = 1.5, rate: float = 3.0, radius: float = 1.5):
    gen = _rng.generator(seed, 11)
    gs = rotation_matrix(gen.uniform(-np.pi, np.pi, n_rotations))
    act = rotation_action(2)
    iso = CharacteristicTriplet(np.zeros(2), 0.5 * diffusion * np.eye(2), uniform_ball_jumps(2, rate, radius))
    rep = check_levy_gauge(iso, act, gs, mc_samples, seed)
    checks = [le(f"isotropic_{k}", c.statistic, c.threshold, c.method) for k, c in rep.conditions.items()]
    aniso = CharacteristicTriplet(np.zeros(2), np.diag([1.0, 2.0]), zero_measure(2))
    bad = check_levy_gauge(aniso, act, rotation_matrix(np.pi / 4), mc_samples, seed).conditions["diffusion"]
    checks.append(ge("anisotropic_diffusion_rejected", bad.statistic, 1e-3, "A0 = diag(1, 2), 45 degree rotation"))
    atom = CharacteristicTriplet(np.zeros(2), np.eye(2), point_mass([0.5, 0.0], 1.0))
    bad = check_levy_gauge(atom, act, rotation_matrix(np.pi / 3), mc_samples, seed).conditions["measure"]
    checks.append(ge("point_mass_measure_rejected", bad.statistic / bad.threshold, 1.0))
    return checks, {}, {"isotropic": rep.to_dict()}


def discrete_gauge_conjugation(seed: int = 0, n_rotations: int = 4, mc_samples: int = 5000):
    act = planar_affine_action()
    gs = M.haar_orthogonal(_rng.generator(seed, 13), n_rotations)
    good = check_discrete_gauge(M.conjugation_invariant_sampler(0.3, 0.5), act, gs, mc_samples, seed)
    bad = check_discrete_gauge(M.anisotropic_sampler(), act, gs, mc_samples, seed)
    checks = [le(f"invariant_{k}", c.statistic, c.threshold) for k, c in good.conditions.items()]
    c = bad.conditions["coordinates"]
    checks.append(ge("anisotropic_rejected", c.statistic / c.threshold, 1.0))
    return checks, {}, {"invariant": good.to_dict(), "anisotropic": bad.to_dict()}


# ---------------------------------------------------------------------------
# schemes


def euler_gauge(seed: int = 0, n_seeds: int = 100, steps: int = 1000, level: float = 0.01, min_pass: int = 95, x0=(1.0, 0.5)):
    sde = M.isotropic_noise_sde()
    times = np.linspace(0.0, 1.0, steps + 1)
    dt = times[1]
    passes = 0
    for s in range(seed, seed + n_seeds):
        noise = brownian_noise(2, times, s)
        _, rotated = rotate_along_solution(sde, noise, x0, M.radial_frame)
        passes += ks_one_sample(rotated.dW / math.sqrt(dt), ndtr, level).passed
    return [ge("ks_pass_count", passes, min_pass, f"of {n_seeds} seeds")], {}, {}


def milstein_gauge_identity(seed: int = 0, coarse_steps: int = 10, substeps: int = 1000, n_sequences: int = 20, k: int = 2):
    times = np.linspace(0.0, 1.0, coarse_steps + 1)
    worst = 0.0
    for s in range(seed, seed + n_sequences):
        noise, fine, W = brownian_noise(k, times, s, substeps=substeps)
        gen = _rng.generator(s, 29)
        Q, _ = np.linalg.qr(gen.standard_normal((coarse_steps, k, k)))
        # rotate the fine path piecewise: increments inside coarse step l get B_l
        owner = np.repeat(np.arange(coarse_steps), substeps)
        dw = np.diff(W, axis=-2)
        dw_rot = np.einsum("lab,lb->la", Q[owner], dw)
        W_rot = np.concatenate([np.zeros((1, k)), np.cumsum(dw_rot, axis=0)])
        direct = cumulative_iterated_integral(fine, W_rot, times)
        path = milstein_group_path(gauge_rotate_milstein(Q, noise))
        via_group = path.descriptor.milstein_parts(path.values)[2]
        rel = np.abs(via_group - direct).max() / max(np.abs(direct).max(), 1e-300)
        worst = max(worst, rel)
    # the Milstein path's own jumps reproduce (dt, dW, dWW)
    path = milstein_group_path(noise)
    jumps = path.descriptor.increments(path.values)
    ref = path.descriptor.milstein_join(noise.dt, noise.dW, noise.dWW)
    return [
        le("relative_error", worst, 1e-12),
        le("group_jump_consistency", np.abs(jumps - ref).max(), 1e-12),
    ], {}, {}


def _scheme_grid(n, m, k, seed, dt_range=(1e-4, 1e-1)):
    gen = _rng.generator(seed, 31)
    xs = gen.uniform(-1.0, 1.0, (n, m))
    dt = gen.uniform(*dt_range, n)
    dW = gen.standard_normal((n, k)) * np.sqrt(dt)[:, None]
    dWW = gen.standard_normal((n, k, k)) * dt[:, None, None]
    return xs, dt, dW, dWW


def euler_determining(seed: int = 0, n_points: int = 200):
    xs, dt, dW, _ = _scheme_grid(n_points, 2, 2, seed)
    V = M.rotation_generator()
    checks = [
        le("brownian_residual_isotropic", brownian_determining_residual(M.isotropic_noise_sde(), V, xs).max_abs, 1e-9),
        le("brownian_residual_radial", brownian_determining_residual(M.radial_noise_sde(), V, xs).max_abs, 1e-6),
        le("euler_residual_isotropic", euler_determining_residual(M.isotropic_noise_sde(), V, xs, dt, dW).max_abs, 1e-9),
        le("euler_residual_radial", euler_determining_residual(M.radial_noise_sde(), V, xs, dt, dW).max_abs, 1e-9),
    ]
    x1, dt1, dW1, _ = _scheme_grid(n_points, 1, 1, seed + 1)
    quad = euler_determining_residual(M.scalar_noise_sde(), M.quadratic_field(), x1, dt1, dW1)
    checks.append(le("quadratic_residual_minus_dW2", np.abs(quad.values - dW1**2).max(), 1e-12, "counterexample residual against dW^2"))
    checks.append(le("quadratic_residual_minus_2x_dW_plus_dW2", np.abs(quad.values - (2 * x1 * dW1 + dW1**2)).max(), 1e-12, "full expansion of the residual"))
    return checks, {}, {}


def milstein_determining(seed: int = 0, n_points: int = 200):
    xs, dt, dW, dWW = _scheme_grid(n_points, 2, 2, seed)
    V = M.rotation_generator()
    x1, dt1, dW1, dWW1 = _scheme_grid(n_points, 1, 3, seed + 1)
    circle = M.circle_noise_sde()
    Vc = M.circle_noise_symmetry()
    checks = [
        le("milstein_residual_isotropic", milstein_determining_residual(M.isotropic_noise_sde(), V, xs, dt, dW, dWW).max_abs, 1e-9),
        le("milstein_residual_radial", milstein_determining_residual(M.radial_noise_sde(), V, xs, dt, dW, dWW).max_abs, 1e-9),
        le("counterexample_is_sde_symmetry", brownian_determining_residual(circle, Vc, x1).max_abs, 1e-6),
        ge("counterexample_milstein_residual", milstein_determining_residual(circle, Vc, x1, dt1, dW1, dWW1).max_abs, 1e-3, "state-dependent C"),
    ]
    return checks, {}, {}


def convergence_order(seed: int = 0, n_paths: int = 1000, levels=(4, 5, 6, 7), mu: float = 1.0, lam: float = 2.0, x0: float = 1.0):
    sde = M.gbm_sde(mu, lam)
    finest = max(levels)
    nf = 2**finest
    gen = _rng.generator(seed, 37)
    dWf = gen.standard_normal((n_paths, nf, 1)) * math.sqrt(1.0 / nf)
    exact = x0 * np.exp(mu - 0.5 * lam**2 + lam * dWf.sum(axis=1)[:, 0])
    h = 2.0 ** -np.asarray(levels, dtype=float)
    slopes = {}
    errors = {}
    for name, solve in (("euler", euler_solve), ("milstein", milstein_solve)):
        errs = []
        for p in levels:
            n = 2**p
            dW = dWf.reshape(n_paths, n, nf // n, 1).sum(axis=2)
            X = solve(sde, DiscretizedNoise.scalar(np.linspace(0.0, 1.0, n + 1), dW), [x0])
            errs.append(float(np.abs(X.values[:, -1, 0] - exact).mean()))
        slopes[name] = float(np.polyfit(np.log(h), np.log(errs), 1)[0])
        errors[name] = errs
    checks = [
        le("euler_slope_deviation", abs(slopes["euler"] - 0.5), 0.2, f"slope {slopes['euler']:.3f}"),
        le("milstein_slope_deviation", abs(slopes["milstein"] - 1.0), 0.2, f"slope {slopes['milstein']:.3f}"),
    ]
    return checks, {}, {"slopes": slopes, "errors": errors, "steps": h.tolist()}


# ---------------------------------------------------------------------------
# transformation algebra


def _random_transformation(gen) -> StochasticTransformation:
    A = np.eye(2) + 0.3 * gen.standard_normal((2, 2))
    while abs(np.linalg.det(A)) < 0.3:
        A = np.eye(2) + 0.3 * gen.standard_normal((2, 2))
    Ainv = np.linalg.inv(A)
    b = 0.5 * gen.standard_normal(2)
    s = 0.5 * gen.standard_normal()
    th = gen.standard_normal(3)
    G = np.eye(2) + 0.2 * gen.standard_normal((2, 2))
    e = 0.3 * gen.standard_normal(2)

    def phi(x):
        y = x.copy()
        y[..., 0] = x[..., 0] + s * np.sin(x[..., 1])
        return y @ A.T + b

    def phi_inv(x):
        y = (x - b) @ Ainv.T
        out = y.copy()
        out[..., 0] = y[..., 0] - s * np.sin(y[..., 1])
        return out

    def jac(x):
        J = np.zeros(x.shape[:-1] + (2, 2))
        J[..., 0, 0] = 1.0
        J[..., 1, 1] = 1.0
        J[..., 0, 1] = s * np.cos(x[..., 1])
        return A @ J

    def B(x):
        ang = th[0] * x[..., 0] + th[1] * x[..., 1] ** 2 + th[2]
        return np.exp(0.2 * x[..., 0])[..., None, None] * rotation_matrix(ang) @ G

    def eta(x):
        return np.exp(e[0] * np.sin(x[..., 0]) + e[1] * x[..., 1])

    def dB(x, v):
        ang = th[0] * x[..., 0] + th[1] * x[..., 1] ** 2 + th[2]
        rate = th[0] * v[..., 0] + 2 * th[1] * x[..., 1] * v[..., 1]
        turn = np.exp(0.2 * x[..., 0])[..., None, None] * rotation_matrix(ang) @ R2 @ G
        return 0.2 * v[..., 0, None, None] * B(x) + rate[..., None, None] * turn

    def deta(x, v):
        return eta(x) * (e[0] * np.cos(x[..., 0]) * v[..., 0] + e[1] * v[..., 1])

    return StochasticTransformation(2, 2, phi, phi_inv, B, eta, jac), dB, deta


def _random_generator(gen) -> InfinitesimalStochasticTransformation:
    L = gen.standard_normal((2, 2))
    Q = 0.3 * gen.standard_normal((2, 2, 2))
    c0 = gen.standard_normal(2)
    C0, C1 = gen.standard_normal((2, 2, 2))
    t = gen.standard_normal(3)

    def Y(x):
        return x @ L.T + np.einsum("ijk,...j,...k->...i", Q, x, x) + c0

    def Yj(x):
        return L + np.einsum("ijk,...k->...ij", Q, x) + np.einsum("ijk,...j->...ik", Q, x)

    def C(x):
        return C0 + np.sin(x[..., 0])[..., None, None] * C1

    def tau(x):
        return t[0] + t[1] * x[..., 0] * x[..., 1] + t[2] * np.cos(x[..., 1])

    return InfinitesimalStochasticTransformation(2, 2, Y, C, tau, Yj)


def _transformation_gap(T1: StochasticTransformation, T2: StochasticTransformation, xs) -> float:
    return max(
        float(np.abs(T1.Phi(xs) - T2.Phi(xs)).max()),
        float(np.abs(T1.B(xs) - T2.B(xs)).max()),
        float(np.abs(T1.eta(xs) - T2.eta(xs)).max()),
    )


def _generator_gap(V1: InfinitesimalStochasticTransformation, V2: InfinitesimalStochasticTransformation, xs) -> float:
    return max(
        float(np.abs(V1.Y(xs) - V2.Y(xs)).max()),
        float(np.abs(V1.C(xs) - V2.C(xs)).max()),
        float(np.abs(V1.tau(xs) - V2.tau(xs)).max()),
    )


def transform_algebra(seed: int = 0, n_instances: int = 100, n_points: int = 20):
    gen = _rng.generator(seed, 41)
    xs = probe_points(n_points, 2, -0.8, 0.8, seed)
    ident = StochasticTransformation.identity(2, 2)
    psi = euler_sde(M.radial_noise_sde())
    act, tim = euler_action(2), euler_time_action(2)
    zs = probe_group_points(n_points, psi.driver, radius=0.5, seed=seed + 1)
    assoc = inverse = functor = hom = 0.0
    for _ in range(n_instances):
        (T1, dB1, de1), (T2, _, _), (T3, _, _) = (_random_transformation(gen) for _ in range(3))
        assoc = max(assoc, _transformation_gap(compose(T3, compose(T2, T1)), compose(compose(T3, T2), T1), xs))
        inverse = max(inverse, _transformation_gap(compose(T1, invert(T1)), ident, xs), _transformation_gap(compose(invert(T1), T1), ident, xs))
        lhs = apply_E(compose(T2, T1), psi, act, tim)
        rhs = apply_E(T2, apply_E(T1, psi, act, tim), act, tim)
        pts = T2.Phi(T1.Phi(xs))
        functor = max(functor, float(np.abs(lhs(pts, zs) - rhs(pts, zs)).max()))
        V1, V2 = _random_generator(gen), _random_generator(gen)
        lhs_v = push_forward(T1, bracket(V1, V2), dB1, de1)
        rhs_v = bracket(push_forward(T1, V1, dB1, de1), push_forward(T1, V2, dB1, de1))
        hom = max(hom, _generator_gap(lhs_v, rhs_v, T1.Phi(xs)))
    checks = [
        le("composition_associativity", assoc, 1e-5),
        le("two_sided_inverse", inverse, 1e-5),
        le("E_functoriality", functor, 1e-5),
        le("pushforward_bracket_homomorphism", hom, 1e-5),
    ]
    return checks, {}, {}


# ---------------------------------------------------------------------------
# registry


REGISTRY: dict[str, Callable] = {
    "sec6-determining": sec6_determining,
    "sec6-pathwise": sec6_pathwise,
    "sec6-ET-invariance": sec6_et_invariance,
    "sec6-reduction-B": sec6_reduction_b,
    "sec6-triangular": sec6_triangular,
    "sec6-bessel": sec6_bessel,
    "alpha-stable-time": alpha_stable_time,
    "levy-gauge-isotropic": levy_gauge_isotropic,
    "discrete-gauge-conjugation": discrete_gauge_conjugation,
    "euler-gauge": euler_gauge,
    "milstein-gauge-identity": milstein_gauge_identity,
    "euler-determining": euler_determining,
    "milstein-determining": milstein_determining,
    "transform-algebra": transform_algebra,
    "convergence-order": convergence_order,
}


def experiment_names() -> list[str]:
    return list(REGISTRY)


def run_experiment(name: str, seed: int = 0, params: dict | None = None) -> ExperimentResult:
    if name not in REGISTRY:
        raise UsageError(f"unknown experiment {name!r}; valid names: {', '.join(REGISTRY)}")
    params = dict(params or {})
    fn = REGISTRY[name]
    try:
        inspect.signature(fn).bind(seed=seed, **params)
    except TypeError as exc:
        raise UsageError(f"bad parameters for {name}: {exc}") from exc
    checks, artifacts, details = fn(seed=seed, **params)
    return ExperimentResult(name, seed, params, checks, artifacts, details)
