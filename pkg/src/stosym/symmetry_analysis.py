"""Symmetry checks: determining-equation residuals and law-invariance tests.

The determining expression of a geometrical SDE ``Psi`` for ``V = (Y, C, tau)`` is

    Y(Psi(x, z)) - DxPsi(x, z)[Y(x)] - tau(x) DzPsi(x, z)[H(z)] - DzPsi(x, z)[K_{C(x)}(z)]

where ``H`` generates the time action and ``K_C`` is the gauge generator along
``C(x)``. It vanishes identically exactly when ``V`` generates symmetries.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import fd
from . import rng as _rng
from .errors import UsageError
from .geometrical_sde import GeometricalSde, probe_group_points, probe_points, solve_discrete
from .noise_drivers import AlphaStableMeasure, CharacteristicTriplet, DriverSpec, FiniteJumpMeasure, sample, truncation
from .schemes import BrownianSde, milstein_sde
from .stats_verify import ks_critical, ks_statistic
from .transformations import (
    GaugeAction,
    InfinitesimalStochasticTransformation,
    StochasticTransformation,
    TimeAction,
    apply_P,
    milstein_action,
)

__all__ = [
    "ResidualReport",
    "ConditionResult",
    "LawCheckReport",
    "determining_residual",
    "brownian_determining_residual",
    "euler_determining_residual",
    "milstein_determining_residual",
    "check_levy_gauge",
    "check_levy_time",
    "check_discrete_gauge",
    "is_symmetry_pathwise",
    "PathwiseReport",
]

ANALYTIC_TOL = 1e-9
FD_TOL = 1e-6


@dataclass
class ResidualReport:
    max_abs: float
    mean_abs: float
    grid_size: int
    per_equation: dict[str, float]
    values: np.ndarray | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_values(cls, values, labels=None) -> "ResidualReport":
        v = np.asarray(values, dtype=float)
        n = v.shape[0] if v.ndim else 1
        flat = np.abs(v.reshape(n, -1))
        if labels is None:
            labels = [f"component_{i}" for i in range(flat.shape[1])]
        per = {lab: float(flat[:, i].max()) for i, lab in enumerate(labels)}
        return cls(float(flat.max()), float(flat.mean()), n, per, v)

    def passes(self, tol: float = ANALYTIC_TOL) -> bool:
        return self.max_abs <= tol

    def to_dict(self) -> dict:
        return {
            "max_abs": self.max_abs,
            "mean_abs": self.mean_abs,
            "grid_size": self.grid_size,
            "per_equation": dict(self.per_equation),
        }


@dataclass
class ConditionResult:
    method: str  # "exact" or "monte_carlo"
    statistic: float
    threshold: float
    stderr: float | None = None
    note: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.statistic <= self.threshold)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


@dataclass
class LawCheckReport:
    conditions: dict[str, ConditionResult]
    caveat: str = "uniqueness of the law given its characteristics is assumed, not checked"

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions.values())

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "caveat": self.caveat,
            "conditions": {k: v.to_dict() for k, v in self.conditions.items()},
        }


# ---------------------------------------------------------------------------
# determining equations


def _default_grid(sde: GeometricalSde, n: int, xs, zs, box):
    if xs is None:
        low, high = box
        xs = probe_points(n, sde.state_dim, low, high)
    if zs is None:
        zs = probe_group_points(np.asarray(xs).shape[0], sde.driver)
    return np.asarray(xs, dtype=float), np.asarray(zs, dtype=float)


def determining_residual(
    sde: GeometricalSde,
    V: InfinitesimalStochasticTransformation,
    gauge: GaugeAction | None = None,
    time: TimeAction | None = None,
    xs=None,
    zs=None,
    n: int = 200,
    box=(-1.0, 1.0),
) -> ResidualReport:
    """Evaluate the determining expression at paired grid points ``(xs[i], zs[i])``."""
    xs, zs = _default_grid(sde, n, xs, zs, box)
    psi = sde(xs, zs)
    res = V.Y(psi) - sde.dx(xs, zs, V.Y(xs))
    if time is not None:
        res = res - V.tau(xs)[..., None] * sde.dz(xs, zs, time.generator(zs))
    if gauge is not None:
        res = res - sde.dz(xs, zs, gauge.infinitesimal(V.C(xs), zs))
    elif np.abs(V.C(xs)).max(initial=0.0) > 0:
        raise UsageError("V has a gauge component but no gauge action was supplied")
    return ResidualReport.from_values(res)


def _second_along(V: InfinitesimalStochasticTransformation, x, v):
    """``D^2 Y(x)[v, v]``; exact zero for analytic constant Jacobians up to rounding."""
    if V.Y_jac is not None:
        return fd.directional(lambda p: np.einsum("...ij,...j->...i", V.Y_jac(p), np.broadcast_to(v, p.shape)), x, v)
    return fd.directional2(V.Y, x, v)


def brownian_determining_residual(sde: BrownianSde, V: InfinitesimalStochasticTransformation, xs=None, n: int = 200, box=(-1.0, 1.0)) -> ResidualReport:
    """Residuals of the drift and diffusion equations for ``dX = mu dt + sigma dW``.

    drift:     Dmu[Y] - L(Y) + tau mu,  with  L = 1/2 sigma sigma^T : D^2 + mu . D
    diffusion: Dsigma[Y] - DY sigma + tau sigma / 2 + sigma C
    """
    if xs is None:
        xs = probe_points(n, sde.state_dim, *box)
    xs = np.asarray(xs, dtype=float)
    y = V.Y(xs)
    mu = sde.drift(xs)
    sig = sde.diffusion(xs)
    LY = V.dY(xs, mu)
    for a in range(sde.noise_dim):
        LY = LY + 0.5 * _second_along(V, xs, sig[..., :, a])
    tau = V.tau(xs)
    drift = sde.dmu(xs, y) - LY + tau[..., None] * mu
    DYsig = np.stack([V.dY(xs, sig[..., :, a]) for a in range(sde.noise_dim)], axis=-1)
    diff = sde.dsigma(xs, y) - DYsig + 0.5 * tau[..., None, None] * sig + sig @ V.C(xs)
    m, k = sde.state_dim, sde.noise_dim
    values = np.concatenate([drift, diff.reshape(diff.shape[:-2] + (m * k,))], axis=-1)
    labels = [f"drift_{i}" for i in range(m)] + [f"diffusion_{i}{a}" for i in range(m) for a in range(k)]
    return ResidualReport.from_values(values, labels)


def euler_determining_residual(sde: BrownianSde, V: InfinitesimalStochasticTransformation, xs, dt, dW) -> ResidualReport:
    """``Y(x + mu dt + sigma dW) - Y(x) - Dmu[Y] dt - Dsigma[Y] dW - sigma C dW`` per grid point."""
    xs = np.asarray(xs, dtype=float)
    dt = np.asarray(dt, dtype=float)
    dW = np.asarray(dW, dtype=float)
    if dt.ndim == xs.ndim - 1:
        dt = dt[..., None]
    y = V.Y(xs)
    sig = sde.diffusion(xs)
    step = xs + sde.drift(xs) * dt + np.einsum("...ia,...a->...i", sig, dW)
    res = (
        V.Y(step)
        - y
        - sde.dmu(xs, y) * dt
        - np.einsum("...ia,...a->...i", sde.dsigma(xs, y), dW)
        - np.einsum("...ib,...ba,...a->...i", sig, V.C(xs), dW)
    )
    return ResidualReport.from_values(res)


def milstein_determining_residual(sde: BrownianSde, V: InfinitesimalStochasticTransformation, xs, dt, dW, dWW) -> ResidualReport:
    """Determining expression of the Milstein map over Milstein(k) with the rotation action."""
    k = sde.noise_dim
    G = milstein_sde(sde)
    dt = np.asarray(dt, dtype=float)
    z = G.driver.milstein_join(dt.reshape(np.shape(dW)[:-1]), dW, dWW)
    return determining_residual(G, V, milstein_action(k), None, xs, z)


# ---------------------------------------------------------------------------
# law checks


def _exact(stat: float, scale: float = 1.0, note: str = "") -> ConditionResult:
    return ConditionResult("exact", float(stat), 1e-12 * max(1.0, scale), None, note)


def _ks_marginals(a, b, level):
    """Largest per-coordinate KS statistic and its Bonferroni threshold."""
    a = np.asarray(a, dtype=float).reshape(a.shape[0], -1)
    b = np.asarray(b, dtype=float).reshape(b.shape[0], -1)
    stats = [ks_statistic(a[:, j], b[:, j]) for j in range(a.shape[1])]
    thr = ks_critical(level / a.shape[1]) * math.sqrt((a.shape[0] + b.shape[0]) / (a.shape[0] * b.shape[0]))
    return max(stats), thr


def check_levy_gauge(
    triplet: CharacteristicTriplet,
    action: GaugeAction,
    g_samples,
    mc_samples: int = 20_000,
    seed: int = 0,
    level: float = 0.01,
    n_sigma: float = 4.0,
) -> LawCheckReport:
    """Gauge invariance of a Levy triplet under every ``g`` in ``g_samples``.

    * diffusion: ``Ups_g A0 Ups_g^T = A0`` (exact)
    * measure: ``Xi_g* nu0 = nu0`` by per-coordinate two-sample KS (Bonferroni over g and coordinates)
    * drift: ``b0 = Ups_g b0 + int (h(z) - Ups_g h(Xi_{g^-1} z)) nu0(dz)`` by Monte Carlo
    """
    g_samples = np.asarray(g_samples, dtype=float)
    if g_samples.ndim == 2:
        g_samples = g_samples[None]
    n_g = g_samples.shape[0]
    conds: dict[str, ConditionResult] = {}
    A0, b0 = triplet.A0, triplet.b0
    diff = max(float(np.abs(U @ A0 @ U.T - A0).max()) for U in action.upsilon(g_samples))
    conds["diffusion"] = _exact(diff, float(np.abs(A0).max(initial=0.0)))

    nu = triplet.nu0
    if isinstance(nu, AlphaStableMeasure):
        # |z|^{-n-alpha} dz is rotation invariant; drift integrand is odd
        conds["measure"] = ConditionResult("exact", 0.0, 0.0, None, "rotation-invariant stable measure")
        drift = max(float(np.abs(U @ b0 - b0).max()) for U in action.upsilon(g_samples))
        conds["drift"] = _exact(drift, note="symmetric stable measure: compensator integral vanishes")
        return LawCheckReport(conds)
    if not isinstance(nu, FiniteJumpMeasure):
        raise UsageError("the jump measure needs a sampler")
    if nu.rate == 0:
        conds["measure"] = ConditionResult("exact", 0.0, 0.0, None, "zero measure")
        drift = max(float(np.abs(U @ b0 - b0).max()) for U in action.upsilon(g_samples))
        conds["drift"] = _exact(drift, float(np.abs(b0).max(initial=0.0)))
        return LawCheckReport(conds)

    gen = _rng.generator(seed, 17)
    worst, thr = 0.0, 0.0
    for g in g_samples:
        a = nu.sample(gen, mc_samples)
        b = action(g, nu.sample(gen, mc_samples))
        s, t = _ks_marginals(a, b, level / n_g)
        worst, thr = max(worst, s), t
    conds["measure"] = ConditionResult("monte_carlo", worst, thr, None, "per-coordinate KS, Bonferroni")

    worst_dev, worst_thr, worst_se = 0.0, 0.0, 0.0
    for g, U in zip(g_samples, action.upsilon(g_samples)):
        z = nu.sample(gen, mc_samples)
        vals = truncation(z) - truncation(action(np.linalg.inv(g), z)) @ U.T
        mean = nu.rate * vals.mean(axis=0)
        se = nu.rate * vals.std(axis=0, ddof=1) / math.sqrt(mc_samples)
        dev = np.abs(b0 - (U @ b0 + mean))
        ratio = dev - n_sigma * se
        j = int(np.argmax(ratio))
        if ratio[j] >= worst_dev - worst_thr:
            worst_dev, worst_thr, worst_se = float(dev[j]), float(n_sigma * se[j] + 1e-12), float(se[j])
    conds["drift"] = ConditionResult("monte_carlo", worst_dev, worst_thr, worst_se, f"{n_sigma:g} stderr")
    return LawCheckReport(conds)


def _radial_scale(time: TimeAction, r: float, n: int) -> float:
    e = np.zeros(n)
    e[0] = 1.0
    return float(np.linalg.norm(time(r, e)))


def check_levy_time(
    triplet: CharacteristicTriplet,
    time: TimeAction,
    r_samples,
    mc_samples: int = 20_000,
    seed: int = 0,
    level: float = 0.01,
    n_sigma: float = 4.0,
) -> LawCheckReport:
    """Time-scaling invariance of a Levy triplet for each ``r`` in ``r_samples``.

    * diffusion: ``A0 = gamma_r A0 gamma_r^T / r`` (exact)
    * measure: ``nu0 = Gamma_r* nu0 / r``; for finite measures the total masses
      must agree (exact) and the jump shapes are compared by KS; for the stable
      tag the radial tail ``nu(|z| > c)`` is compared in closed form
    * drift: ``b0 = (gamma_r b0 + int (h(z) - gamma_r h(Gamma_{1/r} z)) nu0(dz)) / r``
    """
    r_samples = np.atleast_1d(np.asarray(r_samples, dtype=float))
    conds: dict[str, ConditionResult] = {}
    A0, b0 = triplet.A0, triplet.b0
    n = triplet.dim
    diff = max(float(np.abs(time.gamma(r) @ A0 @ time.gamma(r).T / r - A0).max()) for r in r_samples)
    conds["diffusion"] = _exact(diff, float(np.abs(A0).max(initial=0.0)))
    nu = triplet.nu0
    if isinstance(nu, AlphaStableMeasure):
        radii = np.array([0.25, 0.5, 1.0, 2.0, 4.0])
        dev = 0.0
        for r in r_samples:
            s = _radial_scale(time, r, n)
            pushed = nu.tail_mass(radii / s) / r
            dev = max(dev, float(np.abs(pushed / nu.tail_mass(radii) - 1.0).max()))
        conds["measure"] = ConditionResult("exact", dev, 1e-12, None, "radial tail masses")
        drift = max(float(np.abs(time.gamma(r) @ b0 / r - b0).max()) for r in r_samples)
        conds["drift"] = _exact(drift, note="symmetric stable measure: compensator integral vanishes")
        return LawCheckReport(conds)
    if not isinstance(nu, FiniteJumpMeasure):
        raise UsageError("the jump measure needs a sampler")
    if nu.rate == 0:
        conds["measure"] = ConditionResult("exact", 0.0, 0.0, None, "zero measure")
        drift = max(float(np.abs(time.gamma(r) @ b0 / r - b0).max()) for r in r_samples)
        conds["drift"] = _exact(drift, float(np.abs(b0).max(initial=0.0)))
        return LawCheckReport(conds)
    mass = max(abs(nu.rate / r - nu.rate) for r in r_samples)
    conds["mass"] = _exact(mass, nu.rate, "total mass of Gamma_r* nu0 / r")
    gen = _rng.generator(seed, 19)
    worst, thr = 0.0, 0.0
    for r in r_samples:
        a = nu.sample(gen, mc_samples)
        b = time(r, nu.sample(gen, mc_samples))
        s, t = _ks_marginals(a, b, level / r_samples.size)
        worst, thr = max(worst, s), t
    conds["measure"] = ConditionResult("monte_carlo", worst, thr, None, "jump shape, per-coordinate KS")
    worst_dev, worst_thr, worst_se = 0.0, 0.0, 0.0
    for r in r_samples:
        g = time.gamma(r)
        z = nu.sample(gen, mc_samples)
        vals = truncation(z) - truncation(time(1.0 / r, z)) @ g.T
        mean = nu.rate * vals.mean(axis=0)
        se = nu.rate * vals.std(axis=0, ddof=1) / math.sqrt(mc_samples)
        dev = np.abs(b0 - (g @ b0 + mean) / r)
        j = int(np.argmax(dev - n_sigma * se / r))
        if dev[j] - n_sigma * se[j] / r >= worst_dev - worst_thr:
            worst_dev, worst_thr, worst_se = float(dev[j]), float(n_sigma * se[j] / r + 1e-12), float(se[j] / r)
    conds["drift"] = ConditionResult("monte_carlo", worst_dev, worst_thr, worst_se, f"{n_sigma:g} stderr")
    return LawCheckReport(conds)


def _invariant_features(action: GaugeAction, z: np.ndarray) -> np.ndarray:
    """Conjugation-invariant summaries of GL blocks (sorted eigenvalues of the symmetric part, singular values) plus norms."""
    feats = []
    for d, sl in zip(action.driver.parts or (action.driver,), action.driver.slices()):
        block = z[:, sl]
        if d.kind == "gl":
            m = d.matrix(block)
            sym = 0.5 * (m + np.swapaxes(m, -1, -2))
            feats += [np.linalg.eigvalsh(sym), np.linalg.svd(m, compute_uv=False)]
        else:
            feats.append(np.linalg.norm(block, axis=-1, keepdims=True))
    return np.concatenate(feats, axis=-1)


def check_discrete_gauge(
    step_sampler: Callable[[np.random.Generator, int], np.ndarray],
    action: GaugeAction,
    g_samples,
    mc_samples: int = 5_000,
    seed: int = 0,
    level: float = 0.01,
) -> LawCheckReport:
    """Is the per-step law invariant under ``Xi_g`` for each sampled ``g``?

    Two independent samples are drawn; one is pushed by ``Xi_g``. The
    ``coordinates`` condition compares every coordinate marginal; the
    ``invariants`` condition compares conjugation-invariant summaries. Both use
    KS with a Bonferroni split of ``level``.
    """
    g_samples = np.asarray(g_samples, dtype=float)
    if g_samples.ndim == 2:
        g_samples = g_samples[None]
    gen = _rng.generator(seed, 23)
    worst_c = worst_i = 0.0
    thr_c = thr_i = 0.0
    for g in g_samples:
        a = np.asarray(step_sampler(gen, mc_samples), dtype=float)
        b = action(g, np.asarray(step_sampler(gen, mc_samples), dtype=float))
        s, thr_c = _ks_marginals(a, b, level / (2 * g_samples.shape[0]))
        worst_c = max(worst_c, s)
        s, thr_i = _ks_marginals(_invariant_features(action, a), _invariant_features(action, b), level / (2 * g_samples.shape[0]))
        worst_i = max(worst_i, s)
    return LawCheckReport(
        {
            "coordinates": ConditionResult("monte_carlo", worst_c, thr_c, None, "coordinate marginals, KS"),
            "invariants": ConditionResult("monte_carlo", worst_i, thr_i, None, "invariant summaries, KS"),
        },
        caveat="marginal and summary tests cannot detect every difference between multivariate laws",
    )


# ---------------------------------------------------------------------------
# pathwise check


@dataclass
class PathwiseReport:
    max_residual: float
    n_paths: int
    n_steps: int

    def passes(self, tol: float = 1e-10) -> bool:
        return self.max_residual <= tol

    def to_dict(self) -> dict:
        return asdict(self)


def is_symmetry_pathwise(
    sde: GeometricalSde,
    T: StochasticTransformation,
    driver: DriverSpec,
    n_paths: int,
    x0,
    gauge: GaugeAction | None = None,
    time: TimeAction | None = None,
) -> PathwiseReport:
    """Simulate ``(X, Z)`` exactly, transform it by ``P_T`` and measure how far the image is from solving ``Psi``."""
    z = sample(driver, n_paths)
    x = solve_discrete(sde, z, x0)
    xp, zp = apply_P(T, x, z, gauge, time)
    incs = zp.increments()
    pred = sde(xp.values[..., :-1, :], incs)
    res = float(np.abs(pred - xp.values[..., 1:, :]).max())
    return PathwiseReport(res, n_paths, z.n_steps)
