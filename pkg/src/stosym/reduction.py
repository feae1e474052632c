"""Reduction by a one-parameter symmetry and reconstruction of full solutions.

Given ``V = (Y, C, tau)`` with ``Y`` non-vanishing, a pair ``(B, eta)`` solving

    DB[Y] = -B C        Deta[Y] = -tau eta

makes the pushed-forward generator strong (no gauge or time part). Both
equations are transport equations along the orbits of ``Y``; they are solved
here by integrating from a transversal section, where ``B = I`` and ``eta = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import NumericError, UsageError
from .geometrical_sde import GeometricalSde
from .paths import CadlagPath, PathStyle
from .transformations import InfinitesimalStochasticTransformation, StochasticTransformation

__all__ = [
    "CanonicalReport",
    "TriangularReport",
    "GaugeEtaSolution",
    "canonical_form_check",
    "solve_gauge_eta",
    "triangular_check",
    "reconstruct",
]

PATTERN_TOL = 1e-9
REGULAR_TOL = 1e-6
ODE_TOL = 1e-12


@dataclass
class CanonicalReport:
    canonical: bool
    deviation: float
    pivots: list[int]

    def __bool__(self) -> bool:
        return self.canonical


def canonical_form_check(Y_list: Sequence[Callable], grid, tol: float = PATTERN_TOL) -> CanonicalReport:
    """Does ``(Y_1 | ... | Y_r)`` have the block-unit-triangular pattern on ``grid``?

    Column ``i`` must have a unit entry in row ``i`` and zeros in rows ``> i``
    among the first ``r`` rows, and zeros in every row below ``r`` (the fields
    only move the first ``r`` coordinates, and ``Y_i`` is unit along ``x^i``
    with entries above allowed to vary). ``deviation`` is the worst violation.
    """
    grid = np.asarray(grid, dtype=float)
    if not Y_list:
        return CanonicalReport(True, 0.0, [])
    M = np.stack([np.asarray(Y(grid), dtype=float) for Y in Y_list], axis=-1)  # (..., m, r)
    m, r = M.shape[-2:]
    if r > m:
        raise UsageError("more fields than coordinates")
    target_unit = np.eye(r)
    top = M[..., :r, :]
    lower = np.tril(np.ones((r, r)))  # entries on/below the diagonal are fixed
    dev = float(np.abs((top - target_unit) * lower).max())
    if m > r:
        dev = max(dev, float(np.abs(M[..., r:, :]).max()))
    return CanonicalReport(dev <= tol, dev, list(range(r)))


# ---------------------------------------------------------------------------
# (B, eta) by transport along orbits


@dataclass
class GaugeEtaSolution:
    """Grid values of ``B`` and ``eta`` plus the orbit data behind them."""

    points: np.ndarray
    B: np.ndarray
    eta: np.ndarray
    flow_time: np.ndarray
    section_points: np.ndarray
    valid: np.ndarray
    x0: np.ndarray
    V: InfinitesimalStochasticTransformation = field(repr=False)
    normal: np.ndarray | None = None
    max_time: float = 2 * np.pi

    def transformation(self) -> StochasticTransformation:
        """``T = (id, B, eta)`` evaluated by fresh orbit integration at any point."""

        def B(x):
            return _pointwise(self, x)[0]

        def eta(x):
            return _pointwise(self, x)[1]

        m = self.V.state_dim
        return StochasticTransformation(m, self.V.gauge_dim, lambda x: x, lambda x: x, B, eta, lambda x: np.broadcast_to(np.eye(m), np.shape(x) + (m,)))


def _pointwise(sol: GaugeEtaSolution, x):
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, x.shape[-1])
    Bs, etas = [], []
    for p in flat:
        a, xs = _locate(sol.V, p, sol.x0, sol.normal, sol.max_time)
        B, eta = _transport(sol.V, xs, a)
        Bs.append(B)
        etas.append(eta)
    k = sol.V.gauge_dim
    return np.array(Bs).reshape(x.shape[:-1] + (k, k)), np.array(etas).reshape(x.shape[:-1])


def _orbit(V, x, t_end):
    """Dense solution of ``x' = Y(x)`` from ``x`` over ``[0, t_end]``."""
    return solve_ivp(lambda t, y: V.Y(y), (0.0, t_end), x, method="DOP853", rtol=ODE_TOL, atol=ODE_TOL, dense_output=True)


def _locate(V, x, x0, n, max_time):
    """Smallest ``|a|`` with ``Phi_{-a}(x)`` on the section, crossing it in the direction of ``n``."""
    best = None
    for sign in (-1.0, 1.0):
        sol = _orbit(V, x, sign * max_time)
        if sol.status < 0:
            continue
        ts = np.linspace(0.0, sign * max_time, 2001)
        ys = sol.sol(ts).T
        s = (ys - x0) @ n
        orient = V.Y(ys) @ n > 0
        for j in range(ts.size - 1):
            if not (orient[j] or orient[j + 1]):
                continue
            if s[j] == 0.0:
                t = ts[j]
            elif s[j] * s[j + 1] < 0:
                t = brentq(lambda u: (sol.sol(u) - x0) @ n, ts[j], ts[j + 1], xtol=1e-14, rtol=1e-15)
            else:
                continue
            if V.Y(sol.sol(t)) @ n <= 0:
                continue
            if best is None or abs(t) < abs(best[0]):
                best = (t, sol.sol(t))
            break
    if best is None:
        raise NumericError(f"orbit through {x} does not reach the section")
    t, xs = best
    return -t, xs  # x = Phi_a(xs)


def _transport(V, xs, a):
    """Integrate ``(x, B, eta)`` from the section point over flow time ``a``."""
    m, k = V.state_dim, V.gauge_dim

    def rhs(t, y):
        x = y[:m]
        B = y[m : m + k * k].reshape(k, k)
        eta = y[-1]
        return np.concatenate([V.Y(x), (-B @ V.C(x)).reshape(-1), [-V.tau(x) * eta]])

    y0 = np.concatenate([xs, np.eye(k).reshape(-1), [1.0]])
    if a == 0:
        return np.eye(k), 1.0
    sol = solve_ivp(rhs, (0.0, a), y0, method="DOP853", rtol=ODE_TOL, atol=ODE_TOL)
    if sol.status < 0:
        raise NumericError(sol.message)
    y = sol.y[:, -1]
    return y[m : m + k * k].reshape(k, k), float(y[-1])


def solve_gauge_eta(
    V: InfinitesimalStochasticTransformation,
    x0,
    box,
    n_per_axis: int = 20,
    points=None,
    exclude: Callable[[np.ndarray], np.ndarray] | None = None,
    max_time: float = 2 * np.pi,
) -> GaugeEtaSolution:
    """Solve ``DB[Y] = -B C`` and ``Deta[Y] = -tau eta`` on a grid.

    The section is the hyperplane through ``x0`` normal to ``Y(x0)``. Each grid
    point is traced back along ``Y`` to the section (root finding on the
    section coordinate, nearest crossing in the direction of ``Y(x0)``), then
    ``B`` and ``eta`` are transported forward from ``(I, 1)``.

    ``box`` is a sequence of ``(low, high)`` pairs. ``exclude(points)`` masks
    points to skip (for example a disk around a zero of ``Y``).
    """
    x0 = np.asarray(x0, dtype=float)
    n = V.Y(x0)
    norm = float(np.linalg.norm(n))
    if norm < REGULAR_TOL:
        raise NumericError("Y vanishes at the section point")
    n = n / norm
    if points is None:
        axes = [np.linspace(lo, hi, n_per_axis) for lo, hi in box]
        points = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(box))
    points = np.asarray(points, dtype=float)
    valid = np.ones(points.shape[0], dtype=bool)
    if exclude is not None:
        valid &= ~np.asarray(exclude(points), dtype=bool)
    valid &= np.linalg.norm(V.Y(points), axis=-1) >= REGULAR_TOL
    k = V.gauge_dim
    Bs = np.full((points.shape[0], k, k), np.nan)
    etas = np.full(points.shape[0], np.nan)
    ts = np.full(points.shape[0], np.nan)
    xs_all = np.full(points.shape, np.nan)
    for i in np.flatnonzero(valid):
        a, xs = _locate(V, points[i], x0, n, max_time)
        Bs[i], etas[i] = _transport(V, xs, a)
        ts[i], xs_all[i] = a, xs
    return GaugeEtaSolution(points, Bs, etas, ts, xs_all, valid, x0, V, n, max_time)


# ---------------------------------------------------------------------------
# triangular systems


@dataclass
class TriangularReport:
    r: int
    residuals: dict[str, float]
    tol: float = PATTERN_TOL

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol

    def to_dict(self) -> dict:
        return {"r": self.r, "residuals": dict(self.residuals), "max_residual": self.max_residual, "passed": self.passed}


def triangular_check(sde: GeometricalSde, r: int, xs, zs, n_variations: int = 8, spread: float = 0.5, seed: int = 0, tol: float = PATTERN_TOL) -> TriangularReport:
    """Check that ``Psi^i - x^i`` ignores ``x^1..x^i`` for ``i <= r`` and ``Psi^i`` ignores ``x^1..x^r`` for ``i > r``.

    For each base point the lower coordinates are replaced by random values
    within ``spread`` and the largest change of the relevant component is
    recorded, per (component, coordinate) pair.
    """
    xs = np.asarray(xs, dtype=float)
    zs = np.asarray(zs, dtype=float)
    m = sde.state_dim
    if not 0 <= r <= m:
        raise UsageError("r must lie between 0 and the state dimension")
    gen = np.random.default_rng(seed)
    base = sde(xs, zs) - np.where(np.arange(m) < r, xs, 0.0)
    res: dict[str, float] = {}
    for j in range(r):
        worst = np.zeros(m)
        for _ in range(n_variations):
            moved = xs.copy()
            moved[..., j] += spread * gen.uniform(-1, 1, xs.shape[:-1])
            out = sde(moved, zs) - np.where(np.arange(m) < r, moved, 0.0)
            worst = np.maximum(worst, np.abs(out - base).reshape(-1, m).max(axis=0))
        for i in range(m):
            if i >= j:
                res[f"psi{i + 1}/x{j + 1}"] = float(worst[i])
    return TriangularReport(r, res, tol)


def reconstruct(
    reduced: CadlagPath,
    increments: Sequence[Callable],
    z: CadlagPath,
    x0_top,
) -> CadlagPath:
    """Rebuild ``x^1..x^r`` from the reduced coordinates ``x^{r+1..m}``.

    ``increments[i](lower, dz)`` returns ``Psi^{i+1} - x^{i+1}`` as a function
    of the coordinates below it (``x^{i+2..m}``, already known) and the step.
    Coordinates are filled from ``x^r`` up to ``x^1`` by cumulative sums over
    the exact per-step recursion. The result stacks ``(x^1..x^r, reduced)``.
    """
    if reduced.n_steps != z.n_steps or not np.allclose(reduced.times, z.times, rtol=0, atol=1e-12):
        raise UsageError("reduced path and driver live on different grids")
    r = len(increments)
    x0_top = np.asarray(x0_top, dtype=float)
    if x0_top.shape[-1:] != (r,):
        raise UsageError(f"x0_top must have {r} entries")
    dz = z.increments()
    cols = [reduced.values]
    for i in reversed(range(r)):
        lower = np.concatenate(cols, axis=-1)[..., :-1, :]
        inc = np.asarray(increments[i](lower, dz), dtype=float)
        start = np.broadcast_to(x0_top[..., i], inc.shape[:-1])[..., None]
        cols.insert(0, np.concatenate([start, start + np.cumsum(inc, axis=-1)], axis=-1)[..., None])
    return CadlagPath(z.times, np.concatenate(cols, axis=-1), PathStyle.DISCRETE_JUMP if z.style == PathStyle.DISCRETE_JUMP else reduced.style)
