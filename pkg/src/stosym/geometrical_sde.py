"""Geometrical SDEs ``dX = Psi(X, dZ)`` and their solvers.

A geometrical SDE is a map ``Psi(x, z)`` from state times driver group to
state with ``Psi(x, 1) = x``. Along a driver path the solution takes the
group jump ``dZ = Z_l * Z_{l-1}^{-1}`` at each step.

* Discrete drivers: ``X_l = Psi(X_{l-1}, dZ_l)`` exactly.
* Grid-sampled drivers: with ``u`` the coordinates of ``dZ`` relative to the
  identity, a continuous step adds ``DPsi[u] + 1/2 D^2Psi[u, u]`` (realized
  covariation), and a jump step applies ``Psi`` to the jump itself.

Since ``z' -> z' * z^{-1}`` is affine in coordinates for every supported
group, derivatives of ``Psi(x, z' * z^{-1})`` in ``z'`` are derivatives of
``Psi(x, .)`` at the identity along ``u``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Callable

import numpy as np

from . import fd
from .errors import NonIdentityError, UsageError
from .lie_groups import Additive, GroupDescriptor
from .noise_drivers import FiniteJumpMeasure, truncation
from .paths import CadlagPath, PathStyle
from . import rng as _rng

__all__ = [
    "GeometricalSde",
    "solve_discrete",
    "solve_grid",
    "grid_increment",
    "from_affine",
    "from_smooth_levy",
    "from_iterated_map",
    "transport",
    "probe_points",
    "probe_group_points",
]


@dataclass(frozen=True, eq=False)
class GeometricalSde:
    """The map ``Psi`` with optional analytic derivatives.

    ``psi(x, z)`` broadcasts over leading axes (``x`` is ``(..., m)``, ``z`` is
    ``(..., n)`` group coordinates). When ``control`` is set, ``psi`` is called
    as ``psi(x, z, control)``.

    Optional derivative evaluators (all directional, broadcasting):

    * ``dz(x, z, w)``: ``d/ds Psi(x, z + s w)`` at ``s = 0``
    * ``dzz(x, z, w)``: ``d^2/ds^2 Psi(x, z + s w)`` at ``s = 0``
    * ``dx(x, z, v)``: ``d/ds Psi(x + s v, z)`` at ``s = 0``

    Missing ones fall back to central finite differences.
    """

    state_dim: int
    driver: GroupDescriptor
    psi: Callable[..., np.ndarray]
    dz_fn: Callable | None = None
    dzz_fn: Callable | None = None
    dx_fn: Callable | None = None
    control: Any = None
    discrete_only: bool = False
    finite_differences: bool = True
    fd_step: float = fd.FIRST_STEP
    fd_step2: float = fd.SECOND_STEP
    extras: dict = field(default_factory=dict)

    def __call__(self, x, z) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        if self.control is None:
            return np.asarray(self.psi(x, z), dtype=float)
        return np.asarray(self.psi(x, z, self.control), dtype=float)

    def with_control(self, k) -> "GeometricalSde":
        return replace(self, control=k)

    def _need_fd(self, what: str):
        if not self.finite_differences:
            raise UsageError(f"no analytic {what} and finite differences are disabled")

    def dz(self, x, z, w) -> np.ndarray:
        if self.dz_fn is not None:
            return np.asarray(self.dz_fn(x, z, w), dtype=float)
        self._need_fd("z-derivative")
        x = np.asarray(x, dtype=float)
        return fd.directional(lambda zz: self(x, zz), np.asarray(z, dtype=float), w, self.fd_step)

    def dzz(self, x, z, w) -> np.ndarray:
        if self.dzz_fn is not None:
            return np.asarray(self.dzz_fn(x, z, w), dtype=float)
        self._need_fd("second z-derivative")
        x = np.asarray(x, dtype=float)
        return fd.directional2(lambda zz: self(x, zz), np.asarray(z, dtype=float), w, self.fd_step2)

    def dx(self, x, z, v) -> np.ndarray:
        if self.dx_fn is not None:
            return np.asarray(self.dx_fn(x, z, v), dtype=float)
        self._need_fd("x-derivative")
        z = np.asarray(z, dtype=float)
        return fd.directional(lambda xx: self(xx, z), np.asarray(x, dtype=float), v, self.fd_step)

    def identity_defect(self, points) -> float:
        """``max |Psi(x, 1) - x|`` over the given states."""
        points = np.asarray(points, dtype=float)
        return float(np.abs(self(points, self.driver.identity()) - points).max())

    def check_identity(self, points=None, tol: float = 1e-12) -> float:
        if self.discrete_only:
            return 0.0
        if points is None:
            points = probe_points(100, self.state_dim)
        defect = self.identity_defect(points)
        if defect > tol:
            raise NonIdentityError(f"Psi(x, 1) differs from x by {defect:.3e}")
        return defect


# ---------------------------------------------------------------------------
# probe grids


def probe_points(n: int, dim: int, low=-1.0, high=1.0, seed: int = 0) -> np.ndarray:
    """Scrambled Halton points in a box."""
    from scipy.stats import qmc

    pts = qmc.Halton(d=dim, scramble=True, seed=np.random.default_rng(seed)).random(n)
    low = np.broadcast_to(np.asarray(low, dtype=float), (dim,))
    high = np.broadcast_to(np.asarray(high, dtype=float), (dim,))
    return low + pts * (high - low)


def probe_group_points(n: int, group: GroupDescriptor, radius: float = 1.0, seed: int = 1) -> np.ndarray:
    """Points of the driver group in a coordinate ball around the identity."""
    d = group.coordinate_dim
    g = _rng.generator(seed, 11)
    direction = g.standard_normal((n, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    r = radius * g.random(n) ** (1.0 / d)
    return group.identity() + direction * r[:, None]


# ---------------------------------------------------------------------------
# solvers


def _check_x0(sde: GeometricalSde, x0, batch: tuple) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if x0.shape[-1:] != (sde.state_dim,):
        raise UsageError(f"x0 must have trailing dimension {sde.state_dim}")
    return np.broadcast_to(x0, batch + (sde.state_dim,)).copy()


def solve_discrete(sde: GeometricalSde, z: CadlagPath, x0) -> CadlagPath:
    """Exact recursion ``X_l = Psi(X_{l-1}, dZ_l)``."""
    if z.descriptor != sde.driver:
        raise UsageError(f"driver path lives on {z.descriptor!r}, SDE expects {sde.driver!r}")
    incs = z.increments()
    x = _check_x0(sde, x0, z.batch_shape)
    out = np.empty(z.batch_shape + (z.times.size, sde.state_dim))
    out[..., 0, :] = x
    for step in range(incs.shape[-2]):
        x = sde(x, incs[..., step, :])
        out[..., step + 1, :] = x
    return CadlagPath(z.times, out, PathStyle.DISCRETE_JUMP)


def grid_increment(sde: GeometricalSde, x, u, jump_coords=None, whole_jump=None):
    """State after one grid step.

    ``u`` is the step's group jump in coordinates relative to the identity.
    ``whole_jump`` (bool, broadcast over the batch) marks steps that are pure
    jumps; ``jump_coords`` is the pure-jump part of a mixed step on an
    additive driver.
    """
    e = sde.driver.identity()
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    cont = u if jump_coords is None else u - jump_coords
    z0 = np.broadcast_to(e, cont.shape)
    new = x + sde.dz(x, z0, cont) + 0.5 * sde.dzz(x, z0, cont)
    if jump_coords is not None:
        hit = np.any(jump_coords != 0, axis=-1, keepdims=True)
        if np.any(hit):
            new = new + np.where(hit, sde(x, e + jump_coords) - x, 0.0)
    if whole_jump is not None:
        whole = np.asarray(whole_jump, dtype=bool)[..., None]
        if np.any(whole):
            new = np.where(whole, sde(x, e + u), new)
    return new


def solve_grid(sde: GeometricalSde, z: CadlagPath, x0) -> CadlagPath:
    """Grid integration of the SDE along a sampled driver path.

    Steps flagged as jumps without a separate jump part (and every step of a
    discrete-jump path) are applied exactly through ``Psi``.
    """
    if sde.discrete_only:
        raise UsageError("this SDE is a discrete-time iterated map; use solve_discrete")
    if z.descriptor != sde.driver:
        raise UsageError(f"driver path lives on {z.descriptor!r}, SDE expects {sde.driver!r}")
    e = sde.driver.identity()
    incs = z.increments() - e
    steps = incs.shape[-2]
    if z.style == PathStyle.DISCRETE_JUMP:
        whole = np.ones(z.batch_shape + (steps,), dtype=bool)
    elif z.jump_flags is not None and z.jump_part is None:
        whole = np.broadcast_to(z.jump_flags, z.batch_shape + (steps,))
    else:
        whole = None
    part = z.jump_part
    if part is not None and not sde.driver.is_additive:
        raise UsageError("mixed continuous/jump steps are only supported on additive drivers")
    x = _check_x0(sde, x0, z.batch_shape)
    out = np.empty(z.batch_shape + (z.times.size, sde.state_dim))
    out[..., 0, :] = x
    for step in range(steps):
        x = grid_increment(
            sde,
            x,
            incs[..., step, :],
            None if part is None else part[..., step, :],
            None if whole is None else whole[..., step],
        )
        out[..., step + 1, :] = x
    return CadlagPath(z.times, out, PathStyle.GRID_SAMPLED)


# ---------------------------------------------------------------------------
# constructors


def from_affine(sigma: Callable, state_dim: int, driver_dim: int, d_sigma: Callable | None = None) -> GeometricalSde:
    """``Psi(x, z) = x + sigma(x) z`` on an additive driver.

    ``sigma(x)`` returns ``(..., m, n)``; ``d_sigma(x, v)`` is its optional
    directional derivative along ``v``.
    """

    def psi(x, z):
        return x + np.einsum("...ij,...j->...i", sigma(x), z)

    def dz(x, z, w):
        return np.einsum("...ij,...j->...i", sigma(np.asarray(x, dtype=float)), w)

    def dzz(x, z, w):
        return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(w)[:-1] + (state_dim,)))

    def dx(x, z, v):
        x = np.asarray(x, dtype=float)
        ds = d_sigma(x, v) if d_sigma is not None else fd.directional(sigma, x, v)
        return np.asarray(v, dtype=float) + np.einsum("...ij,...j->...i", ds, z)

    return GeometricalSde(state_dim, Additive(driver_dim), psi, dz, dzz, dx, extras={"sigma": sigma})


def from_smooth_levy(
    mu: Callable,
    sigma: Callable,
    F: Callable,
    nu0: FiniteJumpMeasure,
    state_dim: int,
    n_brownian: int,
    mc_samples: int = 100_000,
    seed: int = 0,
    probe: np.ndarray | None = None,
    dF: Callable | None = None,
) -> GeometricalSde:
    """SDE driven by ``(t, W, L)`` with coefficients ``mu``, ``sigma`` and jump map ``F``.

    Driver coordinates are ``z = (t, W^1..W^k, L^1..L^j)``. The drift is
    replaced by ``mu_tilde = mu - int_{|z|<=1} (F(x, z) - D_zF(x, 0) z) nu0(dz)``
    so that the geometrical form reproduces the Ito equation; the integral
    is a Monte Carlo average over a fixed ``nu0`` sample. ``sde.extras``
    exposes ``mu_tilde(x)`` and ``mu_tilde_stderr(x)``.
    """
    k = n_brownian
    nj = nu0.dim
    jumps = nu0.sample(_rng.generator(seed, 3), mc_samples)
    inside = (np.linalg.norm(jumps, axis=1) <= 1.0)[:, None]
    if probe is None:
        probe = probe_points(50, state_dim, seed=seed)
    zero_defect = np.abs(np.asarray(F(probe, np.zeros((probe.shape[0], nj))))).max()
    if zero_defect > 1e-12:
        raise NonIdentityError(f"F(x, 0) must vanish; found {zero_defect:.3e}")

    def integrand(x):
        x = np.asarray(x, dtype=float)[..., None, :]
        j = np.broadcast_to(jumps, x.shape[:-2] + jumps.shape)
        xb = np.broadcast_to(x, j.shape[:-1] + (state_dim,))
        if dF is not None:
            lin = dF(xb, np.zeros_like(j), j)
        else:
            lin = fd.directional(lambda zz: F(xb, zz), np.zeros_like(j), j)
        return (np.asarray(F(xb, j)) - lin) * inside

    def mu_tilde(x):
        x = np.asarray(x, dtype=float)
        if nu0.rate == 0:
            return np.asarray(mu(x), dtype=float)
        return np.asarray(mu(x), dtype=float) - nu0.rate * integrand(x).mean(axis=-2)

    def mu_tilde_stderr(x):
        if nu0.rate == 0:
            return np.zeros(np.shape(x))
        vals = integrand(x)
        return nu0.rate * vals.std(axis=-2, ddof=1) / np.sqrt(vals.shape[-2])

    def psi(x, z):
        t = z[..., 0:1]
        w = z[..., 1 : 1 + k]
        jz = z[..., 1 + k :]
        return x + mu_tilde(x) * t + np.einsum("...ij,...j->...i", sigma(x), w) + F(x, jz)

    sde = GeometricalSde(
        state_dim,
        Additive(1 + k + nj),
        psi,
        extras={"mu_tilde": mu_tilde, "mu_tilde_stderr": mu_tilde_stderr, "mu": mu, "sigma": sigma, "F": F},
    )
    return sde


def from_iterated_map(step_map: Callable, group: GroupDescriptor, state_dim: int) -> GeometricalSde:
    """A discrete-time random map ``x' = step_map(x, dz)``; usable only with :func:`solve_discrete`."""
    return GeometricalSde(state_dim, group, step_map, discrete_only=True)


def transport(sde: GeometricalSde, phi: Callable, phi_inv: Callable) -> GeometricalSde:
    """``Psi'(x, z) = phi(Psi(phi_inv(x), z))``: the same SDE in new coordinates."""

    def psi(x, z):
        return phi(sde(phi_inv(x), z))

    return GeometricalSde(sde.state_dim, sde.driver, psi, discrete_only=sde.discrete_only)
