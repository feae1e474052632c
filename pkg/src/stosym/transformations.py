"""Stochastic transformations and their action on SDEs and paths.

A finite transformation is a triple ``T = (Phi, B, eta)``: a diffeomorphism
of the state space, a gauge-group valued map and a positive time-rescaling
function. An infinitesimal one is ``V = (Y, C, tau)`` with ``Y`` a vector field,
``C`` a Lie-algebra valued map (stored as a k x k matrix) and ``tau`` a real
function.

Geometrically, ``T`` acts on ``M x G x R_+`` by
``(x, g, s) -> (Phi(x), B(x) g, eta(x) s)`` and ``V`` is the vector field
``(Y(x), C(x) g, tau(x) s)``. Composition, inversion, pushforward and the
bracket below are the ones induced by this picture, so pushforward is a Lie
algebra homomorphism for the bracket
``[V1, V2] = ([Y1, Y2], Y1(C2) - Y2(C1) - [C1, C2], Y1(tau2) - Y2(tau1))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from . import fd
from .errors import FlowDivergenceError, NumericError, UnsupportedConfigurationError, UsageError
from .geometrical_sde import GeometricalSde
from .lie_groups import Additive, GeneralLinear, GroupDescriptor, Milstein, Product
from .paths import CadlagPath, PathStyle

__all__ = [
    "GaugeAction",
    "TimeAction",
    "StochasticTransformation",
    "InfinitesimalStochasticTransformation",
    "so_basis",
    "rotation_matrix",
    "rotation_action",
    "planar_affine_action",
    "euler_action",
    "milstein_action",
    "power_time_action",
    "euler_time_action",
    "milstein_time_action",
    "apply_gauge",
    "time_change",
    "compose",
    "invert",
    "bracket",
    "push_forward",
    "flow",
    "apply_E",
    "apply_P",
]

ETA_FLOOR = 1e-8
BLOWUP = 1e8

R2 = np.array([[0.0, -1.0], [1.0, 0.0]])


def rotation_matrix(angle) -> np.ndarray:
    angle = np.asarray(angle, dtype=float)
    c, s = np.cos(angle), np.sin(angle)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def so_basis(k: int) -> tuple[np.ndarray, ...]:
    """Basis ``E_ij = e_j e_i^T - e_i e_j^T`` (i < j) of so(k); for k = 2 this is the rotation generator."""
    out = []
    for i in range(k):
        for j in range(i + 1, k):
            e = np.zeros((k, k))
            e[j, i] = 1.0
            e[i, j] = -1.0
            out.append(e)
    return tuple(out)


def _mv(m, v):
    return np.einsum("...ij,...j->...i", m, v)


def _inv(m):
    return np.linalg.inv(np.asarray(m, dtype=float))


# ---------------------------------------------------------------------------
# actions


@dataclass(frozen=True, eq=False)
class GaugeAction:
    """Action ``Xi_g`` of a k x k matrix group on the driver group.

    ``act(g, z)`` and ``infinitesimal(C, z)`` (the generator along the
    Lie-algebra element ``C``) broadcast over leading axes. ``linear`` means
    ``act(g, .)`` is linear in coordinates and fixes the identity.
    """

    driver: GroupDescriptor
    dim: int
    act: Callable[[np.ndarray, np.ndarray], np.ndarray]
    infinitesimal_fn: Callable | None = None
    upsilon_fn: Callable | None = None
    basis: tuple = ()
    linear: bool = True
    differentiable: bool = False
    name: str = "custom"

    def __call__(self, g, z):
        return np.asarray(self.act(np.asarray(g, dtype=float), np.asarray(z, dtype=float)), dtype=float)

    def infinitesimal(self, C, z) -> np.ndarray:
        """``d/da Xi_{exp(a C)}(z)`` at ``a = 0``."""
        if self.infinitesimal_fn is not None:
            return np.asarray(self.infinitesimal_fn(np.asarray(C, dtype=float), np.asarray(z, dtype=float)))
        h = fd.FIRST_STEP
        C = np.asarray(C, dtype=float)
        return (self(expm(h * C), z) - self(expm(-h * C), z)) / (2 * h)

    def generators(self):
        """Coordinate vector fields ``K_l(z)`` for the basis elements."""
        return [lambda z, E=E: self.infinitesimal(E, z) for E in self.basis]

    def upsilon(self, g) -> np.ndarray:
        """Linearization of ``Xi_g`` at the identity, as an n x n matrix."""
        if self.upsilon_fn is not None:
            return np.asarray(self.upsilon_fn(np.asarray(g, dtype=float)))
        n = self.driver.coordinate_dim
        e = self.driver.identity()
        cols = []
        for b in range(n):
            d = np.zeros(n)
            d[b] = fd.FIRST_STEP
            cols.append((self(g, e + d) - self(g, e - d)) / (2 * fd.FIRST_STEP))
        return np.stack(cols, axis=-1)

    def coefficients(self, C) -> np.ndarray:
        """Coordinates of a Lie-algebra matrix against ``basis``."""
        A = np.stack([E.reshape(-1) for E in self.basis], axis=-1)
        C = np.asarray(C, dtype=float)
        flat = C.reshape(C.shape[:-2] + (-1,))
        sol, *_ = np.linalg.lstsq(A, flat.reshape(-1, A.shape[0]).T, rcond=None)
        return sol.T.reshape(C.shape[:-2] + (len(self.basis),))

    def from_coefficients(self, coeffs) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=float)
        return np.einsum("...l,lij->...ij", coeffs, np.stack(self.basis))


def rotation_action(n: int) -> GaugeAction:
    """``Xi_B(z) = B z`` on R^n."""
    return GaugeAction(
        Additive(n),
        n,
        lambda g, z: _mv(g, z),
        lambda C, z: _mv(C, z),
        lambda g: g,
        so_basis(n),
        name=f"rotation({n})",
    )


def planar_affine_action() -> GaugeAction:
    """``Xi_B(z1, z2) = (B z1 B^T, B z2)`` on GL(2) x R^2."""
    group = Product(GeneralLinear(2), Additive(2))

    def act(g, z):
        z1 = z[..., :4].reshape(z.shape[:-1] + (2, 2))
        m = g @ z1 @ np.swapaxes(g, -1, -2)
        lead = np.broadcast_shapes(m.shape[:-2], z.shape[:-1])
        return np.concatenate(
            [np.broadcast_to(m, lead + (2, 2)).reshape(lead + (4,)), np.broadcast_to(_mv(g, z[..., 4:]), lead + (2,))],
            axis=-1,
        )

    def inf(C, z):
        z1 = z[..., :4].reshape(z.shape[:-1] + (2, 2))
        m = C @ z1 + z1 @ np.swapaxes(C, -1, -2)
        lead = np.broadcast_shapes(m.shape[:-2], z.shape[:-1])
        return np.concatenate(
            [np.broadcast_to(m, lead + (2, 2)).reshape(lead + (4,)), np.broadcast_to(_mv(C, z[..., 4:]), lead + (2,))],
            axis=-1,
        )

    return GaugeAction(group, 2, act, inf, None, so_basis(2), name="planar_affine")


def euler_action(k: int) -> GaugeAction:
    """``(t, W) -> (t, B W)`` on the Euler driver R^{1+k}."""

    def act(g, z):
        w = _mv(g, z[..., 1:])
        t = np.broadcast_to(z[..., :1], w.shape[:-1] + (1,))
        return np.concatenate([t, w], axis=-1)

    def inf(C, z):
        w = _mv(C, z[..., 1:])
        return np.concatenate([np.zeros(w.shape[:-1] + (1,)), w], axis=-1)

    def ups(g):
        g = np.asarray(g, dtype=float)
        out = np.zeros(g.shape[:-2] + (k + 1, k + 1))
        out[..., 0, 0] = 1.0
        out[..., 1:, 1:] = g
        return out

    return GaugeAction(Additive(k + 1), k, act, inf, ups, so_basis(k), name=f"euler({k})")


def milstein_action(k: int) -> GaugeAction:
    """``(t, a, b) -> (t, B a, B b B^T)`` on Milstein(k)."""
    group = Milstein(k)

    def act(g, z):
        alpha, a, b = group.milstein_parts(z)
        return group.milstein_join(alpha, _mv(g, a), g @ b @ np.swapaxes(g, -1, -2))

    def inf(C, z):
        alpha, a, b = group.milstein_parts(z)
        return group.milstein_join(np.zeros_like(alpha), _mv(C, a), C @ b + b @ np.swapaxes(C, -1, -2))

    return GaugeAction(group, k, act, inf, None, so_basis(k), name=f"milstein({k})")


@dataclass(frozen=True, eq=False)
class TimeAction:
    """Action ``Gamma_r`` of R_+ on the driver group; ``generator(z) = d/da Gamma_{e^a}(z)`` at 0."""

    driver: GroupDescriptor
    act: Callable[[np.ndarray, np.ndarray], np.ndarray]
    generator_fn: Callable | None = None
    gamma_fn: Callable | None = None
    linear: bool = True
    name: str = "custom"

    def __call__(self, r, z):
        return np.asarray(self.act(np.asarray(r, dtype=float), np.asarray(z, dtype=float)), dtype=float)

    def generator(self, z) -> np.ndarray:
        if self.generator_fn is not None:
            return np.asarray(self.generator_fn(np.asarray(z, dtype=float)))
        h = fd.FIRST_STEP
        return (self(np.exp(h), z) - self(np.exp(-h), z)) / (2 * h)

    def gamma(self, r) -> np.ndarray:
        if self.gamma_fn is not None:
            return np.asarray(self.gamma_fn(np.asarray(r, dtype=float)))
        n = self.driver.coordinate_dim
        e = self.driver.identity()
        cols = []
        for b in range(n):
            d = np.zeros(n)
            d[b] = fd.FIRST_STEP
            cols.append((self(r, e + d) - self(r, e - d)) / (2 * fd.FIRST_STEP))
        return np.stack(cols, axis=-1)


def _rpow(r, p, z):
    r = np.asarray(r, dtype=float)
    return r[..., None] ** p if r.ndim else r**p


def power_time_action(n: int, exponent: float) -> TimeAction:
    """``Gamma_r(z) = r^exponent z`` on R^n (``exponent = 1/alpha`` for alpha-stable drivers)."""
    return TimeAction(
        Additive(n),
        lambda r, z: _rpow(r, exponent, z) * z,
        lambda z: exponent * z,
        lambda r: np.asarray(r, dtype=float)[..., None, None] ** exponent * np.eye(n),
        name=f"power({exponent:g})",
    )


def euler_time_action(k: int) -> TimeAction:
    """``(t, W) -> (r t, sqrt(r) W)``."""
    scale = np.array([1.0] + [0.5] * k)

    def act(r, z):
        return _rpow(r, scale, z) * z

    return TimeAction(Additive(k + 1), act, lambda z: scale * z, lambda r: np.asarray(r)[..., None, None] ** scale * np.eye(k + 1), name=f"euler_time({k})")


def milstein_time_action(k: int) -> TimeAction:
    """``(t, a, b) -> (r t, sqrt(r) a, r b)``, an automorphism of Milstein(k)."""
    scale = np.array([1.0] + [0.5] * k + [1.0] * (k * k))

    def act(r, z):
        return _rpow(r, scale, z) * z

    return TimeAction(Milstein(k), act, lambda z: scale * z, None, name=f"milstein_time({k})")


# ---------------------------------------------------------------------------
# transformations


@dataclass(frozen=True, eq=False)
class StochasticTransformation:
    """``T = (Phi, B, eta)``; every component broadcasts over leading axes.

    ``B(x)`` returns ``(..., k, k)`` and ``eta(x)`` returns ``(...)``. Missing
    ``B`` or ``eta`` mean the identity and 1.
    """

    state_dim: int
    gauge_dim: int
    phi: Callable
    phi_inv: Callable | None = None
    B_fn: Callable | None = None
    eta_fn: Callable | None = None
    phi_jac: Callable | None = None

    def B(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.B_fn is None:
            return np.broadcast_to(np.eye(self.gauge_dim), x.shape[:-1] + (self.gauge_dim,) * 2)
        return np.asarray(self.B_fn(x), dtype=float)

    def eta(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.eta_fn is None:
            return np.ones(x.shape[:-1])
        return np.asarray(self.eta_fn(x), dtype=float)

    def Phi(self, x) -> np.ndarray:
        return np.asarray(self.phi(np.asarray(x, dtype=float)), dtype=float)

    def Phi_inv(self, x) -> np.ndarray:
        if self.phi_inv is None:
            raise UsageError("this transformation has no inverse map")
        return np.asarray(self.phi_inv(np.asarray(x, dtype=float)), dtype=float)

    def dphi(self, x, v) -> np.ndarray:
        """``DPhi(x)[v]``."""
        if self.phi_jac is not None:
            return _mv(self.phi_jac(np.asarray(x, dtype=float)), v)
        return fd.directional(self.Phi, x, v)

    @classmethod
    def identity(cls, state_dim: int, gauge_dim: int) -> "StochasticTransformation":
        return cls(state_dim, gauge_dim, lambda x: x, lambda x: x, phi_jac=lambda x: np.broadcast_to(np.eye(state_dim), np.shape(x) + (state_dim,)))

    def defect(self, points) -> dict:
        """Checks on a probe grid: ``Phi_inv(Phi(x)) = x`` and ``eta > 0``."""
        points = np.asarray(points, dtype=float)
        return {
            "phi_roundtrip": float(np.abs(self.Phi_inv(self.Phi(points)) - points).max()),
            "eta_min": float(self.eta(points).min()),
        }


@dataclass(frozen=True, eq=False)
class InfinitesimalStochasticTransformation:
    """``V = (Y, C, tau)``. ``C(x)`` is a ``(..., k, k)`` Lie-algebra matrix.

    Optional ``Y_jac(x)`` (``(..., m, m)``), ``dC(x, v)`` and ``dtau(x, v)``
    replace finite differences.
    """

    state_dim: int
    gauge_dim: int
    Y_fn: Callable
    C_fn: Callable | None = None
    tau_fn: Callable | None = None
    Y_jac: Callable | None = None
    dC_fn: Callable | None = None
    dtau_fn: Callable | None = None
    fd_step: float = fd.FIRST_STEP

    def Y(self, x) -> np.ndarray:
        return np.asarray(self.Y_fn(np.asarray(x, dtype=float)), dtype=float)

    def C(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.C_fn is None:
            return np.zeros(x.shape[:-1] + (self.gauge_dim,) * 2)
        return np.broadcast_to(np.asarray(self.C_fn(x), dtype=float), x.shape[:-1] + (self.gauge_dim,) * 2)

    def tau(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.tau_fn is None:
            return np.zeros(x.shape[:-1])
        return np.broadcast_to(np.asarray(self.tau_fn(x), dtype=float), x.shape[:-1])

    def dY(self, x, v) -> np.ndarray:
        """``DY(x)[v]``."""
        if self.Y_jac is not None:
            return _mv(self.Y_jac(np.asarray(x, dtype=float)), v)
        return fd.directional(self.Y, x, v, self.fd_step)

    def jacobian(self, x) -> np.ndarray:
        if self.Y_jac is not None:
            return np.asarray(self.Y_jac(np.asarray(x, dtype=float)), dtype=float)
        return fd.jacobian(self.Y, x, self.fd_step)

    def dC(self, x, v) -> np.ndarray:
        if self.dC_fn is not None:
            return np.asarray(self.dC_fn(np.asarray(x, dtype=float), v), dtype=float)
        if self.C_fn is None:
            return np.zeros(np.shape(x)[:-1] + (self.gauge_dim,) * 2)
        return fd.directional(self.C, x, v, self.fd_step)

    def dtau(self, x, v) -> np.ndarray:
        if self.dtau_fn is not None:
            return np.asarray(self.dtau_fn(np.asarray(x, dtype=float), v), dtype=float)
        if self.tau_fn is None:
            return np.zeros(np.shape(x)[:-1])
        return fd.directional(lambda p: self.tau(p)[..., None], x, v, self.fd_step)[..., 0]

    def is_strong(self, points, tol: float = 1e-9) -> bool:
        return bool(np.abs(self.C(points)).max() <= tol and np.abs(self.tau(points)).max() <= tol)

    @classmethod
    def from_coefficients(cls, state_dim, Y, coeffs: Callable, basis: Sequence[np.ndarray], tau=None, Y_jac=None):
        """Build ``C`` from coefficient functions ``C^l(x)`` against a Lie-algebra basis."""
        stack = np.stack([np.asarray(E, dtype=float) for E in basis])

        def C(x):
            c = np.asarray(coeffs(x), dtype=float)
            return np.einsum("...l,lij->...ij", c, stack)

        return cls(state_dim, stack.shape[-1], Y, C, tau, Y_jac)


# ---------------------------------------------------------------------------
# algebra


def compose(T2: StochasticTransformation, T1: StochasticTransformation) -> StochasticTransformation:
    """``T2 o T1 = (Phi2 o Phi1, (B2 o Phi1) B1, (eta2 o Phi1) eta1)``."""
    if T2.state_dim != T1.state_dim or T2.gauge_dim != T1.gauge_dim:
        raise UsageError("transformations act on different spaces")

    def phi(x):
        return T2.Phi(T1.Phi(x))

    phi_inv = None
    if T1.phi_inv is not None and T2.phi_inv is not None:
        def phi_inv(x):
            return T1.Phi_inv(T2.Phi_inv(x))

    def B(x):
        return T2.B(T1.Phi(x)) @ T1.B(x)

    def eta(x):
        return T2.eta(T1.Phi(x)) * T1.eta(x)

    jac = None
    if T1.phi_jac is not None and T2.phi_jac is not None:
        def jac(x):
            return T2.phi_jac(T1.Phi(x)) @ T1.phi_jac(x)

    return StochasticTransformation(T1.state_dim, T1.gauge_dim, phi, phi_inv, B, eta, jac)


def invert(T: StochasticTransformation) -> StochasticTransformation:
    """``T^{-1} = (Phi^{-1}, (B o Phi^{-1})^{-1}, 1 / (eta o Phi^{-1}))``."""
    if T.phi_inv is None:
        raise UsageError("cannot invert a transformation without Phi^{-1}")

    def B(x):
        return _inv(T.B(T.Phi_inv(x)))

    def eta(x):
        return 1.0 / T.eta(T.Phi_inv(x))

    jac = None
    if T.phi_jac is not None:
        def jac(x):
            return _inv(T.phi_jac(T.Phi_inv(x)))

    return StochasticTransformation(T.state_dim, T.gauge_dim, T.phi_inv, T.phi, B, eta, jac)


def bracket(V1: InfinitesimalStochasticTransformation, V2: InfinitesimalStochasticTransformation) -> InfinitesimalStochasticTransformation:
    """``[V1, V2] = ([Y1, Y2], Y1(C2) - Y2(C1) - [C1, C2], Y1(tau2) - Y2(tau1))``.

    ``[Y1, Y2] = DY2[Y1] - DY1[Y2]`` and ``[C1, C2] = C1 C2 - C2 C1``.
    """

    def Y(x):
        return V2.dY(x, V1.Y(x)) - V1.dY(x, V2.Y(x))

    def C(x):
        c1, c2 = V1.C(x), V2.C(x)
        return V2.dC(x, V1.Y(x)) - V1.dC(x, V2.Y(x)) - (c1 @ c2 - c2 @ c1)

    def tau(x):
        return V2.dtau(x, V1.Y(x)) - V1.dtau(x, V2.Y(x))

    return InfinitesimalStochasticTransformation(V1.state_dim, V1.gauge_dim, Y, C, tau)


def push_forward(T: StochasticTransformation, V: InfinitesimalStochasticTransformation, dB: Callable | None = None, deta: Callable | None = None) -> InfinitesimalStochasticTransformation:
    """``T_* V = (Phi_* Y, (B C B^{-1} + Y(B) B^{-1}) o Phi^{-1}, (tau + Y(eta)/eta) o Phi^{-1})``.

    ``dB(x, v)`` and ``deta(x, v)`` optionally give the directional
    derivatives of ``B`` and ``eta``.
    """
    if T.phi_inv is None:
        raise UsageError("pushforward needs Phi^{-1}")

    def Y(xp):
        x = T.Phi_inv(xp)
        return T.dphi(x, V.Y(x))

    def C(xp):
        x = T.Phi_inv(xp)
        b = T.B(x)
        binv = _inv(b)
        y = V.Y(x)
        yb = dB(x, y) if dB is not None else fd.directional(T.B, x, y)
        return b @ V.C(x) @ binv + yb @ binv

    def tau(xp):
        x = T.Phi_inv(xp)
        y = V.Y(x)
        if deta is not None:
            ye = deta(x, y)
        else:
            ye = fd.directional(lambda p: T.eta(p)[..., None], x, y)[..., 0]
        return V.tau(x) + ye / T.eta(x)

    return InfinitesimalStochasticTransformation(V.state_dim, V.gauge_dim, Y, C, tau)


# ---------------------------------------------------------------------------
# flows


def _rk4_flow(V: InfinitesimalStochasticTransformation, x, a: float, steps: int):
    x = np.asarray(x, dtype=float).copy()
    k = V.gauge_dim
    g = np.broadcast_to(np.eye(k), x.shape[:-1] + (k, k)).copy()
    s = np.ones(x.shape[:-1])
    if steps == 0 or a == 0:
        return x, g, s
    h = a / steps

    def rhs(x, g, s):
        return V.Y(x), V.C(x) @ g, V.tau(x) * s

    for _ in range(steps):
        k1 = rhs(x, g, s)
        k2 = rhs(x + 0.5 * h * k1[0], g + 0.5 * h * k1[1], s + 0.5 * h * k1[2])
        k3 = rhs(x + 0.5 * h * k2[0], g + 0.5 * h * k2[1], s + 0.5 * h * k2[2])
        k4 = rhs(x + h * k3[0], g + h * k3[1], s + h * k3[2])
        x = x + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        g = g + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        s = s + h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        if not (np.all(np.isfinite(x)) and np.abs(x).max(initial=0) < BLOWUP and np.abs(g).max(initial=0) < BLOWUP and np.abs(s).max(initial=0) < BLOWUP):
            raise FlowDivergenceError("flow left the bounded region (norm above 1e8)")
    return x, g, s


def flow(V: InfinitesimalStochasticTransformation, a: float, steps_per_unit: int = 1000, self_check: bool = False, check_tol: float = 1e-8) -> StochasticTransformation:
    """The one-parameter transformation ``T_a`` generated by ``V``.

    Integrates ``dPhi/da = Y(Phi)``, ``dB/da = C(Phi) B``, ``deta/da = tau(Phi) eta``
    with classical RK4 and ``ceil(steps_per_unit * |a|)`` steps. With
    ``self_check`` every evaluation is repeated at half the step and the two
    results must agree to ``check_tol``.
    """
    a = float(a)
    steps = int(np.ceil(steps_per_unit * abs(a)))

    def run(x, sign=1.0):
        out = _rk4_flow(V, x, sign * a, steps)
        if self_check and steps:
            fine = _rk4_flow(V, x, sign * a, 2 * steps)
            err = max(float(np.abs(u - w).max()) for u, w in zip(out, fine))
            if err > check_tol:
                raise NumericError(f"flow step-halving check failed ({err:.2e} > {check_tol:g})")
        return out

    return StochasticTransformation(
        V.state_dim,
        V.gauge_dim,
        lambda x: run(x)[0],
        lambda x: run(x, -1.0)[0],
        lambda x: run(x)[1],
        lambda x: run(x)[2],
    )


# ---------------------------------------------------------------------------
# action on equations and processes


def apply_E(T: StochasticTransformation, sde: GeometricalSde, gauge: GaugeAction | None = None, time: TimeAction | None = None) -> GeometricalSde:
    """The transformed SDE ``Psi'(x, z) = Phi(Psi(y, Gamma_{1/eta(y)}(Xi_{B(y)^{-1}}(z))))`` with ``y = Phi^{-1}(x)``.

    Without a gauge action ``B`` is ignored; without a time action ``eta`` is.
    """
    if T.phi_inv is None:
        raise UsageError("E_T needs Phi^{-1}")

    def psi(x, z):
        y = T.Phi_inv(x)
        w = np.asarray(z, dtype=float)
        if gauge is not None:
            w = gauge(_inv(T.B(y)), w)
        if time is not None:
            w = time(1.0 / T.eta(y), w)
        return T.Phi(sde(y, w))

    return GeometricalSde(sde.state_dim, sde.driver, psi, discrete_only=sde.discrete_only, control=None)


def _transform_increments(incs, gauge, time, B, eta, grid: bool):
    if time is not None:
        if grid and not time.linear:
            raise UnsupportedConfigurationError("nonlinear time action on a grid-sampled driver")
        incs = time(eta, incs)
    if gauge is not None:
        if grid and not gauge.linear:
            raise UnsupportedConfigurationError("nonlinear gauge action on a grid-sampled driver needs derivative data")
        incs = gauge(B, incs)
    return incs


def apply_gauge(action: GaugeAction, G, z: CadlagPath) -> CadlagPath:
    """Gauge-transformed driver: step ``l`` increment becomes ``Xi_{G_l}(dZ_l)``.

    ``G`` has shape ``(..., L, k, k)`` with one (predictable) element per step.
    For grid-sampled drivers this exact per-increment rule is used for linear
    actions, where the second-order and jump corrections vanish.
    """
    if z.descriptor != action.driver:
        raise UsageError(f"action is on {action.driver!r}, path on {z.descriptor!r}")
    G = np.asarray(G, dtype=float)
    if G.shape[-3] != z.n_steps:
        raise UsageError("G needs one group element per step")
    grid = z.style == PathStyle.GRID_SAMPLED
    incs = _transform_increments(z.increments(), action, None, G, None, grid)
    values = action.driver.accumulate(incs, z.values[..., 0, :])
    part = None
    if z.jump_part is not None:
        part = action(G, z.jump_part) if action.linear else None
    return CadlagPath(z.times, values, z.style, z.descriptor, z.jump_flags, part)


def _beta(times, eta):
    eta = np.asarray(eta, dtype=float)
    if np.any(eta < ETA_FLOOR):
        raise UsageError(f"eta must stay above {ETA_FLOOR:g}")
    if np.all(eta == 1.0):
        return times
    return np.concatenate([[0.0], np.cumsum(eta * np.diff(times))])


def time_change(path: CadlagPath, eta, grid=None) -> CadlagPath:
    """``H_beta``: the path run on the clock ``beta_t = int_0^t eta ds``.

    ``eta`` holds one value per step (constant on each step). Without
    ``grid`` the result is the exact retimed path, sampled at ``beta(t_l)``.
    With ``grid`` it is resampled at ``alpha = beta^{-1}``, piecewise constant
    (value at the largest input time <= alpha_t) for discrete-jump paths and
    linearly interpolated for grid-sampled ones.
    """
    eta = np.broadcast_to(np.asarray(eta, dtype=float), (path.n_steps,))
    beta = _beta(path.times, eta)
    retimed = replace(path, times=beta)
    if grid is None:
        return retimed
    grid = np.asarray(grid, dtype=float)
    alpha = np.interp(grid, beta, path.times)
    if path.style == PathStyle.DISCRETE_JUMP:
        # largest input time <= alpha, with a rounding guard
        idx = np.searchsorted(path.times, alpha + 1e-12 * np.maximum(1.0, np.abs(alpha)), side="right") - 1
        values = np.take(path.values, idx, axis=-2)
    else:
        pos = np.interp(alpha, path.times, np.arange(path.times.size))
        lo = np.clip(np.floor(pos).astype(int), 0, path.times.size - 1)
        hi = np.clip(lo + 1, 0, path.times.size - 1)
        w = (pos - lo)[:, None]
        values = (1 - w) * np.take(path.values, lo, axis=-2) + w * np.take(path.values, hi, axis=-2)
    return CadlagPath(grid, values, path.style, path.descriptor)


def apply_P(T: StochasticTransformation, x: CadlagPath, z: CadlagPath, gauge: GaugeAction | None = None, time: TimeAction | None = None):
    """Transform a solution pair ``(X, Z)``.

    ``B`` and ``eta`` are evaluated at the pre-step state ``X_{l-1}``; the
    driver increment becomes ``Xi_{B}(Gamma_{eta}(dZ_l))``; the state becomes
    ``Phi(X)``; both are then run on the clock ``beta = sum eta dt``.
    """
    if not np.array_equal(x.times, z.times):
        raise UsageError("X and Z must share a time grid")
    pre = x.values[..., :-1, :]
    B = T.B(pre) if gauge is not None else None
    eta = T.eta(pre)
    grid = z.style == PathStyle.GRID_SAMPLED
    incs = _transform_increments(z.increments(), gauge, time, B, eta, grid)
    zvals = z.descriptor.accumulate(incs, z.values[..., 0, :])
    xvals = T.Phi(x.values)
    if np.all(eta == 1.0):
        times = x.times
    else:
        if x.batch_shape and not np.allclose(eta, eta.reshape(-1, eta.shape[-1])[0], rtol=0, atol=0):
            raise UsageError("a path-dependent time change needs one path at a time")
        times = _beta(x.times, eta.reshape(-1, eta.shape[-1])[0])
    return (
        CadlagPath(times, xvals, x.style),
        CadlagPath(times, zvals, z.style, z.descriptor),
    )
