"""Ready-made equations, symmetries and drivers used by the experiments.

The central example is the planar affine equation ``Psi(x, z1, z2) = z1 x + z2``
on R^2 driven by GL(2) x R^2, which is rotation invariant whenever the driver
law is invariant under ``(z1, z2) -> (B z1 B^T, B z2)`` for orthogonal ``B``.
"""

from __future__ import annotations

import numpy as np

from .geometrical_sde import GeometricalSde
from .lie_groups import Additive, GeneralLinear, Product
from .noise_drivers import DiscreteIID, DriverSpec
from .paths import CadlagPath, PathStyle
from .schemes import BrownianSde
from .transformations import R2, InfinitesimalStochasticTransformation, StochasticTransformation, rotation_matrix

PLANAR_GROUP = Product(GeneralLinear(2), Additive(2))


def _split(z):
    z = np.asarray(z, dtype=float)
    return z[..., :4].reshape(z.shape[:-1] + (2, 2)), z[..., 4:]


def _mv(m, v):
    return np.einsum("...ij,...j->...i", m, v)


# ---------------------------------------------------------------------------
# planar affine equation


def planar_affine_sde() -> GeometricalSde:
    """``Psi(x, z) = z1 x + z2`` with exact derivatives."""

    def psi(x, z):
        z1, z2 = _split(z)
        return _mv(z1, x) + z2

    def dz(x, z, w):
        w1, w2 = _split(w)
        return _mv(w1, x) + w2

    def dzz(x, z, w):
        return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(z)[:-1] + (2,)))

    def dx(x, z, v):
        z1, _ = _split(z)
        return _mv(z1, v)

    return GeometricalSde(2, PLANAR_GROUP, psi, dz, dzz, dx, finite_differences=True)


def rotation_generator(c: float = 1.0) -> InfinitesimalStochasticTransformation:
    """``V = (R x, c R)``; ``c = 1`` is the rotation symmetry of the planar affine equation."""
    return InfinitesimalStochasticTransformation(
        2,
        2,
        lambda x: _mv(R2, x),
        lambda x: np.broadcast_to(c * R2, np.shape(x)[:-1] + (2, 2)),
        None,
        lambda x: np.broadcast_to(R2, np.shape(x)[:-1] + (2, 2)),
        lambda x, v: np.zeros(np.shape(x)[:-1] + (2, 2)),
    )


def rotation_transformation(a: float) -> StochasticTransformation:
    """Closed-form ``T_a = (R_a x, R_a)``."""
    Ra = rotation_matrix(a)
    return StochasticTransformation(
        2,
        2,
        lambda x: _mv(Ra, x),
        lambda x: _mv(Ra.T, x),
        lambda x: np.broadcast_to(Ra, np.shape(x)[:-1] + (2, 2)),
        None,
        lambda x: np.broadcast_to(Ra, np.shape(x)[:-1] + (2, 2)),
    )


def state_rotation_only(a: float) -> StochasticTransformation:
    """Rotates the state but not the noise; not a symmetry of the planar equation."""
    Ra = rotation_matrix(a)
    return StochasticTransformation(2, 2, lambda x: _mv(Ra, x), lambda x: _mv(Ra.T, x))


def radial_frame(x) -> np.ndarray:
    """``B(x) = [[x1, x2], [-x2, x1]] / |x|``: the rotation taking ``x`` onto the positive first axis."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    x1, x2 = x[..., 0] / r, x[..., 1] / r
    return np.stack([np.stack([x1, x2], -1), np.stack([-x2, x1], -1)], -2)


def gauge_fixing_transformation() -> StochasticTransformation:
    """``T = (id, radial_frame)``; pushes the rotation generator to a strong symmetry."""
    return StochasticTransformation(
        2, 2, lambda x: x, lambda x: x, radial_frame, None, lambda x: np.broadcast_to(np.eye(2), np.shape(x) + (2,))
    )


def gauge_fixed_sde() -> GeometricalSde:
    """Closed form of the planar equation after gauge fixing.

    ``Psi'(x, z) = [[x1, -x2], [x2, x1]] z1[:, 0] + radial_frame(x)^T z2``; it
    ignores the second column of ``z1``.
    """

    def psi(x, z):
        z1, z2 = _split(z)
        x = np.asarray(x, dtype=float)
        x1, x2 = x[..., 0], x[..., 1]
        M = np.stack([np.stack([x1, -x2], -1), np.stack([x2, x1], -1)], -2)
        return _mv(M, z1[..., :, 0]) + _mv(np.swapaxes(radial_frame(x), -1, -2), z2)

    return GeometricalSde(2, PLANAR_GROUP, psi)


# ---------------------------------------------------------------------------
# polar form (theta first, rho = squared radius)


def polar_map(x) -> np.ndarray:
    """``(theta, rho)`` with theta in (-pi, pi] from the positive first axis."""
    x = np.asarray(x, dtype=float)
    return np.stack([np.arctan2(x[..., 1], x[..., 0]), x[..., 0] ** 2 + x[..., 1] ** 2], -1)


def polar_inverse(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    s = np.sqrt(p[..., 1])
    return np.stack([s * np.cos(p[..., 0]), s * np.sin(p[..., 0])], -1)


def unwrap_polar(p) -> np.ndarray:
    """Unwrap the angle along the time axis (second to last) for path continuity."""
    p = np.array(p, dtype=float)
    p[..., 0] = np.unwrap(p[..., 0], axis=-1)
    return p


def _polar_vector(rho, z):
    z1, z2 = _split(z)
    s = np.sqrt(rho)[..., None]
    return s * z1[..., :, 0] + z2


def polar_sde() -> GeometricalSde:
    """The gauge-fixed equation in ``(theta, rho)``.

    ``rho' = |sqrt(rho) z1[:, 0] + z2|^2`` and ``theta' = theta + arg(sqrt(rho) z1[:, 0] + z2)``.
    """

    def psi(p, z):
        p = np.asarray(p, dtype=float)
        v = _polar_vector(p[..., 1], z)
        theta = p[..., 0] + np.arctan2(v[..., 1], v[..., 0])
        return np.stack([np.broadcast_to(theta, v.shape[:-1]), (v**2).sum(-1)], -1)

    return GeometricalSde(2, PLANAR_GROUP, psi)


def polar_radius_step(rho, z) -> np.ndarray:
    """Reduced recursion for ``rho`` alone."""
    v = _polar_vector(np.asarray(rho, dtype=float), z)
    return (v**2).sum(-1)


def polar_angle_increment(rho, z) -> np.ndarray:
    """``theta' - theta``; depends only on ``rho`` and the step."""
    v = _polar_vector(np.asarray(rho, dtype=float), z)
    return np.arctan2(v[..., 1], v[..., 0])


# ---------------------------------------------------------------------------
# drivers


def haar_orthogonal(rng: np.random.Generator, size: int) -> np.ndarray:
    """Haar-distributed O(2) matrices: uniform angle, reflection with probability 1/2."""
    ang = rng.uniform(-np.pi, np.pi, size)
    g = rotation_matrix(ang)
    flip = rng.random(size) < 0.5
    g[flip, :, 1] *= -1.0
    return g


def conjugation_invariant_sampler(log_spread: float = 0.05, shift_scale: float = 0.1):
    """Step law ``z1 = g diag(exp(s)) g^T``, ``z2 ~ N(0, shift_scale^2 I)`` with Haar ``g``.

    Both blocks are invariant in law under ``(B z1 B^T, B z2)`` for orthogonal ``B``.
    """

    def sampler(rng: np.random.Generator, size: int) -> np.ndarray:
        g = haar_orthogonal(rng, size)
        s = np.exp(log_spread * rng.standard_normal((size, 2)))
        z1 = np.einsum("nij,nj,nkj->nik", g, s, g)
        z2 = shift_scale * rng.standard_normal((size, 2))
        return np.concatenate([z1.reshape(size, 4), z2], axis=1)

    return sampler


def anisotropic_sampler(shift=(0.3, 0.0), shift_scale: float = 0.1):
    """Like the invariant sampler with a fixed diagonal ``z1`` and a shifted ``z2``; not rotation invariant."""

    def sampler(rng: np.random.Generator, size: int) -> np.ndarray:
        z1 = np.zeros((size, 2, 2))
        z1[:, 0, 0] = 1.1
        z1[:, 1, 1] = 0.9
        z2 = np.asarray(shift) + shift_scale * rng.standard_normal((size, 2))
        return np.concatenate([z1.reshape(size, 4), z2], axis=1)

    return sampler


def planar_discrete_driver(steps: int, seed: int = 0, **kw) -> DriverSpec:
    return DriverSpec(DiscreteIID(conjugation_invariant_sampler(**kw), PLANAR_GROUP, float(steps)), seed)


def bessel_driver(rng: np.random.Generator, n_paths: int, times) -> CadlagPath:
    """``Z1 = I`` constant and ``Z2`` a planar Brownian motion, sampled on ``times``."""
    times = np.asarray(times, dtype=float)
    dt = np.diff(times)
    W = np.zeros((n_paths, times.size, 2))
    W[:, 1:] = np.cumsum(rng.standard_normal((n_paths, dt.size, 2)) * np.sqrt(dt)[:, None], axis=1)
    eye = np.broadcast_to(np.eye(2).reshape(4), (n_paths, times.size, 4))
    return CadlagPath(times, np.concatenate([eye, W], axis=-1), PathStyle.GRID_SAMPLED, PLANAR_GROUP)


# ---------------------------------------------------------------------------
# Brownian examples for the schemes


def isotropic_noise_sde() -> BrownianSde:
    """``dX = dW`` on R^2."""
    return BrownianSde(
        2,
        2,
        lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        lambda x: np.broadcast_to(np.eye(2), np.shape(x)[:-1] + (2, 2)),
        lambda x, v: np.zeros(np.broadcast_shapes(np.shape(x), np.shape(v))),
        lambda x, v: np.zeros(np.broadcast_shapes(np.shape(x), np.shape(v))[:-1] + (2, 2)),
    )


def radial_noise_sde(lam: float = -0.5) -> BrownianSde:
    """``dX = lam X dt + (1 + |X|^2) dW`` on R^2; rotation generator ``(R x, R)`` is a quasi-strong symmetry."""

    def sigma(x):
        x = np.asarray(x, dtype=float)
        return (1.0 + (x**2).sum(-1))[..., None, None] * np.eye(2)

    def d_sigma(x, v):
        x = np.asarray(x, dtype=float)
        return (2.0 * (x * v).sum(-1))[..., None, None] * np.eye(2)

    return BrownianSde(2, 2, lambda x: lam * np.asarray(x, dtype=float), sigma, lambda x, v: lam * np.asarray(v, dtype=float), d_sigma)


def circle_noise_sde() -> BrownianSde:
    """``dX = u(X) . dW`` on R with ``u(x) = (cos x, sin x, 0)`` and three noises.

    ``V = (0, [u(x)]_x)`` (cross-product matrix) is a quasi-strong symmetry
    whose gauge part varies with the state.
    """

    def sigma(x):
        x = np.asarray(x, dtype=float)[..., 0]
        return np.stack([np.cos(x), np.sin(x), np.zeros_like(x)], -1)[..., None, :]

    def d_sigma(x, v):
        x0 = np.asarray(x, dtype=float)[..., 0]
        v = np.asarray(v, dtype=float)[..., 0]
        return (v[..., None] * np.stack([-np.sin(x0), np.cos(x0), np.zeros_like(x0)], -1))[..., None, :]

    return BrownianSde(1, 3, lambda x: np.zeros_like(np.asarray(x, dtype=float)), sigma, lambda x, v: np.zeros_like(np.asarray(v, dtype=float)), d_sigma)


def cross_matrix(u) -> np.ndarray:
    """``[u]_x`` with ``[u]_x v = u x v``."""
    u = np.asarray(u, dtype=float)
    z = np.zeros(u.shape[:-1])
    a, b, c = u[..., 0], u[..., 1], u[..., 2]
    return np.stack([np.stack([z, -c, b], -1), np.stack([c, z, -a], -1), np.stack([-b, a, z], -1)], -2)


def circle_noise_symmetry() -> InfinitesimalStochasticTransformation:
    def C(x):
        x = np.asarray(x, dtype=float)[..., 0]
        return cross_matrix(np.stack([np.cos(x), np.sin(x), np.zeros_like(x)], -1))

    return InfinitesimalStochasticTransformation(
        1,
        3,
        lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        C,
        None,
        lambda x: np.zeros(np.shape(x) + (1,)),
    )


def rotation_symmetry_linear() -> InfinitesimalStochasticTransformation:
    """Alias of ``rotation_generator(1)`` for the Brownian examples."""
    return rotation_generator(1.0)


def quadratic_field() -> InfinitesimalStochasticTransformation:
    """``Y = x^2 d/dx`` on R with no gauge part."""
    return InfinitesimalStochasticTransformation(
        1, 1, lambda x: np.asarray(x, dtype=float) ** 2, None, None, lambda x: 2.0 * np.asarray(x, dtype=float)[..., None]
    )


def scalar_noise_sde() -> BrownianSde:
    """``dX = dW`` on R."""
    return BrownianSde(
        1,
        1,
        lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        lambda x: np.ones(np.shape(x) + (1,)),
        lambda x, v: np.zeros(np.broadcast_shapes(np.shape(x), np.shape(v))),
        lambda x, v: np.zeros(np.broadcast_shapes(np.shape(x), np.shape(v)) + (1,)),
    )


def gbm_sde(mu: float = 1.0, lam: float = 2.0) -> BrownianSde:
    """``dX = mu X dt + lam X dW`` on R."""
    return BrownianSde(
        1,
        1,
        lambda x: mu * np.asarray(x, dtype=float),
        lambda x: lam * np.asarray(x, dtype=float)[..., None],
        lambda x, v: mu * np.asarray(v, dtype=float),
        lambda x, v: lam * np.asarray(v, dtype=float)[..., None] * np.ones(np.shape(x) + (1,)),
    )
