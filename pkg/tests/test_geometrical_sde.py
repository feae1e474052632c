import numpy as np
import pytest

from stosym import models as M
from stosym.errors import NonIdentityError, UsageError
from stosym.geometrical_sde import GeometricalSde, from_affine, from_iterated_map, from_smooth_levy, solve_discrete, solve_grid, transport
from stosym.lie_groups import Additive, GeneralLinear
from stosym.noise_drivers import Brownian, DriverSpec, gaussian_jumps, sample, zero_measure
from stosym.paths import CadlagPath, PathStyle


def test_identity_check_rejects_bad_map():
    sde = GeometricalSde(1, Additive(1), lambda x, z: x + z + 0.1)
    with pytest.raises(NonIdentityError):
        sde.check_identity()
    assert M.planar_affine_sde().check_identity() <= 1e-12


def test_analytic_derivatives_match_finite_differences():
    sde = M.planar_affine_sde()
    fd_sde = GeometricalSde(sde.state_dim, sde.driver, sde.psi)
    rng = np.random.default_rng(0)
    x = rng.normal(size=(10, 2))
    z = sde.driver.identity() + 0.3 * rng.normal(size=(10, 6))
    w = rng.normal(size=(10, 6))
    v = rng.normal(size=(10, 2))
    assert np.allclose(sde.dz(x, z, w), fd_sde.dz(x, z, w), atol=1e-6)
    assert np.allclose(sde.dx(x, z, v), fd_sde.dx(x, z, v), atol=1e-6)
    assert np.allclose(sde.dzz(x, z, w), fd_sde.dzz(x, z, w), atol=1e-5)


def test_disabled_finite_differences():
    sde = GeometricalSde(1, Additive(1), lambda x, z: x + z, finite_differences=False)
    with pytest.raises(UsageError):
        sde.dz(np.zeros(1), np.zeros(1), np.ones(1))


def test_solve_discrete_follows_recursion():
    sde = from_affine(lambda x: 2.0 * np.ones(np.shape(x) + (1,)), 1, 1)
    z = CadlagPath([0.0, 1.0, 2.0], [[0.0], [1.0], [0.5]], PathStyle.DISCRETE_JUMP, Additive(1))
    x = solve_discrete(sde, z, [1.0])
    assert np.allclose(x.values[:, 0], [1.0, 3.0, 2.0])


def test_solve_grid_on_linear_group_sde_is_exact_for_brownian_additive():
    # Psi(x, z) = x + z with z in R^2: the grid solution is the driver itself
    sde = from_affine(lambda x: np.broadcast_to(np.eye(2), np.shape(x) + (2,)), 2, 2)
    z = sample(DriverSpec(Brownian(2), seed=0, grid=np.linspace(0, 1, 101)), 3)
    x = solve_grid(sde, z, [0.5, -0.5])
    assert np.allclose(x.values - z.values, [0.5, -0.5], atol=1e-12)


def test_solve_grid_geometric_brownian_on_gl1():
    # Psi(x, z) = z x on GL(1): the solution is x0 times the driver
    sde = GeometricalSde(1, GeneralLinear(1), lambda x, z: z * x, lambda x, z, w: w * x, lambda x, z, w: np.zeros(np.broadcast_shapes(np.shape(x), np.shape(w))))
    times = np.linspace(0, 1, 11)
    vals = np.exp(np.linspace(0, 0.5, 11))[:, None]
    z = CadlagPath(times, vals, PathStyle.DISCRETE_JUMP, GeneralLinear(1))
    x = solve_grid(sde, z, [2.0])
    assert np.allclose(x.values, 2.0 * vals, atol=1e-12)


def test_driver_mismatch_rejected():
    sde = M.planar_affine_sde()
    z = sample(DriverSpec(Brownian(2), seed=0, grid=np.linspace(0, 1, 3)))
    with pytest.raises(UsageError):
        solve_discrete(sde, z, [0.0, 0.0])


def test_iterated_map_only_discrete():
    sde = from_iterated_map(lambda x, z: x + z, Additive(1), 1)
    z = CadlagPath([0.0, 1.0], [[0.0], [1.0]], PathStyle.DISCRETE_JUMP, Additive(1))
    assert solve_discrete(sde, z, [0.0]).values[-1, 0] == 1.0
    with pytest.raises(UsageError):
        solve_grid(sde, z, [0.0])


def test_smooth_levy_requires_vanishing_jump_map():
    nu = gaussian_jumps([0.0], [[1.0]], rate=1.0)
    with pytest.raises(NonIdentityError):
        from_smooth_levy(lambda x: 0 * x, lambda x: np.zeros(np.shape(x) + (1,)), lambda x, z: x + z, nu, 1, 1, mc_samples=100)


def test_smooth_levy_compensator():
    # F(x, z) = z^2: small jumps contribute int_{|z|<=1} z^2 nu(dz) to the compensator
    nu = gaussian_jumps([0.0], [[0.25]], rate=2.0)
    sde = from_smooth_levy(lambda x: 0 * x, lambda x: np.zeros(np.shape(x) + (1,)), lambda x, z: z**2, nu, 1, 1, mc_samples=200_000)
    x = np.zeros((1, 1))
    est = sde.extras["mu_tilde"](x)[0, 0]
    se = sde.extras["mu_tilde_stderr"](x)[0, 0]
    from scipy.integrate import quad
    from scipy.stats import norm

    exact = -2.0 * quad(lambda u: u**2 * norm.pdf(u, scale=0.5), -1, 1)[0]
    assert abs(est - exact) < 4 * se
    assert from_smooth_levy(lambda x: x, lambda x: np.zeros(np.shape(x) + (1,)), lambda x, z: 0 * z, zero_measure(1), 1, 1).extras["mu_tilde"](np.ones((1, 1)))[0, 0] == 1.0


def test_transport_conjugates():
    sde = from_affine(lambda x: np.ones(np.shape(x) + (1,)), 1, 1)
    moved = transport(sde, np.exp, np.log)
    assert np.isclose(moved(np.array([2.0]), np.array([1.0]))[0], 2.0 * np.e)
