import numpy as np
import pytest

from stosym import models as M
from stosym.errors import UsageError
from stosym.lie_groups import Additive
from stosym.noise_drivers import Brownian, CharacteristicTriplet, DiscreteIID, DriverSpec, characteristics, gaussian_jumps, uniform_ball_jumps
from stosym.symmetry_analysis import (
    brownian_determining_residual,
    check_discrete_gauge,
    check_levy_gauge,
    check_levy_time,
    determining_residual,
    euler_determining_residual,
    is_symmetry_pathwise,
    milstein_determining_residual,
)
from stosym.transformations import InfinitesimalStochasticTransformation, planar_affine_action, power_time_action, rotation_action, rotation_matrix


def test_rotation_is_symmetry_of_planar_sde():
    rep = determining_residual(M.planar_affine_sde(), M.rotation_generator(), planar_affine_action())
    assert rep.passes(1e-9)
    assert rep.grid_size == 200


def test_gauge_component_without_action_is_usage_error():
    with pytest.raises(UsageError):
        determining_residual(M.planar_affine_sde(), M.rotation_generator())


def test_scaling_generator_for_brownian_motion():
    V = InfinitesimalStochasticTransformation(1, 1, lambda x: x, None, lambda x: np.full(np.shape(x)[:-1], -2.0), lambda x: np.ones(np.shape(x) + (1,)))
    rep = brownian_determining_residual(M.scalar_noise_sde(), V)
    assert np.allclose(rep.values[..., 0], 0.0)
    assert np.allclose(rep.values[..., 1], -2.0)
    assert rep.per_equation["diffusion_00"] == pytest.approx(2.0)


def test_brownian_scaling_with_correct_tau_vanishes():
    V = InfinitesimalStochasticTransformation(1, 1, lambda x: x, None, lambda x: np.full(np.shape(x)[:-1], 2.0), lambda x: np.ones(np.shape(x) + (1,)))
    assert brownian_determining_residual(M.scalar_noise_sde(), V).passes()


def test_radial_sde_rotation_quasi_strong():
    assert brownian_determining_residual(M.radial_noise_sde(), M.rotation_symmetry_linear()).passes()
    assert brownian_determining_residual(M.circle_noise_sde(), M.circle_noise_symmetry(), box=(-3, 3)).passes()


def test_euler_and_milstein_residuals_for_rotation():
    rng = np.random.default_rng(0)
    xs = rng.normal(size=(50, 2))
    dt = rng.uniform(1e-3, 1e-1, 50)
    dW = rng.normal(size=(50, 2)) * np.sqrt(dt)[:, None]
    dWW = rng.normal(size=(50, 2, 2)) * dt[:, None, None]
    sde, V = M.radial_noise_sde(), M.rotation_symmetry_linear()
    assert euler_determining_residual(sde, V, xs, dt, dW).passes()
    assert milstein_determining_residual(sde, V, xs, dt, dW, dWW).passes()


def test_nonconstant_gauge_breaks_milstein_symmetry():
    rng = np.random.default_rng(1)
    xs = rng.uniform(-3, 3, (50, 1))
    dt = np.full(50, 0.05)
    dW = rng.normal(size=(50, 3)) * np.sqrt(0.05)
    dWW = rng.normal(size=(50, 3, 3)) * 0.05
    rep = milstein_determining_residual(M.circle_noise_sde(), M.circle_noise_symmetry(), xs, dt, dW, dWW)
    assert rep.max_abs > 1e-3


def test_levy_gauge_isotropic_passes_and_anisotropic_fails():
    act = rotation_action(2)
    gs = np.stack([rotation_matrix(a) for a in (0.4, 1.3, 2.5)])
    iso = CharacteristicTriplet(np.zeros(2), np.eye(2), uniform_ball_jumps(2, 2.0, 1.5))
    assert check_levy_gauge(iso, act, gs, seed=1).passed
    aniso = CharacteristicTriplet(np.zeros(2), np.diag([1.0, 2.0]), uniform_ball_jumps(2, 2.0, 1.5))
    assert not check_levy_gauge(aniso, act, gs).conditions["diffusion"].passed
    shifted = CharacteristicTriplet(np.zeros(2), np.eye(2), gaussian_jumps([1.0, 0.0], 0.1 * np.eye(2), 2.0))
    assert not check_levy_gauge(shifted, act, gs).conditions["measure"].passed


def test_brownian_time_scaling():
    tri = characteristics(Brownian(1))
    assert check_levy_time(tri, power_time_action(1, 0.5), [0.5, 2.0]).passed
    assert not check_levy_time(tri, power_time_action(1, 1.0), [0.5, 2.0]).passed


def test_shifted_gaussian_fails_discrete_gauge_check():
    act = rotation_action(2)
    gs = rotation_matrix(np.pi / 2)[None]
    centred = check_discrete_gauge(lambda rng, n: rng.normal(size=(n, 2)), act, gs)
    shifted = check_discrete_gauge(lambda rng, n: rng.normal(size=(n, 2)) + [1.0, 0.0], act, gs)
    assert centred.passed
    assert not shifted.passed


def test_pathwise_identity_and_state_only_rotation():
    sde = M.planar_affine_sde()
    spec = M.planar_discrete_driver(50, seed=3)
    ok = is_symmetry_pathwise(sde, M.rotation_transformation(0.3), spec, 5, [1.0, 0.5], planar_affine_action())
    bad = is_symmetry_pathwise(sde, M.state_rotation_only(0.3), spec, 5, [1.0, 0.5], planar_affine_action())
    assert ok.passes(1e-10)
    assert not bad.passes(1e-2)
