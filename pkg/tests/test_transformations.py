import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stosym import models as M
from stosym.errors import UsageError
from stosym.experiments import _random_generator, _random_transformation, _transformation_gap
from stosym.lie_groups import Additive
from stosym.noise_drivers import DiscreteIID, DriverSpec, sample
from stosym.geometrical_sde import from_affine, solve_discrete
from stosym.transformations import (
    InfinitesimalStochasticTransformation,
    StochasticTransformation,
    apply_E,
    apply_P,
    bracket,
    compose,
    euler_time_action,
    flow,
    invert,
    push_forward,
    rotation_action,
    rotation_matrix,
    so_basis,
    time_change,
)
from stosym.paths import CadlagPath, PathStyle

XS = np.random.default_rng(0).uniform(-1, 1, (25, 2))


def test_rotation_matrix_and_basis():
    R = rotation_matrix(0.4)
    assert np.allclose(R @ R.T, np.eye(2))
    (E,) = so_basis(2)
    assert np.allclose(E, -E.T)
    assert len(so_basis(3)) == 3


def test_flow_of_rotation_generator_matches_closed_form():
    T = flow(M.rotation_generator(), 0.7)
    exact = M.rotation_transformation(0.7)
    assert _transformation_gap(T, exact, XS) < 1e-9


def test_flow_self_check_and_inverse():
    T = flow(M.rotation_generator(), 0.5, self_check=True)
    assert np.allclose(T.Phi_inv(T.Phi(XS)), XS, atol=1e-10)


def test_flow_scaling_time_part():
    V = InfinitesimalStochasticTransformation(1, 1, lambda x: x, None, lambda x: np.full(np.shape(x)[:-1], 2.0))
    T = flow(V, 0.3)
    x = np.array([[1.5]])
    assert np.allclose(T.Phi(x), 1.5 * np.exp(0.3))
    assert np.allclose(T.eta(x), np.exp(0.6))


@given(st.integers(0, 2**32 - 1))
def test_compose_associative_and_inverse(seed):
    gen = np.random.default_rng(seed)
    T1, _, _ = _random_transformation(gen)
    T2, _, _ = _random_transformation(gen)
    T3, _, _ = _random_transformation(gen)
    xs = gen.uniform(-1, 1, (10, 2))
    assert _transformation_gap(compose(compose(T3, T2), T1), compose(T3, compose(T2, T1)), xs) < 1e-10
    ident = StochasticTransformation.identity(2, 2)
    assert _transformation_gap(compose(invert(T1), T1), ident, xs) < 1e-9


def test_invert_requires_inverse_map():
    with pytest.raises(UsageError):
        invert(StochasticTransformation(1, 1, lambda x: x))


def test_bracket_antisymmetric():
    gen = np.random.default_rng(3)
    V1, V2 = _random_generator(gen), _random_generator(gen)
    a, b = bracket(V1, V2), bracket(V2, V1)
    assert np.allclose(a.Y(XS), -b.Y(XS), atol=1e-6)
    assert np.allclose(a.C(XS), -b.C(XS), atol=1e-6)
    assert np.allclose(a.tau(XS), -b.tau(XS), atol=1e-6)


def test_push_forward_by_rotation_keeps_rotation_generator():
    V = M.rotation_generator()
    pushed = push_forward(M.rotation_transformation(0.3), V)
    assert np.allclose(pushed.Y(XS), V.Y(XS), atol=1e-9)
    assert np.allclose(pushed.C(XS), V.C(XS), atol=1e-6)


def test_apply_E_rotation_is_symmetry_of_planar_sde():
    sde = M.planar_affine_sde()
    from stosym.transformations import planar_affine_action

    moved = apply_E(M.rotation_transformation(0.9), sde, planar_affine_action())
    rng = np.random.default_rng(1)
    z = sde.driver.identity() + 0.3 * rng.normal(size=(20, 6))
    x = rng.normal(size=(20, 2))
    assert np.abs(moved(x, z) - sde(x, z)).max() < 1e-12


def test_time_change_retimes():
    p = CadlagPath([0.0, 1.0, 2.0], [[0.0], [1.0], [2.0]], PathStyle.DISCRETE_JUMP)
    q = time_change(p, [2.0, 0.5])
    assert np.allclose(q.times, [0.0, 2.0, 2.5])
    r = time_change(p, [2.0, 0.5], grid=[0.0, 1.0, 2.0, 2.5])
    assert np.allclose(r.values[:, 0], [0.0, 0.0, 1.0, 2.0])


def test_apply_P_time_scaling_matches_driver_scaling():
    # dX = dZ on R with a step law; eta = 4 scales increments by 4^(1/2) on the Euler driver
    sde = from_affine(lambda x: np.ones(np.shape(x) + (1,)), 1, 1)
    spec = DriverSpec(DiscreteIID(lambda rng, n: rng.normal(size=(n, 1)), Additive(1), 3.0), seed=0)
    z = sample(spec)
    x = solve_discrete(sde, z, [0.0])
    T = StochasticTransformation(1, 1, lambda x: 2 * x, lambda x: x / 2, eta_fn=lambda x: np.full(np.shape(x)[:-1], 4.0))
    from stosym.transformations import power_time_action

    xp, zp = apply_P(T, x, z, None, power_time_action(1, 0.5))
    assert np.allclose(zp.increments(), 2 * z.increments())
    assert np.allclose(xp.values, 2 * x.values)
    assert np.allclose(xp.times, 4 * x.times)


def test_euler_time_action():
    act = euler_time_action(2)
    assert np.allclose(act(4.0, np.array([1.0, 1.0, -1.0])), [4.0, 2.0, -2.0])
    assert np.allclose(act.gamma(4.0), np.diag([4.0, 2.0, 2.0]))


def test_rotation_action_generator():
    act = rotation_action(2)
    (E,) = act.basis
    z = np.array([1.0, 2.0])
    assert np.allclose(act.infinitesimal(E, z), E @ z)
    assert np.allclose(act.coefficients(3 * E), [3.0])
