import numpy as np
import pytest

from stosym import models as M
from stosym.errors import UsageError
from stosym.schemes import (
    DiscretizedNoise,
    brownian_noise,
    cumulative_iterated_integral,
    euler_sde,
    euler_solve,
    gauge_rotate_euler,
    levy_area,
    milstein_group_path,
    milstein_sde,
    milstein_solve,
)


def test_scalar_levy_area_left_point_identity():
    # for k = 1 the left-point sum equals (dW^2 - sum of squared sub-increments) / 2 exactly
    times = np.linspace(0, 1, 11)
    noise, fine, W = brownian_noise(1, times, seed=0, substeps=100)
    sq = np.add.reduceat(np.diff(W[:, 0]) ** 2, np.arange(0, 1000, 100))
    assert np.allclose(noise.dWW[:, 0, 0], 0.5 * (noise.dW[:, 0] ** 2 - sq), atol=1e-12)


def test_scalar_levy_area_converges_to_closed_form():
    # the gap is (sum dw^2 - dt) / 2 with standard deviation dt / sqrt(2 n)
    times = np.linspace(0, 0.1, 11)
    gaps = []
    for substeps in (10, 100, 10_000):
        noise, _, _ = brownian_noise(1, times, seed=0, substeps=substeps)
        gaps.append(np.abs(noise.dWW[:, 0, 0] - 0.5 * (noise.dW[:, 0] ** 2 - noise.dt)).max())
    assert gaps[-1] <= 1e-3
    assert gaps[0] > gaps[-1]


def test_levy_area_symmetric_part():
    times = np.linspace(0, 1, 6)
    noise, fine, W = brownian_noise(2, times, seed=1, substeps=200)
    sym = noise.dWW + np.swapaxes(noise.dWW, -1, -2)
    outer = noise.dW[:, :, None] * noise.dW[:, None, :]
    dw = np.diff(W, axis=0)
    covariation = np.add.reduceat(dw[:, :, None] * dw[:, None, :], np.arange(0, 1000, 200), axis=0)
    # left-point sums: symmetric part is the product of increments minus the discrete covariation
    assert np.allclose(sym, outer - covariation, atol=1e-12)
    assert np.allclose(cumulative_iterated_integral(fine, W, times)[-1], levy_area(fine, W, [0.0, 1.0]).dWW[0], atol=1e-12)


def test_levy_area_requires_refinement():
    with pytest.raises(UsageError):
        levy_area(np.linspace(0, 1, 5), np.zeros((5, 1)), [0.0, 0.3, 1.0])


def test_scalar_constructor_and_roundtrip(tmp_path):
    noise = DiscretizedNoise.scalar([0.0, 0.5, 1.0], [[0.2], [-0.1]])
    assert np.allclose(noise.dWW[:, 0, 0], 0.5 * (np.array([0.04, 0.01]) - 0.5))
    noise.to_csv(tmp_path / "n.csv")
    back = DiscretizedNoise.from_csv(tmp_path / "n.csv")
    assert np.allclose(back.dWW, noise.dWW) and np.allclose(back.dW, noise.dW)
    assert np.allclose(DiscretizedNoise.from_json(noise.to_json()).dW, noise.dW)


def test_euler_solve_matches_geometrical_form():
    sde = M.gbm_sde()
    times = np.linspace(0, 1, 21)
    noise = brownian_noise(1, times, seed=2)
    direct = euler_solve(sde, noise, [1.0])
    G = euler_sde(sde)
    x = np.array([1.0])
    for l in range(20):
        x = G(x, np.concatenate([[noise.dt[l]], noise.dW[l]]))
    assert np.allclose(direct.values[-1], x, atol=1e-12)


def test_milstein_solve_matches_geometrical_form():
    sde = M.gbm_sde()
    times = np.linspace(0, 1, 21)
    noise = DiscretizedNoise.scalar(times, brownian_noise(1, times, seed=3).dW)
    direct = milstein_solve(sde, noise, [1.0])
    G = milstein_sde(sde)
    z = milstein_group_path(noise)
    incs = z.increments()
    x = np.array([1.0])
    for l in range(20):
        x = G(x, incs[l])
    assert np.allclose(direct.values[-1], x, atol=1e-10)


def test_milstein_identity_and_euler_identity():
    rng = np.random.default_rng(0)
    xs = rng.normal(size=(10, 2))
    assert euler_sde(M.radial_noise_sde()).identity_defect(xs) == 0.0
    assert milstein_sde(M.radial_noise_sde()).identity_defect(xs) == 0.0


def test_milstein_needs_iterated_integrals():
    noise = brownian_noise(2, np.linspace(0, 1, 3), seed=0)
    with pytest.raises(UsageError):
        milstein_solve(M.radial_noise_sde(), noise, [0.0, 0.0])


def test_gauge_rotation_rejects_non_orthogonal():
    noise = brownian_noise(2, np.linspace(0, 1, 3), seed=0)
    with pytest.raises(UsageError):
        gauge_rotate_euler(np.broadcast_to(2 * np.eye(2), (2, 2, 2)), noise)


def test_euler_rotation_along_solution_is_pathwise_equivalent():
    # rotating isotropic noise by any orthogonal field keeps Euler paths equal in law; check the
    # rotated increments stay unit covariance
    noise = brownian_noise(2, np.linspace(0, 1, 2001), seed=5)
    R = np.broadcast_to(np.array([[0.0, -1.0], [1.0, 0.0]]), (2000, 2, 2))
    rotated = gauge_rotate_euler(R, noise)
    assert np.allclose(rotated.dW, noise.dW @ R[0].T)


from hypothesis import given
from hypothesis import strategies as st


@given(st.floats(-np.pi, np.pi), st.integers(0, 2**31))
def test_euler_paths_commute_with_rotation(angle, seed):
    # (R x, R) is a symmetry of dX = lam X dt + (1 + |X|^2) dW, and the Euler map inherits it exactly
    from stosym.transformations import rotation_matrix

    R = rotation_matrix(angle)
    sde = M.radial_noise_sde()
    noise = brownian_noise(2, np.linspace(0, 0.1, 21), seed=seed)
    x0 = np.array([0.3, -0.2])
    base = euler_solve(sde, noise, x0)
    turned = euler_solve(sde, DiscretizedNoise(noise.times, noise.dW @ R.T), R @ x0)
    assert np.abs(turned.values - base.values @ R.T).max() <= 1e-12
