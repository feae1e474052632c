import numpy as np
import pytest

from stosym import models as M
from stosym.errors import UsageError
from stosym.reduction import canonical_form_check, reconstruct, solve_gauge_eta, triangular_check
from stosym.transformations import InfinitesimalStochasticTransformation


def test_canonical_form():
    grid = np.random.default_rng(0).normal(size=(20, 3))
    good = [lambda x: np.stack([np.ones(x.shape[:-1]), np.zeros(x.shape[:-1]), np.zeros(x.shape[:-1])], -1)]
    bad = [lambda x: np.stack([np.ones(x.shape[:-1]), x[..., 0], np.zeros(x.shape[:-1])], -1)]
    assert canonical_form_check(good, grid)
    assert not canonical_form_check(bad, grid)


def test_constant_tau_along_translation():
    c = 0.7
    V = InfinitesimalStochasticTransformation(
        2, 1, lambda x: np.broadcast_to([1.0, 0.0], np.shape(x)), None, lambda x: np.full(np.shape(x)[:-1], c)
    )
    sol = solve_gauge_eta(V, [0.2, 0.0], None, points=np.array([[1.0, 0.3], [-0.5, 2.0], [0.2, -1.0]]), max_time=5.0)
    assert np.allclose(sol.eta, np.exp(-c * (sol.points[:, 0] - 0.2)), atol=1e-9)


def test_rotation_gauge_frame():
    pts = np.array([[0.5, 0.5], [-0.7, 0.2], [0.1, -0.9]])
    sol = solve_gauge_eta(M.rotation_generator(), [1.0, 0.0], None, points=pts)
    assert np.abs(sol.B - M.radial_frame(pts)).max() < 1e-9
    assert np.abs(sol.eta - 1).max() < 1e-12
    assert np.allclose(sol.transformation().B(pts[:1]), M.radial_frame(pts[:1]), atol=1e-9)


def test_triangular_polar_form():
    rng = np.random.default_rng(0)
    xs = np.stack([rng.uniform(-3, 3, 20), rng.uniform(0.2, 2, 20)], -1)
    zs = M.PLANAR_GROUP.identity() + 0.1 * rng.normal(size=(20, 6))
    assert triangular_check(M.polar_sde(), 1, xs, zs).passed
    assert not triangular_check(M.planar_affine_sde(), 1, rng.normal(size=(20, 2)), zs).passed
    with pytest.raises(UsageError):
        triangular_check(M.polar_sde(), 3, xs, zs)


def test_reconstruct_cumulative():
    from stosym.paths import CadlagPath, PathStyle
    from stosym.lie_groups import Additive

    times = np.arange(4.0)
    z = CadlagPath(times, [[0.0], [1.0], [3.0], [2.0]], PathStyle.DISCRETE_JUMP, Additive(1))
    reduced = CadlagPath(times, [[1.0], [1.0], [1.0], [1.0]], PathStyle.DISCRETE_JUMP)
    full = reconstruct(reduced, [lambda lower, dz: lower[..., 0] * dz[..., 0]], z, [5.0])
    assert np.allclose(full.values[:, 0], [5.0, 6.0, 8.0, 7.0])
