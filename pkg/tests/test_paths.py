import numpy as np
import pytest

from stosym.errors import UsageError
from stosym.lie_groups import GeneralLinear
from stosym.paths import CadlagPath, PathStyle


def _path():
    return CadlagPath([0.0, 0.5, 1.0], [[0.0], [1.0], [3.0]], PathStyle.DISCRETE_JUMP)


def test_times_must_start_at_zero_and_increase():
    with pytest.raises(UsageError):
        CadlagPath([0.1, 1.0], [[0.0], [1.0]])
    with pytest.raises(UsageError):
        CadlagPath([0.0, 0.0], [[0.0], [1.0]])


def test_value_at_is_right_continuous():
    p = _path()
    assert p.value_at(0.49)[0] == 0.0
    assert p.value_at(0.5)[0] == 1.0
    assert p.value_at(10.0)[0] == 3.0


def test_increments_and_jump_times():
    p = _path()
    assert np.array_equal(p.increments()[:, 0], [1.0, 2.0])
    assert np.array_equal(p.jump_times(), [0.5, 1.0])


def test_group_increments():
    g = GeneralLinear(1)
    p = CadlagPath([0.0, 1.0, 2.0], [[1.0], [2.0], [6.0]], descriptor=g)
    assert np.allclose(p.increments()[:, 0], [2.0, 3.0])


def test_csv_roundtrip(tmp_path):
    p = _path()
    p.to_csv(tmp_path / "p.csv")
    q = CadlagPath.from_csv(tmp_path / "p.csv", style=PathStyle.DISCRETE_JUMP)
    assert np.array_equal(q.values, p.values) and np.array_equal(q.times, p.times)
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "t,coord_0"


def test_json_roundtrip_keeps_batch_and_descriptor():
    g = GeneralLinear(1)
    p = CadlagPath([0.0, 1.0], [[[1.0], [2.0]], [[1.0], [0.5]]], PathStyle.GRID_SAMPLED, g)
    q = CadlagPath.from_json(p.to_json())
    assert q.descriptor == g and q.style == p.style and np.array_equal(q.values, p.values)


def test_batch_selection():
    p = CadlagPath([0.0, 1.0], np.zeros((3, 2, 2)))
    assert p[1].batch_shape == ()
    with pytest.raises(UsageError):
        p[0][0]
