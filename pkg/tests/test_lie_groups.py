import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stosym.errors import DescriptorMismatchError, SingularElementError, UsageError
from stosym.lie_groups import Additive, GeneralLinear, GroupElement, Milstein, Product, inv, jump, mul

coords = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def test_coordinate_dims():
    assert Additive(3).coordinate_dim == 3
    assert GeneralLinear(2).coordinate_dim == 4
    assert Milstein(2).coordinate_dim == 1 + 2 + 4
    assert Product(GeneralLinear(2), Additive(2)).coordinate_dim == 6


def test_additive_product():
    a = GroupElement(Additive(2), [1, 2])
    b = GroupElement(Additive(2), [3, 4])
    assert np.array_equal(mul(a, b).coords, [4, 6])


def test_milstein_product_tensor_term():
    g = Milstein(1)
    out = mul(GroupElement(g, [1, 2, 3]), GroupElement(g, [1, 1, 1]))
    assert np.array_equal(out.coords, [2, 3, 6])


def test_milstein_inverse_formula():
    g = Milstein(2)
    x = np.array([0.5, 1.0, -2.0, 0.1, 0.2, 0.3, 0.4])
    alpha, a, b = g.milstein_parts(g.inv(x))
    assert alpha == -0.5
    assert np.array_equal(a, [-1.0, 2.0])
    assert np.allclose(b, -np.array([[0.1, 0.2], [0.3, 0.4]]) + np.outer([1.0, -2.0], [1.0, -2.0]))


def test_gl_inverse_roundtrip():
    g = GeneralLinear(2)
    A = GroupElement(g, [2.0, 1.0, 0.5, 3.0])
    assert (A * A.inverse()).allclose(GroupElement.identity(g))


def test_singular_matrix_rejected():
    with pytest.raises(SingularElementError):
        inv(GroupElement(GeneralLinear(2), [1.0, 2.0, 2.0, 4.0]))


def test_descriptor_mismatch():
    with pytest.raises(DescriptorMismatchError):
        mul(GroupElement(Additive(2), [0, 0]), GroupElement(Additive(3), [0, 0, 0]))
    assert issubclass(DescriptorMismatchError, UsageError)


def test_jump_is_after_times_inverse_before():
    g = GeneralLinear(2)
    before = np.array([1.0, 0.2, 0.0, 1.0])
    step = np.array([0.9, 0.0, 0.1, 1.1])
    after = g.mul(step, before)
    assert np.allclose(jump(GroupElement(g, after), GroupElement(g, before)).coords, step, atol=1e-12)


def test_accumulate_and_increments_invert_each_other():
    g = Milstein(2)
    rng = np.random.default_rng(0)
    incs = rng.normal(size=(5, g.coordinate_dim))
    vals = g.accumulate(incs)
    assert np.allclose(vals[0], g.identity())
    assert np.allclose(g.increments(vals), incs, atol=1e-12)


def test_descriptor_roundtrip_dict():
    g = Product(GeneralLinear(2), Additive(2))
    assert type(g).from_dict(g.to_dict()) == g


@given(arrays(float, (3, 7), elements=coords))
def test_milstein_associative_and_inverse(x):
    g = Milstein(2)
    a, b, c = x
    assert np.allclose(g.mul(g.mul(a, b), c), g.mul(a, g.mul(b, c)), atol=1e-9)
    assert np.allclose(g.mul(a, g.inv(a)), g.identity(), atol=1e-12)
    assert np.allclose(g.mul(g.identity(), a), a)


@given(arrays(float, (2, 6), elements=coords))
def test_product_group_inverse(x):
    g = Product(GeneralLinear(2), Additive(2))
    a = x[0].copy()
    a[:4] = [2.0 + abs(a[0]), a[1] * 0.1, a[2] * 0.1, 2.0 + abs(a[3])]
    assert np.allclose(g.mul(a, g.inv(a)), g.identity(), atol=1e-12)
