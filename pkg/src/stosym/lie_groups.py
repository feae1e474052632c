"""Matrix Lie groups used as driver spaces.

Elements are flat coordinate vectors. A :class:`GroupDescriptor` knows how to
rebuild the matrix structure, multiply, invert and take jumps. All array
operations broadcast over leading axes, so a batch of paths is just an array
of shape ``(..., coordinate_dim)``.

The Milstein group ``N = R + R^k + R^k (x) R^k`` stores ``(alpha, a, b)`` with
``b`` flattened row-major. Its product is

    (alpha1, a1, b1) * (alpha2, a2, b2) = (alpha1 + alpha2, a1 + a2, b1 + b2 + a1^i a2^j)

which makes the jump ``z_after * z_before^{-1}`` of the cumulative path
``(t, W_t, int W^j dW^i)`` equal to ``(dt, dW, int (W^j - W^j_{t'}) dW^i)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .errors import DescriptorMismatchError, SingularElementError

__all__ = [
    "GroupDescriptor",
    "GroupElement",
    "Additive",
    "GeneralLinear",
    "Product",
    "Milstein",
    "mul",
    "inv",
    "jump",
    "DEFAULT_DET_TOL",
]

DEFAULT_DET_TOL = 1e-12


@dataclass(frozen=True)
class GroupDescriptor:
    """Description of a driver group.

    ``kind`` is one of ``"additive"``, ``"gl"``, ``"product"``, ``"milstein"``.
    ``size`` is ``n`` for additive groups and ``k`` for GL(k) and Milstein(k).
    """

    kind: str
    size: int = 0
    parts: tuple["GroupDescriptor", ...] = ()
    det_tol: float = field(default=DEFAULT_DET_TOL, compare=False)

    def __post_init__(self):
        if self.kind not in ("additive", "gl", "product", "milstein"):
            raise ValueError(f"unknown group kind {self.kind!r}")
        if self.kind == "product":
            if not self.parts:
                raise ValueError("a product group needs at least one factor")
        elif self.size < 1:
            raise ValueError("group size must be positive")

    # -- structure -----------------------------------------------------
    @property
    def coordinate_dim(self) -> int:
        if self.kind == "additive":
            return self.size
        if self.kind == "gl":
            return self.size * self.size
        if self.kind == "milstein":
            return 1 + self.size + self.size * self.size
        return sum(p.coordinate_dim for p in self.parts)

    @property
    def is_abelian(self) -> bool:
        if self.kind == "additive":
            return True
        if self.kind == "product":
            return all(p.is_abelian for p in self.parts)
        return False

    @property
    def is_additive(self) -> bool:
        """True when the group is (a product of) vector spaces under addition."""
        return self.kind == "additive" or (
            self.kind == "product" and all(p.is_additive for p in self.parts)
        )

    def with_tolerance(self, det_tol: float) -> "GroupDescriptor":
        parts = tuple(p.with_tolerance(det_tol) for p in self.parts)
        return GroupDescriptor(self.kind, self.size, parts, det_tol)

    def slices(self) -> list[slice]:
        """Coordinate slices of the factors of a product group."""
        if self.kind != "product":
            return [slice(0, self.coordinate_dim)]
        out, start = [], 0
        for p in self.parts:
            out.append(slice(start, start + p.coordinate_dim))
            start += p.coordinate_dim
        return out

    def split(self, coords):
        coords = np.asarray(coords, dtype=float)
        return [coords[..., s] for s in self.slices()]

    def join(self, pieces):
        return np.concatenate([np.asarray(p, dtype=float) for p in pieces], axis=-1)

    def identity(self) -> np.ndarray:
        if self.kind == "additive":
            return np.zeros(self.size)
        if self.kind == "gl":
            return np.eye(self.size).reshape(-1)
        if self.kind == "milstein":
            return np.zeros(self.coordinate_dim)
        return self.join([p.identity() for p in self.parts])

    def check(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        if coords.shape[-1:] != (self.coordinate_dim,):
            raise DescriptorMismatchError(
                f"expected trailing dimension {self.coordinate_dim}, got shape {coords.shape}"
            )
        return coords

    # -- GL helpers ----------------------------------------------------
    def matrix(self, coords) -> np.ndarray:
        """Matrix view of GL(k) coordinates (row-major)."""
        if self.kind != "gl":
            raise DescriptorMismatchError("matrix() is only defined for GL(k)")
        coords = np.asarray(coords, dtype=float)
        return coords.reshape(coords.shape[:-1] + (self.size, self.size))

    def flatten(self, mat) -> np.ndarray:
        mat = np.asarray(mat, dtype=float)
        return mat.reshape(mat.shape[:-2] + (-1,))

    def milstein_parts(self, coords):
        """Split Milstein(k) coordinates into ``(alpha, a, b)`` with ``b`` a k x k array."""
        if self.kind != "milstein":
            raise DescriptorMismatchError("milstein_parts() needs a Milstein group")
        k = self.size
        coords = np.asarray(coords, dtype=float)
        alpha = coords[..., 0]
        a = coords[..., 1 : 1 + k]
        b = coords[..., 1 + k :].reshape(coords.shape[:-1] + (k, k))
        return alpha, a, b

    def milstein_join(self, alpha, a, b) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=float)
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        lead = np.broadcast_shapes(alpha.shape, a.shape[:-1], b.shape[:-2])
        return np.concatenate(
            [
                np.broadcast_to(alpha, lead)[..., None],
                np.broadcast_to(a, lead + a.shape[-1:]),
                np.broadcast_to(b, lead + b.shape[-2:]).reshape(lead + (-1,)),
            ],
            axis=-1,
        )

    # -- arithmetic ----------------------------------------------------
    def mul(self, x, y) -> np.ndarray:
        x, y = self.check(x), self.check(y)
        if self.kind == "additive":
            return x + y
        if self.kind == "gl":
            return self.flatten(self.matrix(x) @ self.matrix(y))
        if self.kind == "milstein":
            ax, aa, ab = self.milstein_parts(x)
            bx, ba, bb = self.milstein_parts(y)
            outer = aa[..., :, None] * ba[..., None, :]
            return self.milstein_join(ax + bx, aa + ba, ab + bb + outer)
        return self.join([p.mul(u, v) for p, u, v in zip(self.parts, self.split(x), self.split(y))])

    def inv(self, x) -> np.ndarray:
        x = self.check(x)
        if self.kind == "additive":
            return -x
        if self.kind == "gl":
            m = self.matrix(x)
            det = np.linalg.det(m)
            if np.any(np.abs(det) <= self.det_tol):
                raise SingularElementError(
                    f"GL({self.size}) element with |det| <= {self.det_tol:g} is not invertible"
                )
            return self.flatten(np.linalg.inv(m))
        if self.kind == "milstein":
            alpha, a, b = self.milstein_parts(x)
            return self.milstein_join(-alpha, -a, -b + a[..., :, None] * a[..., None, :])
        return self.join([p.inv(u) for p, u in zip(self.parts, self.split(x))])

    def jump(self, after, before) -> np.ndarray:
        """``after * before^{-1}``."""
        return self.mul(after, self.inv(before))

    def accumulate(self, increments, start=None) -> np.ndarray:
        """Cumulative path ``Z_l = dZ_l * Z_{l-1}`` from increments along axis -2.

        Returns an array with one more entry along that axis (``Z_0`` first).
        """
        increments = self.check(increments)
        lead = increments.shape[:-2]
        z = self.identity() if start is None else self.check(start)
        z = np.broadcast_to(z, lead + (self.coordinate_dim,)).astype(float)
        if self.is_additive:
            return np.concatenate([z[..., None, :], z[..., None, :] + np.cumsum(increments, axis=-2)], axis=-2)
        out = np.empty(lead + (increments.shape[-2] + 1, self.coordinate_dim))
        out[..., 0, :] = z
        for step in range(increments.shape[-2]):
            z = self.mul(increments[..., step, :], z)
            out[..., step + 1, :] = z
        return out

    def increments(self, values) -> np.ndarray:
        """Jumps ``Z_l * Z_{l-1}^{-1}`` between consecutive entries along axis -2."""
        values = self.check(values)
        return self.jump(values[..., 1:, :], values[..., :-1, :])

    # -- display -------------------------------------------------------
    def __repr__(self) -> str:
        if self.kind == "additive":
            return f"Additive({self.size})"
        if self.kind == "gl":
            return f"GeneralLinear({self.size})"
        if self.kind == "milstein":
            return f"Milstein({self.size})"
        return "Product(" + ", ".join(repr(p) for p in self.parts) + ")"

    def to_dict(self) -> dict:
        if self.kind == "product":
            return {"kind": "product", "parts": [p.to_dict() for p in self.parts]}
        return {"kind": self.kind, "size": self.size}

    @classmethod
    def from_dict(cls, data: dict) -> "GroupDescriptor":
        kind = data["kind"]
        if kind == "product":
            return Product(*(cls.from_dict(p) for p in data["parts"]))
        return cls(kind, int(data["size"]))


def Additive(n: int) -> GroupDescriptor:
    return GroupDescriptor("additive", n)


def GeneralLinear(k: int, det_tol: float = DEFAULT_DET_TOL) -> GroupDescriptor:
    return GroupDescriptor("gl", k, det_tol=det_tol)


def Product(*parts: GroupDescriptor) -> GroupDescriptor:
    return GroupDescriptor("product", 0, tuple(parts))


def Milstein(k: int) -> GroupDescriptor:
    return GroupDescriptor("milstein", k)


@dataclass(frozen=True, eq=False)
class GroupElement:
    """An element of a driver group in flat coordinates."""

    descriptor: GroupDescriptor
    coords: np.ndarray

    def __post_init__(self):
        coords = self.descriptor.check(np.array(self.coords, dtype=float))
        if coords.ndim != 1:
            raise ValueError("GroupElement holds a single element; use descriptor methods for batches")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        if self.descriptor.kind == "gl":
            if abs(np.linalg.det(self.descriptor.matrix(coords))) <= self.descriptor.det_tol:
                raise SingularElementError("GL element is not invertible")

    @classmethod
    def identity(cls, descriptor: GroupDescriptor) -> "GroupElement":
        return cls(descriptor, descriptor.identity())

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return mul(self, other)

    def inverse(self) -> "GroupElement":
        return inv(self)

    def allclose(self, other: "GroupElement", atol: float = 1e-12) -> bool:
        return self.descriptor == other.descriptor and np.allclose(self.coords, other.coords, rtol=0, atol=atol)

    def __repr__(self) -> str:
        return f"GroupElement({self.descriptor!r}, {np.array2string(self.coords, precision=6)})"


def _same(a: GroupElement, b: GroupElement) -> GroupDescriptor:
    if a.descriptor != b.descriptor:
        raise DescriptorMismatchError(f"{a.descriptor!r} vs {b.descriptor!r}")
    return a.descriptor


def mul(a: GroupElement, b: GroupElement, *more: GroupElement) -> GroupElement:
    """Group product ``a * b`` (left to right for extra arguments)."""
    if more:
        return reduce(mul, (a, b) + more)
    d = _same(a, b)
    return GroupElement(d, d.mul(a.coords, b.coords))


def inv(a: GroupElement) -> GroupElement:
    return GroupElement(a.descriptor, a.descriptor.inv(a.coords))


def jump(z_after: GroupElement, z_before: GroupElement) -> GroupElement:
    """Jump ``z_after * z_before^{-1}``."""
    d = _same(z_after, z_before)
    return GroupElement(d, d.jump(z_after.coords, z_before.coords))
