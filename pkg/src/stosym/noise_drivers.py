"""Driver semimartingales: Brownian motion, finite-activity Levy processes,
symmetric alpha-stable processes and discrete-time iid-increment processes.

A finite-activity Levy process with triplet ``(b0, A0, nu0)`` is realized as
``b0 t + C W_t + (compound Poisson)`` with ``C C^T = 2 A0``: the generator is
``b0 . grad + A0 : hess + jumps``, so a unit-variance Brownian motion has
``A0 = I / 2``. The drift ``b0`` is the drift relative to the truncation
``h(z) = z 1{|z| <= 1}``; the compound Poisson part is compensated
accordingly, i.e. the linear drift actually added is
``b0 - int h(z) nu0(dz)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import UsageError
from .lie_groups import Additive, GroupDescriptor
from .paths import CadlagPath, PathStyle
from . import rng as _rng

__all__ = [
    "FiniteJumpMeasure",
    "AlphaStableMeasure",
    "CharacteristicTriplet",
    "Brownian",
    "LevyFinite",
    "AlphaStable",
    "DiscreteIID",
    "DriverSpec",
    "sample",
    "characteristics",
    "driver_group",
    "truncation",
    "zero_measure",
    "point_mass",
    "gaussian_jumps",
    "uniform_ball_jumps",
    "symmetric_stable",
    "positive_stable",
    "isotropic_stable",
]

Sampler = Callable[[np.random.Generator, int], np.ndarray]


# ---------------------------------------------------------------------------
# jump measures


@dataclass(frozen=True)
class FiniteJumpMeasure:
    """A finite Levy measure ``rate * law`` on R^n.

    ``sampler(rng, size)`` returns ``size`` draws from ``law`` with shape ``(size, n)``.
    """

    dim: int
    rate: float
    sampler: Sampler = field(compare=False)
    name: str = "custom"

    def __post_init__(self):
        if self.rate < 0:
            raise UsageError("jump rate must be nonnegative")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if size == 0 or self.rate == 0:
            return np.zeros((size, self.dim))
        out = np.asarray(self.sampler(rng, size), dtype=float).reshape(size, self.dim)
        return out

    def pushforward(self, action: Callable[[np.ndarray], np.ndarray], name: str | None = None) -> "FiniteJumpMeasure":
        """Image measure under a map applied to each jump."""
        base = self.sampler

        def pushed(rng, size):
            return action(np.asarray(base(rng, size), dtype=float).reshape(size, self.dim))

        return FiniteJumpMeasure(self.dim, self.rate, pushed, name or f"pushforward({self.name})")

    def scaled(self, factor: float) -> "FiniteJumpMeasure":
        return FiniteJumpMeasure(self.dim, self.rate * factor, self.sampler, self.name)


@dataclass(frozen=True)
class AlphaStableMeasure:
    """Tag for the rotation-invariant measure ``|z|^{-n-alpha} dz`` (up to a constant)."""

    alpha: float
    dim: int = 1

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise UsageError(f"alpha must lie in (0, 2), got {self.alpha}")

    def tail_mass(self, radius) -> np.ndarray:
        """Mass of ``{|z| > radius}``, normalized so that the unit sphere's exterior has mass 1."""
        return np.asarray(radius, dtype=float) ** (-self.alpha)


JumpMeasure = Union[FiniteJumpMeasure, AlphaStableMeasure]


def zero_measure(n: int) -> FiniteJumpMeasure:
    return FiniteJumpMeasure(n, 0.0, lambda rng, size: np.zeros((size, n)), "zero")


def point_mass(point, rate: float) -> FiniteJumpMeasure:
    point = np.atleast_1d(np.asarray(point, dtype=float))
    return FiniteJumpMeasure(point.size, rate, lambda rng, size: np.tile(point, (size, 1)), "point_mass")


def gaussian_jumps(mean, cov, rate: float) -> FiniteJumpMeasure:
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))

    def draw(rng, size):
        return rng.multivariate_normal(mean, cov, size=size, method="eigh")

    return FiniteJumpMeasure(mean.size, rate, draw, "gaussian")


def uniform_ball_jumps(n: int, rate: float, radius: float = 1.0) -> FiniteJumpMeasure:
    """Jumps uniform in the ball of the given radius (an interval when ``n = 1``)."""

    def draw(rng, size):
        g = rng.standard_normal((size, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = radius * rng.random(size) ** (1.0 / n)
        return g * r[:, None]

    return FiniteJumpMeasure(n, rate, draw, "uniform_ball")


def truncation(z) -> np.ndarray:
    """``h(z) = z 1{|z| <= 1}`` on R^n."""
    z = np.asarray(z, dtype=float)
    inside = np.linalg.norm(z, axis=-1, keepdims=True) <= 1.0
    return np.where(inside, z, 0.0)


@dataclass(frozen=True)
class CharacteristicTriplet:
    b0: np.ndarray
    A0: np.ndarray
    nu0: JumpMeasure
    truncation: str = "unit_ball"

    def __post_init__(self):
        b0 = np.atleast_1d(np.asarray(self.b0, dtype=float))
        A0 = np.atleast_2d(np.asarray(self.A0, dtype=float))
        n = b0.size
        if A0.shape != (n, n):
            raise UsageError(f"A0 must be {n}x{n}")
        if not np.allclose(A0, A0.T, rtol=0, atol=1e-12):
            raise UsageError("A0 must be symmetric")
        if np.linalg.eigvalsh(A0).min() < -1e-12:
            raise UsageError("A0 must be positive semidefinite")
        if self.nu0.dim != n:
            raise UsageError("jump measure dimension does not match b0")
        if self.truncation != "unit_ball":
            raise UsageError("only the unit-ball truncation on R^n is implemented")
        object.__setattr__(self, "b0", b0)
        object.__setattr__(self, "A0", A0)

    @property
    def dim(self) -> int:
        return self.b0.size

    def diffusion_factor(self) -> np.ndarray:
        """A matrix ``C`` with ``C C^T = 2 A0``."""
        w, v = np.linalg.eigh(2.0 * self.A0)
        return v * np.sqrt(np.clip(w, 0.0, None))


# ---------------------------------------------------------------------------
# driver kinds


@dataclass(frozen=True)
class Brownian:
    k: int


@dataclass(frozen=True)
class LevyFinite:
    triplet: CharacteristicTriplet
    compensator_samples: int = 200_000


@dataclass(frozen=True)
class AlphaStable:
    alpha: float
    n: int = 1

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise UsageError(f"alpha must lie in (0, 2), got {self.alpha}")


@dataclass(frozen=True)
class DiscreteIID:
    """iid group increments at t = 1, 2, ...; ``sampler(rng, size)`` returns ``(size, d)`` coordinates."""

    sampler: Sampler = field(compare=False)
    group: GroupDescriptor
    horizon: float


@dataclass(frozen=True)
class DriverSpec:
    kind: Brownian | LevyFinite | AlphaStable | DiscreteIID
    seed: int = 0
    grid: np.ndarray | None = None

    def __post_init__(self):
        if self.grid is not None:
            object.__setattr__(self, "grid", np.asarray(self.grid, dtype=float))


def driver_group(kind) -> GroupDescriptor:
    if isinstance(kind, Brownian):
        return Additive(kind.k)
    if isinstance(kind, LevyFinite):
        return Additive(kind.triplet.dim)
    if isinstance(kind, AlphaStable):
        return Additive(kind.n)
    if isinstance(kind, DiscreteIID):
        return kind.group
    raise UsageError(f"unknown driver kind {kind!r}")


# ---------------------------------------------------------------------------
# stable samplers


def symmetric_stable(alpha: float, rng: np.random.Generator, size) -> np.ndarray:
    """Chambers-Mallows-Stuck draws with characteristic function ``exp(-|t|^alpha)``."""
    v = rng.uniform(-math.pi / 2, math.pi / 2, size)
    if alpha == 1.0:
        return np.tan(v)
    w = rng.exponential(1.0, size)
    return (
        np.sin(alpha * v)
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos(v - alpha * v) / w) ** ((1.0 - alpha) / alpha)
    )


def positive_stable(a: float, rng: np.random.Generator, size) -> np.ndarray:
    """Kanter draws with Laplace transform ``exp(-s^a)``, ``0 < a < 1``."""
    if not 0.0 < a < 1.0:
        raise UsageError("positive stable index must lie in (0, 1)")
    u = rng.uniform(0.0, math.pi, size)
    e = rng.exponential(1.0, size)
    zolotarev = (np.sin(a * u) ** a * np.sin((1.0 - a) * u) ** (1.0 - a) / np.sin(u)) ** (1.0 / (1.0 - a))
    return (zolotarev / e) ** ((1.0 - a) / a)


def isotropic_stable(alpha: float, n: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Rotation-invariant stable vectors with characteristic function ``exp(-|t|^alpha)``.

    One dimension uses Chambers-Mallows-Stuck; higher dimensions use the
    sub-Gaussian representation ``sqrt(2 A) G`` with ``A`` positive
    ``alpha/2``-stable.
    """
    if n == 1:
        return symmetric_stable(alpha, rng, size)[:, None]
    a = positive_stable(alpha / 2.0, rng, size)
    return np.sqrt(2.0 * a)[:, None] * rng.standard_normal((size, n))


# ---------------------------------------------------------------------------
# sampling


def _grid(spec: DriverSpec) -> np.ndarray:
    if spec.grid is None or spec.grid.size < 2:
        raise UsageError("continuous drivers need a time grid with at least two points")
    return spec.grid


def _compensator(nu: FiniteJumpMeasure, samples: int, seed: int) -> np.ndarray:
    if nu.rate == 0:
        return np.zeros(nu.dim)
    jumps = nu.sample(_rng.generator(seed, 7), samples)
    return nu.rate * truncation(jumps).mean(axis=0)


def sample(spec: DriverSpec, n_paths: int | None = None) -> CadlagPath:
    """Draw a driver path (or ``n_paths`` paths stacked on a leading axis)."""
    kind = spec.kind
    batch = () if n_paths is None else (int(n_paths),)
    gen = _rng.generator(spec.seed)
    if isinstance(kind, DiscreteIID):
        steps = int(math.floor(kind.horizon))
        if steps < 1:
            raise UsageError("DiscreteIID needs a horizon of at least one step")
        times = np.arange(steps + 1, dtype=float)
        count = int(np.prod(batch, dtype=int)) * steps
        incs = np.asarray(kind.sampler(gen, count), dtype=float).reshape(batch + (steps, kind.group.coordinate_dim))
        values = kind.group.accumulate(incs)
        return CadlagPath(times, values, PathStyle.DISCRETE_JUMP, kind.group)

    times = _grid(spec)
    dt = np.diff(times)
    group = driver_group(kind)
    n = group.coordinate_dim
    shape = batch + (dt.size, n)
    flags = part = None
    if isinstance(kind, Brownian):
        incs = gen.standard_normal(shape) * np.sqrt(dt)[:, None]
    elif isinstance(kind, AlphaStable):
        draws = isotropic_stable(kind.alpha, n, gen, int(np.prod(shape[:-1], dtype=int)))
        incs = draws.reshape(shape) * (dt ** (1.0 / kind.alpha))[:, None]
    elif isinstance(kind, LevyFinite):
        tri = kind.triplet
        nu = tri.nu0
        if not isinstance(nu, FiniteJumpMeasure):
            raise UsageError("LevyFinite needs a finite jump measure; use AlphaStable for the stable case")
        drift = tri.b0 - _compensator(nu, kind.compensator_samples, spec.seed)
        gauss = gen.standard_normal(shape) * np.sqrt(dt)[:, None]
        incs = drift * dt[:, None] + gauss @ tri.diffusion_factor().T
        counts = gen.poisson(nu.rate * dt, size=batch + dt.shape)
        total = int(counts.sum())
        jumps = nu.sample(gen, total)
        owner = np.repeat(np.arange(counts.size), counts.reshape(-1))
        part = np.zeros((counts.size, n))
        np.add.at(part, owner, jumps)
        part = part.reshape(shape)
        incs = incs + part
        flags = counts > 0
    else:
        raise UsageError(f"unknown driver kind {kind!r}")
    values = np.concatenate([np.zeros(batch + (1, n)), np.cumsum(incs, axis=-2)], axis=-2)
    return CadlagPath(times, values, PathStyle.GRID_SAMPLED, group, flags, part)


def characteristics(spec_or_kind) -> CharacteristicTriplet:
    kind = spec_or_kind.kind if isinstance(spec_or_kind, DriverSpec) else spec_or_kind
    if isinstance(kind, Brownian):
        return CharacteristicTriplet(np.zeros(kind.k), 0.5 * np.eye(kind.k), zero_measure(kind.k))
    if isinstance(kind, LevyFinite):
        return kind.triplet
    if isinstance(kind, AlphaStable):
        return CharacteristicTriplet(np.zeros(kind.n), np.zeros((kind.n, kind.n)), AlphaStableMeasure(kind.alpha, kind.n))
    if isinstance(kind, DiscreteIID):
        raise UsageError("a discrete-time driver has no continuous-time triplet; inspect its step law instead")
    raise UsageError(f"unknown driver kind {kind!r}")
