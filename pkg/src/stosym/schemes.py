"""Euler and Milstein schemes for Brownian SDEs ``dX = mu dt + sigma dW``.

Iterated integrals use ``dWW[a, b] = int (W^b - W^b_{t'}) dW^a`` over each
step (integrand index second, integrator index first). With this convention
the Milstein correction is

    sum_{a, b} sigma^j_a d_j sigma^i_b  dWW[b, a]

(the repeated Ito integral ``int int dW^a dW^b``), which reduces to
``sigma sigma' (dW^2 - dt) / 2`` in one dimension.

Both schemes are also exposed as geometrical SDEs: Euler over ``R^{1+k}``
with coordinates ``(dt, dW)`` and Milstein over the Milstein group with
coordinates ``(dt, dW, dWW)``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import fd
from . import rng as _rng
from .errors import UsageError
from .geometrical_sde import GeometricalSde
from .lie_groups import Additive, Milstein
from .paths import CadlagPath, PathStyle

__all__ = [
    "BrownianSde",
    "DiscretizedNoise",
    "brownian_noise",
    "levy_area",
    "cumulative_iterated_integral",
    "euler_solve",
    "milstein_solve",
    "euler_sde",
    "milstein_sde",
    "milstein_group_path",
    "gauge_rotate_euler",
    "gauge_rotate_milstein",
    "rotate_along_solution",
    "check_orthogonal",
]

ORTHO_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BrownianSde:
    """``dX = mu(X) dt + sigma(X) dW``; ``sigma`` returns ``(..., m, k)``.

    ``d_mu(x, v)`` and ``d_sigma(x, v)`` are optional directional derivatives.
    """

    state_dim: int
    noise_dim: int
    mu: Callable
    sigma: Callable
    d_mu: Callable | None = None
    d_sigma: Callable | None = None

    def drift(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.mu(x), dtype=float), x.shape)

    def diffusion(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.sigma(x), dtype=float), x.shape[:-1] + (self.state_dim, self.noise_dim))

    def dmu(self, x, v) -> np.ndarray:
        if self.d_mu is not None:
            return np.asarray(self.d_mu(np.asarray(x, dtype=float), v), dtype=float)
        return fd.directional(self.drift, x, v)

    def dsigma(self, x, v) -> np.ndarray:
        if self.d_sigma is not None:
            return np.asarray(self.d_sigma(np.asarray(x, dtype=float), v), dtype=float)
        return fd.directional(self.diffusion, x, v)

    def milstein_tensor(self, x) -> np.ndarray:
        """``T[..., i, a, b] = sum_j sigma^j_a d_j sigma^i_b``."""
        s = self.diffusion(x)
        cols = [self.dsigma(x, s[..., :, a]) for a in range(self.noise_dim)]
        return np.stack(cols, axis=-2)


@dataclass(frozen=True, eq=False)
class DiscretizedNoise:
    """Brownian increments on a grid, with optional iterated integrals.

    ``dW`` is ``(..., L, k)`` and ``dWW`` is ``(..., L, k, k)``.
    """

    times: np.ndarray
    dW: np.ndarray
    dWW: np.ndarray | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        dW = np.asarray(self.dW, dtype=float)
        if dW.shape[-2] != times.size - 1:
            raise UsageError("dW needs one row per grid step")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "dW", dW)
        if self.dWW is not None:
            dWW = np.asarray(self.dWW, dtype=float)
            if dWW.shape != dW.shape + (dW.shape[-1],):
                raise UsageError("dWW must have shape dW.shape + (k,)")
            object.__setattr__(self, "dWW", dWW)

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def k(self) -> int:
        return self.dW.shape[-1]

    @property
    def n_steps(self) -> int:
        return self.times.size - 1

    @classmethod
    def scalar(cls, times, dW) -> "DiscretizedNoise":
        """One-dimensional noise with the closed-form ``dWW = (dW^2 - dt) / 2``."""
        times = np.asarray(times, dtype=float)
        dW = np.asarray(dW, dtype=float)
        if dW.shape[-1] != 1:
            raise UsageError("closed-form iterated integrals need k = 1")
        dWW = (0.5 * (dW**2 - np.diff(times)[:, None]))[..., None]
        return cls(times, dW, dWW)

    def to_csv(self, path) -> None:
        """Rows ``(step, a, b, value)``; ``a = b = -1`` is dt, ``b = -1`` is dW^a."""
        if self.dW.ndim != 2:
            raise UsageError("CSV export needs a single path")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "alpha", "beta", "value"])
            for l in range(self.n_steps):
                w.writerow([l, -1, -1, repr(float(self.dt[l]))])
                for a in range(self.k):
                    w.writerow([l, a, -1, repr(float(self.dW[l, a]))])
                if self.dWW is not None:
                    for a in range(self.k):
                        for b in range(self.k):
                            w.writerow([l, a, b, repr(float(self.dWW[l, a, b]))])

    @classmethod
    def from_csv(cls, path) -> "DiscretizedNoise":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        data = [(int(s), int(a), int(b), float(v)) for s, a, b, v in rows]
        L = max(r[0] for r in data) + 1
        k = max(r[1] for r in data) + 1
        dt = np.zeros(L)
        dW = np.zeros((L, k))
        dWW = np.zeros((L, k, k))
        has_area = False
        for s, a, b, v in data:
            if a < 0:
                dt[s] = v
            elif b < 0:
                dW[s, a] = v
            else:
                dWW[s, a, b] = v
                has_area = True
        times = np.concatenate([[0.0], np.cumsum(dt)])
        return cls(times, dW, dWW if has_area else None)

    def to_json(self, path=None) -> str:
        text = json.dumps(
            {
                "times": self.times.tolist(),
                "dW": self.dW.tolist(),
                "dWW": None if self.dWW is None else self.dWW.tolist(),
            }
        )
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, source) -> "DiscretizedNoise":
        text = Path(source).read_text() if not str(source).lstrip().startswith("{") else source
        d = json.loads(text)
        return cls(np.array(d["times"]), np.array(d["dW"]), None if d["dWW"] is None else np.array(d["dWW"]))


# ---------------------------------------------------------------------------
# noise construction


def brownian_noise(k: int, times, seed: int, n_paths: int | None = None, substeps: int | None = None):
    """Brownian increments on ``times``.

    With ``substeps`` a fine path with that many sub-steps per coarse step is
    drawn and iterated integrals are computed from it; the return value is
    then ``(noise, fine_times, fine_W)``.
    """
    times = np.asarray(times, dtype=float)
    gen = _rng.generator(seed, 101)
    batch = () if n_paths is None else (int(n_paths),)
    if substeps is None:
        dW = gen.standard_normal(batch + (times.size - 1, k)) * np.sqrt(np.diff(times))[:, None]
        return DiscretizedNoise(times, dW)
    fine = np.concatenate(
        [np.linspace(times[i], times[i + 1], substeps + 1)[:-1] for i in range(times.size - 1)] + [times[-1:]]
    )
    fine[:: substeps] = times
    dw = gen.standard_normal(batch + (fine.size - 1, k)) * np.sqrt(np.diff(fine))[:, None]
    W = np.concatenate([np.zeros(batch + (1, k)), np.cumsum(dw, axis=-2)], axis=-2)
    return levy_area(fine, W, times), fine, W


def _coarse_index(fine_times, coarse_times) -> np.ndarray:
    idx = np.searchsorted(fine_times, coarse_times)
    idx = np.clip(idx, 0, fine_times.size - 1)
    scale = max(1.0, float(np.abs(fine_times).max()))
    if not np.allclose(fine_times[idx], coarse_times, rtol=0, atol=1e-12 * scale):
        raise UsageError("the fine grid does not refine the coarse grid")
    return idx


def levy_area(fine_times, fine_W, coarse_times) -> DiscretizedNoise:
    """Per-step ``dW`` and left-point sums ``dWW[a, b] = sum (W^b_s - W^b_{t'}) dW^a_s``."""
    fine_times = np.asarray(fine_times, dtype=float)
    coarse_times = np.asarray(coarse_times, dtype=float)
    W = np.asarray(fine_W, dtype=float)
    idx = _coarse_index(fine_times, coarse_times)
    dw = np.diff(W, axis=-2)
    owner = np.searchsorted(idx, np.arange(fine_times.size - 1), side="right") - 1
    start = np.take(W, idx[owner], axis=-2)
    offset = W[..., :-1, :] - start
    prod = dw[..., :, :, None] * offset[..., :, None, :]
    dWW = np.add.reduceat(prod, idx[:-1], axis=-3)
    dW = np.take(W, idx[1:], axis=-2) - np.take(W, idx[:-1], axis=-2)
    return DiscretizedNoise(coarse_times, dW, dWW)


def cumulative_iterated_integral(fine_times, fine_W, at_times=None) -> np.ndarray:
    """``WW_t[a, b] = sum_{s_j < t} W^b_{s_j} dW^a_j`` (left-point), at ``at_times`` or every fine time."""
    W = np.asarray(fine_W, dtype=float)
    dw = np.diff(W, axis=-2)
    prod = dw[..., :, :, None] * W[..., :-1, None, :]
    cum = np.concatenate([np.zeros(prod.shape[:-3] + (1,) + prod.shape[-2:]), np.cumsum(prod, axis=-3)], axis=-3)
    if at_times is None:
        return cum
    idx = _coarse_index(np.asarray(fine_times, dtype=float), np.asarray(at_times, dtype=float))
    return np.take(cum, idx, axis=-3)


# ---------------------------------------------------------------------------
# solvers


def _x0(sde, x0, batch):
    x0 = np.asarray(x0, dtype=float)
    if x0.shape[-1:] != (sde.state_dim,):
        raise UsageError(f"x0 must have trailing dimension {sde.state_dim}")
    return np.broadcast_to(x0, batch + (sde.state_dim,)).copy()


def _euler_step(sde: BrownianSde, x, dt, dw):
    return x + sde.drift(x) * dt + np.einsum("...ia,...a->...i", sde.diffusion(x), dw)


def _milstein_step(sde: BrownianSde, x, dt, dw, dww):
    corr = np.einsum("...iab,...ba->...i", sde.milstein_tensor(x), dww)
    return _euler_step(sde, x, dt, dw) + corr


def euler_solve(sde: BrownianSde, noise: DiscretizedNoise, x0) -> CadlagPath:
    """``X_l = X_{l-1} + mu dt + sigma dW``."""
    batch = noise.dW.shape[:-2]
    x = _x0(sde, x0, batch)
    out = np.empty(batch + (noise.times.size, sde.state_dim))
    out[..., 0, :] = x
    for l, dt in enumerate(noise.dt):
        x = _euler_step(sde, x, dt, noise.dW[..., l, :])
        out[..., l + 1, :] = x
    return CadlagPath(noise.times, out, PathStyle.DISCRETE_JUMP)


def milstein_solve(sde: BrownianSde, noise: DiscretizedNoise, x0) -> CadlagPath:
    """Euler step plus ``sum sigma^j_a d_j sigma^i_b dWW[b, a]``."""
    if noise.dWW is None:
        raise UsageError("the Milstein scheme needs iterated integrals")
    batch = noise.dW.shape[:-2]
    x = _x0(sde, x0, batch)
    out = np.empty(batch + (noise.times.size, sde.state_dim))
    out[..., 0, :] = x
    for l, dt in enumerate(noise.dt):
        x = _milstein_step(sde, x, dt, noise.dW[..., l, :], noise.dWW[..., l, :, :])
        out[..., l + 1, :] = x
    return CadlagPath(noise.times, out, PathStyle.DISCRETE_JUMP)


def euler_sde(sde: BrownianSde) -> GeometricalSde:
    """The Euler map ``F(x, (dt, dW))`` as a geometrical SDE over ``R^{1+k}``."""
    k = sde.noise_dim

    def F(x, z):
        return x + sde.drift(x) * z[..., :1] + np.einsum("...ia,...a->...i", sde.diffusion(x), z[..., 1:])

    def dz(x, z, w):
        w = np.asarray(w, dtype=float)
        return sde.drift(x) * w[..., :1] + np.einsum("...ia,...a->...i", sde.diffusion(x), w[..., 1:])

    def dzz(x, z, w):
        return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(w)[:-1] + (sde.state_dim,)))

    def dx(x, z, v):
        z = np.asarray(z, dtype=float)
        return v + sde.dmu(x, v) * z[..., :1] + np.einsum("...ia,...a->...i", sde.dsigma(x, v), z[..., 1:])

    return GeometricalSde(sde.state_dim, Additive(k + 1), F, dz, dzz, dx, extras={"scheme": "euler"})


def milstein_sde(sde: BrownianSde) -> GeometricalSde:
    """The Milstein map ``F(x, (dt, dW, dWW))`` as a geometrical SDE over Milstein(k)."""
    group = Milstein(sde.noise_dim)

    def lin(x, z):
        alpha, a, b = group.milstein_parts(z)
        return (
            sde.drift(x) * alpha[..., None]
            + np.einsum("...ia,...a->...i", sde.diffusion(x), a)
            + np.einsum("...iab,...ba->...i", sde.milstein_tensor(x), b)
        )

    def F(x, z):
        return x + lin(x, z)

    def dzz(x, z, w):
        return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(w)[:-1] + (sde.state_dim,)))

    return GeometricalSde(sde.state_dim, group, F, lambda x, z, w: lin(x, w), dzz, extras={"scheme": "milstein"})


def milstein_group_path(noise: DiscretizedNoise) -> CadlagPath:
    """The discretized ``(t, W, WW)`` path on Milstein(k), built from its per-step jumps."""
    if noise.dWW is None:
        raise UsageError("iterated integrals required")
    group = Milstein(noise.k)
    batch = noise.dW.shape[:-2]
    dt = np.broadcast_to(noise.dt, batch + noise.dt.shape)
    incs = group.milstein_join(dt, noise.dW, noise.dWW)
    return CadlagPath(noise.times, group.accumulate(incs), PathStyle.DISCRETE_JUMP, group)


# ---------------------------------------------------------------------------
# gauge rotations


def check_orthogonal(B, tol: float = ORTHO_TOL) -> np.ndarray:
    B = np.asarray(B, dtype=float)
    k = B.shape[-1]
    defect = np.abs(np.swapaxes(B, -1, -2) @ B - np.eye(k)).max(initial=0.0)
    if defect > tol:
        raise UsageError(f"rotation matrices are not orthogonal (defect {defect:.2e} > {tol:g})")
    return B


def gauge_rotate_euler(B_steps, noise: DiscretizedNoise, tol: float = ORTHO_TOL) -> DiscretizedNoise:
    """``dW'_l = B_l dW_l``; ``dWW`` is dropped."""
    B = check_orthogonal(B_steps, tol)
    return DiscretizedNoise(noise.times, np.einsum("...ab,...b->...a", B, noise.dW))


def gauge_rotate_milstein(B_steps, noise: DiscretizedNoise, tol: float = ORTHO_TOL) -> DiscretizedNoise:
    """``dW'_l = B_l dW_l`` and ``dWW'_l = B_l dWW_l B_l^T``."""
    if noise.dWW is None:
        raise UsageError("iterated integrals required")
    B = check_orthogonal(B_steps, tol)
    dW = np.einsum("...ab,...b->...a", B, noise.dW)
    dWW = B @ noise.dWW @ np.swapaxes(B, -1, -2)
    return DiscretizedNoise(noise.times, dW, dWW)


def rotate_along_solution(sde: BrownianSde, noise: DiscretizedNoise, x0, B_fn: Callable, scheme: str = "euler", tol: float = ORTHO_TOL):
    """Solve, then rotate each step's noise by ``B_fn`` at the pre-step state.

    Returns ``(solution, rotated_noise)``. The rotation is predictable because
    ``X_{l-1}`` only depends on increments before step ``l``.
    """
    solve = euler_solve if scheme == "euler" else milstein_solve
    X = solve(sde, noise, x0)
    B = np.asarray(B_fn(X.values[..., :-1, :]), dtype=float)
    rotate = gauge_rotate_euler if scheme == "euler" else gauge_rotate_milstein
    return X, rotate(B, noise, tol=tol)
