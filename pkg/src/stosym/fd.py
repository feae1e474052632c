"""Central finite differences along directions, broadcasting over batch axes."""

from __future__ import annotations

import numpy as np

FIRST_STEP = 1e-5
SECOND_STEP = 1e-4


def _unit(v):
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    safe = np.where(norm > 0, norm, 1.0)
    return v / safe, norm


def directional(f, x, v, h: float = FIRST_STEP):
    """``Df(x)[v]`` by a central difference along ``v / |v|``, rescaled by ``|v|``."""
    x = np.asarray(x, dtype=float)
    u, norm = _unit(v)
    x, u = np.broadcast_arrays(x, u)
    d = (np.asarray(f(x + h * u)) - np.asarray(f(x - h * u))) / (2.0 * h)
    return _rescale(d, norm, 1)


def directional2(f, x, v, h: float = SECOND_STEP):
    """``D^2 f(x)[v, v]`` by a three-point central difference."""
    x = np.asarray(x, dtype=float)
    u, norm = _unit(v)
    x, u = np.broadcast_arrays(x, u)
    d = (np.asarray(f(x + h * u)) - 2.0 * np.asarray(f(x)) + np.asarray(f(x - h * u))) / (h * h)
    return _rescale(d, norm, 2)


def _rescale(d, norm, power):
    # norm has a trailing axis of length 1; output may have extra trailing axes (matrix-valued f)
    scale = norm[..., 0] ** power
    return d * scale.reshape(scale.shape + (1,) * (d.ndim - scale.ndim))


def jacobian(f, x, h: float = FIRST_STEP):
    """Jacobian ``J[..., i, j] = d f_i / d x_j`` of a vector field."""
    x = np.asarray(x, dtype=float)
    m = x.shape[-1]
    cols = []
    for j in range(m):
        e = np.zeros(m)
        e[j] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2.0 * h))
    return np.stack(cols, axis=-1)
