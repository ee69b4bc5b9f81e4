"""Central finite-difference Jacobians with a step-halving smoothness probe."""
from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np


def steps(x: np.ndarray, rel: float) -> np.ndarray:
    """Per-coordinate step ``rel * (1 + |x_k|)``."""
    return rel * (1.0 + np.abs(x))


def central_jacobian(f: Callable, x, h) -> np.ndarray:
    """Jacobian of ``f`` at ``x`` by central differences.

    ``f`` must accept arrays with extra leading axes.  ``h`` is a scalar or
    a per-coordinate step vector.  Returns an ``(m, n)`` matrix.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    h = np.broadcast_to(np.asarray(h, dtype=float), (n,))
    e = np.eye(n) * h
    # stencil rows: x + h_k e_k then x - h_k e_k
    stencil = np.concatenate([x + e, x - e], axis=0)
    vals = np.asarray(f(stencil), dtype=float).reshape(2 * n, -1)
    return ((vals[:n] - vals[n:]) / (2.0 * h[:, None])).T


def central_jacobian_batch(f: Callable, xs, h) -> np.ndarray:
    """Central-difference Jacobians at every row of ``xs``; shape ``(k, m, n)``."""
    xs = np.asarray(xs, dtype=float)
    k, n = xs.shape
    h = np.broadcast_to(np.asarray(h, dtype=float), (k, n))
    e = np.eye(n)[None, :, :] * h[:, :, None]
    plus = np.asarray(f(xs[:, None, :] + e), dtype=float)
    minus = np.asarray(f(xs[:, None, :] - e), dtype=float)
    if plus.ndim == 2:
        plus, minus = plus[..., None], minus[..., None]
    return np.swapaxes((plus - minus) / (2.0 * h[:, :, None]), 1, 2)


class RichardsonPair(NamedTuple):
    coarse: np.ndarray
    fine: np.ndarray
    discrepancy: np.ndarray


def richardson_discrepancy(coarse: np.ndarray, fine: np.ndarray) -> np.ndarray:
    """Relative max-norm gap between Jacobian estimates at steps h and h/2."""
    gap = np.max(np.abs(coarse - fine), axis=(-2, -1))
    scale = np.maximum(np.max(np.abs(fine), axis=(-2, -1)), 1.0)
    return gap / scale


def jacobian_pair(f: Callable, xs, rel: float) -> RichardsonPair:
    """Jacobians of ``f`` at rows of ``xs`` with steps h and h/2 and their gap."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    h = steps(xs, rel)
    coarse = central_jacobian_batch(f, xs, h)
    fine = central_jacobian_batch(f, xs, h / 2.0)
    return RichardsonPair(coarse, fine, richardson_discrepancy(coarse, fine))


def gradient(f: Callable, x, rel: float = 1e-5) -> np.ndarray:
    """Gradient of a scalar function by central differences."""
    x = np.asarray(x, dtype=float)
    return central_jacobian(lambda y: np.asarray(f(y))[..., None], x, steps(x, rel))[0]
