"""Batched projected-gradient ascent on products of complex unit spheres."""

from __future__ import annotations

from typing import Callable

import numpy as np

Objective = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


def _blocks(x: np.ndarray, blocks: int) -> np.ndarray:
    r, n = x.shape
    return x.reshape(r, blocks, n // blocks)


def normalize_blocks(x: np.ndarray, blocks: int = 1) -> np.ndarray:
    xb = _blocks(x, blocks)
    return (xb / np.linalg.norm(xb, axis=2, keepdims=True)).reshape(x.shape)


def tangent(x: np.ndarray, g: np.ndarray, blocks: int = 1) -> np.ndarray:
    xb, gb = _blocks(x, blocks), _blocks(g, blocks)
    radial = np.real(np.sum(xb.conj() * gb, axis=2, keepdims=True))
    return (gb - radial * xb).reshape(x.shape)


def sphere_ascent(
    fun: Objective,
    x0: np.ndarray,
    blocks: int = 1,
    *,
    max_iter: int = 3000,
    window: int = 50,
    rtol: float = 1e-10,
    step0: float = 1.0,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Maximize ``fun`` independently from every row of ``x0``.

    ``fun`` maps a ``(R, n)`` batch to values ``(R,)`` and Euclidean
    gradients ``(R, n)``.  Each row is split into ``blocks`` equal pieces,
    each constrained to the unit sphere.  Steps double on success and halve
    on failure; a row stops once its value improved by less than ``rtol``
    (relative) over the last ``window`` steps.

    Returns the final points, their values and the iteration count.
    """
    x = normalize_blocks(np.array(x0, dtype=complex), blocks)
    f, g = fun(x)
    f = np.array(f, dtype=float)
    rows = x.shape[0]
    step = np.full(rows, float(step0))
    hist = np.full((window, rows), -np.inf)
    active = np.ones(rows, dtype=bool)
    it = 0
    for it in range(1, max_iter + 1):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        d = tangent(x[idx], g[idx], blocks)
        y = normalize_blocks(x[idx] + step[idx, None] * d, blocks)
        fy, gy = fun(y)
        better = fy > f[idx]
        acc, rej = idx[better], idx[~better]
        x[acc], f[acc], g[acc] = y[better], fy[better], gy[better]
        step[acc] = np.minimum(step[acc] * 2.0, 1e8)
        step[rej] *= 0.5
        hist[it % window] = f
        if it >= window:
            old = hist[(it + 1) % window]
            stalled = f - old <= rtol * np.maximum(np.abs(f), 1e-300)
            active &= ~stalled
        active &= step > 1e-18
    return x, f, it
