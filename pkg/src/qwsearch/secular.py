"""Roots of the secular equation ``sum_m w_m / (p_m - E) = rhs``.

With strictly increasing poles ``p_m`` and positive weights the left-hand
side increases monotonically between consecutive poles, runs from 0+ to
+inf below the lowest pole and stays negative above the highest.  For
``rhs > 0`` there is therefore exactly one root below ``p_0`` and one in
each gap ``(p_{m-1}, p_m)``: as many roots as poles.

Each root is solved in coordinates shifted to its nearer pole, so that
roots sitting within a few ulps of a pole keep full relative accuracy
(the same trick LAPACK's divide-and-conquer eigensolver uses).
"""
from __future__ import annotations

import numpy as np

_EPS = np.finfo(float).eps


class BracketError(RuntimeError):
    pass


def _eval(shifted, weights, x):
    diff = shifted - x[:, None]
    inv = weights / diff
    return inv.sum(axis=1), (inv / diff).sum(axis=1)


def secular_roots(poles, weights, rhs: float = 1.0, max_iter: int = 200, chunk: int = 256):
    """Return ``(roots, fprime)`` for every interlacing interval.

    ``fprime`` is the derivative of the left-hand side at each root.
    Iteration is Newton's method safeguarded by bisection inside the
    bracket, stopped at machine precision relative to the shifted root.
    """
    poles = np.asarray(poles, dtype=float)
    weights = np.asarray(weights, dtype=float)
    m = len(poles)
    if m == 0:
        return np.empty(0), np.empty(0)
    if np.any(np.diff(poles) <= 0):
        raise ValueError("poles must be strictly increasing")
    if np.any(weights <= 0):
        raise ValueError("weights must be positive")
    if rhs <= 0:
        raise ValueError("rhs must be positive")

    roots = np.empty(m)
    fprime = np.empty(m)
    for start in range(0, m, chunk):
        idx = np.arange(start, min(start + chunk, m))
        r, fp = _solve_block(poles, weights, rhs, idx, max_iter)
        roots[idx] = r
        fprime[idx] = fp
    return roots, fprime


def _solve_block(poles, weights, rhs, idx, max_iter):
    k = len(idx)
    right = poles[idx]
    left = np.where(idx > 0, poles[np.maximum(idx - 1, 0)], poles[0] - weights.sum() / rhs)
    mid = 0.5 * (left + right)

    # F(mid) >= rhs puts the root in the left half, next to the left pole
    fmid, _ = _eval(poles[None, :], weights, mid)
    near_left = (fmid >= rhs) & (idx > 0)
    origin = np.where(near_left, left, right)
    shifted = poles[None, :] - origin[:, None]
    lo = np.where(near_left, 0.0, mid - right)
    hi = np.where(near_left, mid - left, 0.0)
    # first root: no pole on the left, bracket [p0 - sum(w)/rhs, p0)
    first = idx == 0
    lo[first] = left[first] - right[first]
    hi[first] = 0.0

    x = 0.5 * (lo + hi)
    f = np.empty(k)
    fp = np.empty(k)
    active = np.ones(k, dtype=bool)
    for _ in range(max_iter):
        a = np.flatnonzero(active)
        if a.size == 0:
            break
        fa, fpa = _eval(shifted[a], weights, x[a])
        fa -= rhs
        f[a], fp[a] = fa, fpa
        pos = fa > 0
        hi[a] = np.where(pos, x[a], hi[a])
        lo[a] = np.where(pos, lo[a], x[a])
        step = fa / fpa
        cand = x[a] - step
        bad = ~((cand > lo[a]) & (cand < hi[a])) | ~np.isfinite(cand)
        cand = np.where(bad, 0.5 * (lo[a] + hi[a]), cand)
        width = hi[a] - lo[a]
        scale = np.maximum(np.abs(lo[a]), np.abs(hi[a]))
        done = (fa == 0) | (width <= 4 * _EPS * scale) | (np.abs(cand - x[a]) <= 2 * _EPS * np.abs(x[a]))
        x[a] = np.where(fa == 0, x[a], cand)
        active[a[done]] = False
    if active.any():
        raise BracketError(f"secular iteration did not converge for {int(active.sum())} roots")

    # derivative at the final iterate
    _, fp = _eval(shifted, weights, x)
    return origin + x, fp
