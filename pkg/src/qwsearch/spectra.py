"""Laplacian spectra, target-site weight grouping and spectral zeta values.

The zeta values ``I_j = (1/N) sum_{i>=1} lambda_i^{-j}`` are available by
two independent routes: a direct sum over the eigenvalues, and finite
differences of the regularised log-determinant
``ln[(1/eps) det(L + eps)]`` which never touches the spectrum.
"""
from __future__ import annotations

import hashlib
import itertools
import math
import os
import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .netgen import Family, LaplacianMatrix, Network, laplacian

DEFAULT_DENSE_LIMIT = 6000
GROUP_TOL = 1e-8
WEIGHT_FLOOR = 1e-14


class SpectrumError(RuntimeError):
    pass


class SizeGuardError(SpectrumError):
    pass


class ExtrapolationError(SpectrumError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


def dense_limit() -> int:
    return int(os.environ.get("CTQW_DENSE_LIMIT", DEFAULT_DENSE_LIMIT))


@dataclass(frozen=True)
class LaplacianSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None
    analytic: bool = False

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def lambda_1(self) -> float:
        """Smallest nonzero eigenvalue."""
        return float(self.eigenvalues[1])

    def weights_at(self, w: int) -> np.ndarray:
        """Per-mode overlaps ``|<w|phi_i>|^2``."""
        if self.eigenvectors is not None:
            return self.eigenvectors[w] ** 2
        if self.analytic:
            return np.full(self.n, 1.0 / self.n)
        raise SpectrumError("spectrum has neither eigenvectors nor uniform overlaps")


@dataclass(frozen=True)
class GroupedSpectrum:
    """Distinct eigenvalues with aggregated overlap weight at one target.

    ``values[0]`` is exactly zero.  ``weights[m]`` sums ``|<w|phi_i>|^2``
    over the modes in group ``m``; groups whose weight is below
    ``weight_floor`` act as silent poles.
    """

    n: int
    target: int
    values: np.ndarray
    weights: np.ndarray
    multiplicities: np.ndarray
    weight_floor: float = WEIGHT_FLOOR

    @property
    def weighted(self) -> np.ndarray:
        return self.weights > self.weight_floor

    def weighted_poles(self) -> tuple[np.ndarray, np.ndarray]:
        mask = self.weighted
        return self.values[mask], self.weights[mask]


@dataclass(frozen=True)
class ZetaValues:
    n: int
    j: int
    value: float
    route: str
    residual: float = 0.0

    def as_dict(self) -> dict:
        return {"N": self.n, "j": self.j, "route": self.route, "value": self.value, "residual": self.residual}


def eigendecompose(lap: LaplacianMatrix, limit: int | None = None) -> LaplacianSpectrum:
    limit = dense_limit() if limit is None else limit
    if lap.n > limit:
        raise SizeGuardError(f"N={lap.n} exceeds dense limit {limit}; set CTQW_DENSE_LIMIT to override")
    try:
        vals, vecs = np.linalg.eigh(lap.toarray())
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"eigendecomposition failed to converge: {exc}") from exc
    vals.setflags(write=False)
    vecs.setflags(write=False)
    return LaplacianSpectrum(vals, vecs)


def lattice_spectrum_analytic(sides, periodic: bool = True) -> LaplacianSpectrum:
    """Fourier spectrum of a periodic hypercubic lattice.

    Every mode ``k`` has ``lambda_k = sum_j (2 - 2 cos(2 pi k_j / L_j))``
    and overlap exactly ``1/N`` with every site.
    """
    sides = [int(s) for s in sides]
    if not periodic:
        raise SpectrumError("analytic lattice spectrum requires periodic boundaries")
    if not sides or any(s < 3 for s in sides):
        raise SpectrumError(f"periodic sides must be >= 3, got {sides}")
    vals = np.zeros(1)
    for side in sides:
        axis = 2.0 - 2.0 * np.cos(2.0 * np.pi * np.arange(side) / side)
        axis[0] = 0.0
        vals = np.add.outer(vals, axis).ravel()
    vals = np.sort(vals)
    vals.setflags(write=False)
    return LaplacianSpectrum(vals, None, analytic=True)


def complete_spectrum_analytic(n: int) -> LaplacianSpectrum:
    """K_n: eigenvalue 0 once and n with multiplicity n-1.

    Per-mode weights are not uniform here, but the aggregated weight of the
    degenerate level is, which is all the grouped machinery uses.
    """
    if n < 2:
        raise SpectrumError(f"complete graph needs n >= 2, got {n}")
    vals = np.full(n, float(n))
    vals[0] = 0.0
    vals.setflags(write=False)
    return LaplacianSpectrum(vals, None, analytic=True)


def network_spectrum(net: Network, *, need_vectors: bool = False, limit: int | None = None) -> LaplacianSpectrum:
    """Analytic spectrum when the family allows it, dense eigensolve otherwise."""
    d = net.descriptor
    if not need_vectors and d is not None:
        if d.family is Family.COMPLETE:
            return complete_spectrum_analytic(net.n_sites)
        if d.family is Family.HYPERCUBIC and d.periodic:
            return lattice_spectrum_analytic(d.dims)
    limit = dense_limit() if limit is None else limit
    # guard before the cache so a lowered limit is honoured for cached networks
    if net.n_sites > limit:
        raise SizeGuardError(f"N={net.n_sites} exceeds dense limit {limit}; set CTQW_DENSE_LIMIT to override")
    key = (net.descriptor, hashlib.sha1(net.edges.tobytes()).hexdigest())
    with _cache_lock:
        hit = _dense_cache.get(key)
        if hit is not None:
            _dense_cache.move_to_end(key)
            return hit
    spec = eigendecompose(laplacian(net), limit)
    with _cache_lock:
        _dense_cache[key] = spec
        while len(_dense_cache) > _CACHE_SIZE:
            _dense_cache.popitem(last=False)
    return spec


_CACHE_SIZE = 6
_dense_cache: OrderedDict = OrderedDict()
_cache_lock = threading.Lock()


def group_by_target(spec: LaplacianSpectrum, w: int, tol: float = GROUP_TOL,
                    weight_floor: float = WEIGHT_FLOOR) -> GroupedSpectrum:
    if not 0 <= w < spec.n:
        raise IndexError(f"target {w} out of range for N={spec.n}")
    vals = np.asarray(spec.eigenvalues, dtype=float)
    wts = spec.weights_at(w)
    cut = tol * abs(vals[-1])
    # anchor each cluster to its first member so clusters cannot chain
    starts = [0]
    anchor = vals[0]
    for i in range(1, len(vals)):
        if vals[i] - anchor >= cut:
            starts.append(i)
            anchor = vals[i]
    starts = np.array(starts)
    mult = np.diff(np.r_[starts, len(vals)])
    values = np.add.reduceat(vals, starts) / mult
    weights = np.add.reduceat(wts, starts)
    if mult[0] != 1:
        raise SpectrumError(f"zero eigenvalue has multiplicity {mult[0]}; graph disconnected or tol too coarse")
    values[0] = 0.0
    if spec.analytic:
        weights = mult / spec.n
    return GroupedSpectrum(spec.n, w, values, weights, mult, weight_floor)


def zeta_spectral(spec: LaplacianSpectrum, j: int) -> ZetaValues:
    if j < 1:
        raise ValueError(f"zeta order must be >= 1, got {j}")
    nz = np.asarray(spec.eigenvalues[1:], dtype=float)
    return ZetaValues(spec.n, j, float(np.sum(nz ** (-j)) / spec.n), "SpectralSum")


def _reg_logdet(dense: np.ndarray, eps: float, shift: float) -> float:
    """ln[(1/eps) det(L + eps)], with the kernel mode lifted by ``shift``.

    Adding ``shift * J/N`` moves the zero mode to ``shift`` without touching
    the other eigenvalues, so the factorisation stays well conditioned.
    """
    n = dense.shape[0]
    m = dense + eps * np.eye(n) + (shift / n)
    chol = sla.cholesky(m, lower=True, check_finite=False)
    return 2.0 * float(np.sum(np.log(np.diag(chol)))) - math.log(eps + shift)


def zeta_logdet(lap: LaplacianMatrix, j: int, *, lambda_min: float | None = None,
                base: float = 0.25, levels: int = 5, rtol: float = 1e-6) -> ZetaValues:
    """I_j from derivatives of the regularised log-determinant.

    Central differences at ``eps = 0`` with steps ``base * lambda_min / 2^k``
    (k = 0..levels-1) are combined in a Richardson table.  ``lambda_min``
    only sets the step scale.
    """
    if j not in (1, 2):
        raise ValueError(f"log-det route supports j in {{1, 2}}, got {j}")
    if not 0.0 < base < 1.0:
        # eps = -h must stay above -lambda_min for L + eps to be definite
        raise ValueError(f"step base must lie in (0, 1), got {base}")
    dense = lap.toarray()
    n = dense.shape[0]
    if lambda_min is None:
        lambda_min = float(sla.eigh(dense, eigvals_only=True, subset_by_index=[1, 1])[0])
    shift = 2.0 * float(np.max(np.diag(dense))) + 1.0
    g0 = _reg_logdet(dense, 0.0, shift)
    table = []
    for k in range(levels):
        h = base * lambda_min / 2.0 ** k
        gp = _reg_logdet(dense, h, shift)
        gm = _reg_logdet(dense, -h, shift)
        table.append((gp - gm) / (2 * h) if j == 1 else (gp - 2 * g0 + gm) / h ** 2)
    rows = [np.array(table)]
    for k in range(1, levels):
        factor = 4.0 ** k
        prev = rows[-1]
        rows.append((factor * prev[1:] - prev[:-1]) / (factor - 1.0))
    best = rows[-1][-1]
    residual = abs(best - rows[-2][-1]) / abs(best)
    if not np.isfinite(best) or residual > rtol:
        raise ExtrapolationError("Richardson extrapolation did not converge", residual)
    sign = 1.0 if j == 1 else -1.0
    return ZetaValues(n, j, float(sign * best / n), "LogDet", float(residual))


@dataclass(frozen=True)
class DimensionEstimate:
    d_s: float
    stderr: float
    n_distinct: int


def spectral_dimension_estimate(spec: LaplacianSpectrum, fraction: float = 0.1,
                                tol: float = GROUP_TOL, min_distinct: int = 8) -> DimensionEstimate:
    """Fit the low-lying counting function N(lambda) ~ lambda^(d_s/2).

    Each eigenvalue in the lowest ``fraction`` of the nonzero spectrum is a
    sample of the counting function at that eigenvalue (ties counted in
    full), so the log-log regression weights each distinct level by its
    multiplicity.
    """
    if spec.n < 100:
        raise SpectrumError(f"N={spec.n} too small for a counting-function fit")
    nz = np.sort(np.asarray(spec.eigenvalues, dtype=float))[1:]
    tail = nz[: max(int(fraction * len(nz)), 1)]
    cut = tol * abs(nz[-1])
    starts = [0]
    for i in range(1, len(tail)):
        if tail[i] - tail[starts[-1]] >= cut:
            starts.append(i)
    starts = np.array(starts)
    mult = np.diff(np.r_[starts, len(tail)])
    if len(starts) < min_distinct:
        raise SpectrumError(f"only {len(starts)} distinct eigenvalues in the fit window (need {min_distinct})")
    x = np.log(tail[starts])
    y = np.log(np.cumsum(mult))
    # weights normalised to sum to the number of distinct levels
    wt = mult * (len(x) / mult.sum())
    xm = np.average(x, weights=wt)
    ym = np.average(y, weights=wt)
    sxx = np.sum(wt * (x - xm) ** 2)
    slope = np.sum(wt * (x - xm) * (y - ym)) / sxx
    resid = y - ym - slope * (x - xm)
    sigma2 = np.sum(wt * resid ** 2) / (len(x) - 2)
    stderr = math.sqrt(sigma2 / sxx)
    return DimensionEstimate(float(2 * slope), float(2 * stderr), len(starts))


def spectrum_rows(spec: LaplacianSpectrum, w: int | None = None):
    """Rows ``(index, eigenvalue, weight_at_w)`` for CSV export."""
    wts = spec.weights_at(w) if w is not None else itertools.repeat(None)
    for i, (lam, wt) in enumerate(zip(spec.eigenvalues, wts)):
        yield i, float(lam), (None if wt is None else float(wt))
