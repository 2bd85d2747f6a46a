"""Search Hamiltonian ``H = gamma L - |w><w|``: levels, overlaps and dynamics.

Everything spectral goes through the resolvent diagonal

    F(E) = <w| (gamma L - E)^-1 |w> = sum_m W_m / (gamma Lambda_m - E),

whose roots ``F(E) = 1`` are the eigenvalues of ``H`` that carry weight on
the target.  Transition amplitudes are reported in the ``e^{+iHt}``
convention, ``<w|e^{iHt}|s>``; the Schrodinger amplitude
``<w|e^{-iHt}|s>`` is its complex conjugate since ``H``, ``|s>`` and
``|w>`` are real.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy import optimize

from .netgen import LaplacianMatrix, Network
from .secular import secular_roots
from .spectra import (
    GroupedSpectrum,
    LaplacianSpectrum,
    SizeGuardError,
    dense_limit,
    group_by_target,
    network_spectrum,
    zeta_spectral,
)


class SearchError(RuntimeError):
    pass


class PoleProximityError(SearchError):
    def __init__(self, m: int, pole: float, energy: float):
        super().__init__(f"E={energy!r} sits on weighted pole m={m} (gamma*Lambda={pole!r})")
        self.m = m


class NoMaximumError(SearchError):
    pass


class RegimeMismatchError(SearchError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    gamma: float
    target: int
    grouped: GroupedSpectrum

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not 0 <= self.target < self.grouped.n:
            raise ValueError(f"target {self.target} out of range")
        if self.grouped.target != self.target:
            raise ValueError("grouped spectrum was built for a different target")

    @property
    def n(self) -> int:
        return self.grouped.n

    def poles(self) -> tuple[np.ndarray, np.ndarray]:
        values, weights = self.grouped.weighted_poles()
        return self.gamma * values, weights


@dataclass(frozen=True)
class SearchLevels:
    """Roots of F(E)=1 with overlaps, plus the silent eigenvalues of H."""

    energies: np.ndarray
    fprime: np.ndarray
    s_overlap: np.ndarray
    w_overlap: np.ndarray
    silent_levels: np.ndarray
    n: int

    @property
    def E0(self) -> float:
        return float(self.energies[0])

    @property
    def E1(self) -> float:
        return float(self.energies[1])

    @property
    def gap(self) -> float:
        return self.E1 - self.E0

    def sum_rules(self) -> dict[str, float]:
        """Residuals of the three completeness identities."""
        return {
            "s_overlap": float(self.s_overlap.sum() - 1.0),
            "w_overlap": float(self.w_overlap.sum() - 1.0),
            "t0_amplitude": float(np.sum(1.0 / (self.energies * self.fprime)) + 1.0),
        }


def spectral_function(E: float, cfg: SearchConfig, rel_tol: float = 1e-12) -> tuple[float, float]:
    poles, weights = cfg.poles()
    diff = poles - E
    scale = max(abs(E), float(poles[-1]))
    close = np.flatnonzero(np.abs(diff) <= rel_tol * scale)
    if close.size:
        m = int(close[0])
        raise PoleProximityError(m, float(poles[m]), E)
    inv = weights / diff
    return float(inv.sum()), float((inv / diff).sum())


def solve_levels(cfg: SearchConfig) -> SearchLevels:
    poles, weights = cfg.poles()
    energies, fprime = secular_roots(poles, weights, rhs=1.0)
    n = cfg.n
    s_ov = 1.0 / (n * energies ** 2 * fprime)
    w_ov = 1.0 / fprime
    g = cfg.grouped
    silent_counts = np.where(g.weighted, g.multiplicities - 1, g.multiplicities)
    silent = np.repeat(cfg.gamma * g.values, silent_counts)
    if len(energies) < 2:
        raise SearchError("need at least two weighted poles for a search")
    return SearchLevels(energies, fprime, s_ov, w_ov, silent, n)


def amplitude_spectral(cfg: SearchConfig, levels: SearchLevels, t):
    """<w|e^{iHt}|s> summed over the roots of F(E)=1."""
    t_arr = np.asarray(t, dtype=float)
    coef = 1.0 / (levels.energies * levels.fprime)
    phase = np.exp(1j * np.multiply.outer(t_arr, levels.energies))
    amp = -(phase @ coef) / math.sqrt(levels.n)
    return complex(amp) if amp.ndim == 0 else amp


@dataclass(frozen=True)
class DirectDecomposition:
    """Dense eigendecomposition of the search Hamiltonian."""

    energies: np.ndarray
    w_components: np.ndarray
    s_components: np.ndarray

    def amplitude(self, t):
        t_arr = np.asarray(t, dtype=float)
        phase = np.exp(1j * np.multiply.outer(t_arr, self.energies))
        amp = phase @ (self.w_components * self.s_components)
        return complex(amp) if amp.ndim == 0 else amp


def hamiltonian(lap: LaplacianMatrix, gamma: float, target: int) -> np.ndarray:
    h = gamma * lap.toarray()
    h[target, target] -= 1.0
    return h


def direct_decomposition(lap: LaplacianMatrix, gamma: float, target: int,
                         limit: int | None = None) -> DirectDecomposition:
    limit = dense_limit() if limit is None else limit
    if lap.n > limit:
        raise SizeGuardError(f"N={lap.n} exceeds dense limit {limit}")
    energies, vecs = np.linalg.eigh(hamiltonian(lap, gamma, target))
    s_comp = vecs.sum(axis=0) / math.sqrt(lap.n)
    return DirectDecomposition(energies, vecs[target].copy(), s_comp)


def amplitude_direct(lap: LaplacianMatrix, cfg: SearchConfig, t, limit: int | None = None):
    """<w|e^{iHt}|s> by dense diagonalisation of H; independent of F(E)."""
    return direct_decomposition(lap, cfg.gamma, cfg.target, limit).amplitude(t)


def evolve_state(lap: LaplacianMatrix, gamma: float, target: int, t: float) -> np.ndarray:
    """Schrodinger evolution Psi(t) = e^{-iHt}|s> over the site basis."""
    n = lap.n
    s = np.full(n, 1.0 / math.sqrt(n), dtype=complex)
    return sla.expm(-1j * t * hamiltonian(lap, gamma, target)) @ s


def probability(cfg: SearchConfig, levels: SearchLevels, t):
    return np.abs(amplitude_spectral(cfg, levels, t)) ** 2


def find_t_opt(cfg: SearchConfig, levels: SearchLevels, t_max: float | None = None,
               floor: float = 1e-6, samples_per_period: int = 50) -> tuple[float, float]:
    """First local maximum of the success probability above ``floor``."""
    gap = levels.gap
    if t_max is None:
        t_max = 4 * math.pi / gap
    step = 1.0 / (gap * samples_per_period)
    ts = np.arange(0.0, t_max + step, step)
    p = probability(cfg, levels, ts)
    peaks = np.flatnonzero((p[1:-1] > p[:-2]) & (p[1:-1] >= p[2:]) & (p[1:-1] > floor)) + 1
    if peaks.size == 0:
        raise NoMaximumError(f"no probability maximum below t_max={t_max:.6g} (p range {p.min():.3g}..{p.max():.3g})")
    i = int(peaks[0])
    neg = lambda t: -float(probability(cfg, levels, t))
    t_best = optimize.golden(neg, brack=(ts[i - 1], ts[i], ts[i + 1]), tol=1e-10)
    return float(t_best), float(probability(cfg, levels, t_best))


def search_config(spec: LaplacianSpectrum, target: int, gamma: float) -> SearchConfig:
    return SearchConfig(gamma, target, group_by_target(spec, target))


@dataclass(frozen=True)
class SweepPoint:
    gamma: float
    s_overlap_ground: float
    s_overlap_excited: float
    gap: float


@dataclass(frozen=True)
class SweepResult:
    points: list[SweepPoint]
    gamma_predictor: float
    crossing: float | None
    diagnostic: str = ""


def sweep_grid(center: float, per_decade: int = 40, decades: float = 1.0) -> np.ndarray:
    """Log grid centred on ``center`` spanning ``10**decades`` each way."""
    k = np.arange(-round(per_decade * decades), round(per_decade * decades) + 1)
    return center * 10.0 ** (k / per_decade)


def gamma_sweep(net: Network, w: int, gammas=None, spec: LaplacianSpectrum | None = None) -> SweepResult:
    """Overlap exchange between ground and first excited level versus gamma.

    The empirical critical gamma is where the two ``|<s|psi>|^2`` curves
    cross, linearly interpolated between grid points.
    """
    if spec is None:
        spec = network_spectrum(net)
    grouped = group_by_target(spec, w)
    predictor = zeta_spectral(spec, 1).value
    if gammas is None:
        gammas = sweep_grid(predictor)
    points = []
    for gamma in np.asarray(gammas, dtype=float):
        lv = solve_levels(SearchConfig(float(gamma), w, grouped))
        points.append(SweepPoint(float(gamma), float(lv.s_overlap[0]), float(lv.s_overlap[1]), lv.gap))
    diff = np.array([p.s_overlap_ground - p.s_overlap_excited for p in points])
    crossing = None
    diagnostic = ""
    idx = np.flatnonzero(np.sign(diff[:-1]) != np.sign(diff[1:]))
    if idx.size:
        i = int(idx[0])
        g0, g1 = points[i].gamma, points[i + 1].gamma
        crossing = g0 - diff[i] * (g1 - g0) / (diff[i + 1] - diff[i])
    else:
        diagnostic = (f"no overlap crossing in [{points[0].gamma:.6g}, {points[-1].gamma:.6g}]; "
                      f"ground-excited difference runs {diff[0]:.6g} -> {diff[-1]:.6g}")
    return SweepResult(points, predictor, crossing, diagnostic)


@dataclass(frozen=True)
class TwoLevelSolution:
    E0: float
    E1: float
    splitting: float
    period: float
    amplitude: float
    t_opt: float
    p_opt: float
    regime: str
    regime_ok: bool = True

    @property
    def runtime(self) -> float:
        return self.t_opt / self.p_opt

    def probability(self, t):
        return self.amplitude * np.sin(self.splitting * np.asarray(t)) ** 2


def two_level_predict(I1: float, I2: float, N: int, ds: float | None = None) -> TwoLevelSolution:
    """Leading-order levels and Rabi dynamics at gamma = I_1.

    With F(E) ~ -1/(NE) + 1 + E I_2/I_1^2, the two levels are
    ``E = +-I_1/sqrt(N I_2)`` and ``1/(E F'(E)) = +-I_1 sqrt(N) / (2 sqrt(I_2))``,
    so the success probability is ``(I_1^2/I_2) sin^2(I_1 t / sqrt(N I_2))``.
    """
    half = I1 / math.sqrt(N * I2)
    amp = min(1.0, I1 * I1 / I2)
    t_opt = 0.5 * math.pi / half
    regime_ok = ds is None or ds > 4
    if not regime_ok:
        warnings.warn(f"two-level prediction used at d_s={ds} <= 4", stacklevel=2)
    return TwoLevelSolution(-half, half, half, math.pi / half, amp, t_opt, amp, "Grover", regime_ok)


@dataclass(frozen=True)
class SubGroverSolution:
    e0: float
    e1: float
    Lambda: float
    lambda_exponent: float | None
    p_bound: float
    runtime_bound: float
    runtime_exponent: float
    ds: float


def sub_grover_solve(cfg: SearchConfig, levels: SearchLevels, ds: float, lambda_1: float,
                     lambda_series: list[tuple[int, float]] | None = None) -> SubGroverSolution:
    """Dimensionless low levels ``e = E / (gamma lambda_1)`` for 2 < d_s < 4.

    ``Lambda`` in ``lambda_1 ~ Lambda N^(-2/d_s)`` is fitted from
    ``lambda_series`` (pairs ``(N, lambda_1)``) when at least two sizes are
    given, otherwise read off this single size.
    """
    if not 2 < ds < 4:
        raise RegimeMismatchError(f"sub-Grover solution needs 2 < d_s < 4, got {ds}")
    n = levels.n
    scale = cfg.gamma * lambda_1
    e0, e1 = levels.E0 / scale, levels.E1 / scale
    exponent = None
    if lambda_series and len(lambda_series) >= 2:
        ns, lams = np.log(np.array(lambda_series, dtype=float)).T
        exponent, intercept = np.polyfit(ns, lams, 1)
        Lambda = math.exp(intercept)
        exponent = float(exponent)
    else:
        Lambda = lambda_1 * n ** (2.0 / ds)
    return SubGroverSolution(float(e0), float(e1), float(Lambda), exponent,
                             n ** (1.0 - 4.0 / ds), n ** (2.0 / ds), 2.0 / ds, ds)
