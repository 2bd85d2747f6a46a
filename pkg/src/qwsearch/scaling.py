"""Size-series experiments, power-law fits, regime classification and the
hierarchy-level overlap profiles."""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .netgen import Family, Network, complete_graph, hypercubic_lattice, mk_hierarchical, mk_site_count
from .search import SearchConfig, find_t_opt, gamma_sweep, solve_levels
from .spectra import (
    LaplacianSpectrum,
    SpectrumError,
    group_by_target,
    network_spectrum,
    spectral_dimension_estimate,
    zeta_spectral,
)

PROTOCOLS = ("predictor", "sweep")


class InsufficientDataError(ValueError):
    pass


@dataclass
class ScalingRecord:
    N: int
    size_param: int
    ds_nominal: float
    ds_estimate: float
    I1: float
    I2: float
    gamma: float
    E0: float
    E1: float
    gap: float
    s_overlap_ground: float
    s_overlap_excited: float
    lambda_1: float
    t_opt: float
    p_opt: float
    runtime: float
    max_sum_rule_residual: float
    config_hash: str
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


@dataclass
class ScalingSeries:
    family: str
    params: dict
    protocol: str
    records: list[ScalingRecord] = field(default_factory=list)

    def ok_records(self) -> list[ScalingRecord]:
        return [r for r in self.records if r.ok]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.ok_records()], dtype=float)


@dataclass(frozen=True)
class ScalingFit:
    quantity: str
    alpha: float
    stderr: float
    amplitude: float
    n_points: int

    def as_dict(self) -> dict:
        return {"quantity": self.quantity, "alpha": self.alpha, "stderr": self.stderr,
                "amplitude": self.amplitude, "n_points": self.n_points}


@dataclass(frozen=True)
class RegimeReport:
    ds: float
    regime: str
    exponent: float
    log_power: float
    note: str

    def complexity(self) -> str:
        if self.log_power:
            return f"N^{self.exponent:g} ln^{self.log_power:g} N"
        return f"N^{self.exponent:.6g}"


# ---------------------------------------------------------------------------

def build_network(family: str, size: int, *, b: int = 3, dim: int = 5) -> Network:
    """Network for one point of a size series.

    ``size`` is ``n`` for ``complete``, the side length for ``lattice``
    (a ``dim``-dimensional periodic torus) and the generation ``g`` for ``mk``.
    """
    if family == "complete":
        return complete_graph(size)
    if family == "lattice":
        return hypercubic_lattice([size] * dim, periodic=True)
    if family == "mk":
        return mk_hierarchical(b, size)
    raise ValueError(f"unknown series family {family!r}")


def _config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def run_record(family: str, size: int, *, b: int = 3, dim: int = 5, protocol: str = "predictor",
               target: int | None = None) -> ScalingRecord:
    net = build_network(family, size, b=b, dim=dim)
    w = net.representative_site() if target is None else target
    cfg_dict = {"family": family, "size": size, "b": b, "dim": dim, "protocol": protocol, "target": w}
    nan = math.nan
    rec = ScalingRecord(net.n_sites, size, net.descriptor.d_s_nominal, nan, nan, nan, nan, nan, nan, nan,
                        nan, nan, nan, nan, nan, nan, nan, _config_hash(cfg_dict))
    if net.descriptor.family is Family.MK:
        assert net.n_sites == mk_site_count(b, size)
    try:
        spec = network_spectrum(net)
        rec.I1 = zeta_spectral(spec, 1).value
        rec.I2 = zeta_spectral(spec, 2).value
        rec.lambda_1 = spec.lambda_1
        try:
            rec.ds_estimate = spectral_dimension_estimate(spec).d_s
        except SpectrumError:
            pass
        if protocol == "predictor":
            rec.gamma = rec.I1
        elif protocol == "sweep":
            sw = gamma_sweep(net, w, spec=spec)
            if sw.crossing is None:
                raise RuntimeError(sw.diagnostic)
            rec.gamma = sw.crossing
        else:
            raise ValueError(f"unknown gamma protocol {protocol!r}")
        cfg = SearchConfig(rec.gamma, w, group_by_target(spec, w))
        levels = solve_levels(cfg)
        rec.E0, rec.E1, rec.gap = levels.E0, levels.E1, levels.gap
        rec.s_overlap_ground = float(levels.s_overlap[0])
        rec.s_overlap_excited = float(levels.s_overlap[1])
        rec.max_sum_rule_residual = max(abs(v) for v in levels.sum_rules().values())
        rec.t_opt, rec.p_opt = find_t_opt(cfg, levels)
        rec.runtime = rec.t_opt / rec.p_opt
    except Exception as exc:  # per-size failures are recorded, the series continues
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def run_series(family: str, sizes, *, b: int = 3, dim: int = 5, protocol: str = "predictor",
               threads: int = 1) -> ScalingSeries:
    if protocol not in PROTOCOLS:
        raise ValueError(f"protocol must be one of {PROTOCOLS}")
    sizes = sorted(set(int(s) for s in sizes))
    job = lambda s: run_record(family, s, b=b, dim=dim, protocol=protocol)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(job, sizes))
    else:
        records = [job(s) for s in sizes]
    records.sort(key=lambda r: r.N)
    params = {"b": b} if family == "mk" else {"dim": dim} if family == "lattice" else {}
    return ScalingSeries(family, params, protocol, records)


QUANTITIES = {
    "gap": "gap",
    "t_opt": "t_opt",
    "p_opt": "p_opt",
    "runtime": "runtime",
    "I1": "I1",
    "I2": "I2",
    "lambda_1": "lambda_1",
}


def fit_power_law(ns, ys, quantity: str = "y") -> ScalingFit:
    ns = np.asarray(ns, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(ns) < 3:
        raise InsufficientDataError(f"power-law fit needs >= 3 sizes, got {len(ns)}")
    res = stats.linregress(np.log(ns), np.log(ys))
    return ScalingFit(quantity, float(res.slope), float(res.stderr), float(math.exp(res.intercept)), len(ns))


def fit_exponent(series: ScalingSeries, quantity: str) -> ScalingFit:
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}; choose from {sorted(QUANTITIES)}")
    return fit_power_law(series.column("N"), series.column(QUANTITIES[quantity]), quantity)


def classify_regime(ds: float, tol: float = 1e-9) -> RegimeReport:
    if not ds > 0:
        raise ValueError(f"spectral dimension must be positive, got {ds}")
    if abs(ds - 4.0) <= tol:
        return RegimeReport(ds, "Marginal", 0.5, 1.5, "logarithmic correction to sqrt(N)")
    if ds > 4.0:
        return RegimeReport(ds, "Grover", 0.5, 0.0, "optimal sqrt(N) search")
    if ds > 2.0:
        return RegimeReport(ds, "SubGrover", 2.0 / ds, 0.0, "runtime bounded below by N^(2/d_s)")
    return RegimeReport(ds, "Low", 1.0, 0.0, "no speedup guarantee")


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OverlapProfile:
    level: int
    n_sites: int
    eigenvalues: np.ndarray
    mean_rescaled: np.ndarray
    completeness: np.ndarray

    def rows(self):
        for i, (lam, val) in enumerate(zip(self.eigenvalues, self.mean_rescaled)):
            yield i, float(lam), float(val), self.level


def overlap_profile(net: Network, spec: LaplacianSpectrum, level: int) -> OverlapProfile:
    """Average of ``N |<w|phi_i>|^2`` over all sites ``w`` at ``level``."""
    if spec.eigenvectors is None:
        raise SpectrumError("overlap profile needs eigenvectors")
    if net.site_level is None:
        raise ValueError("overlap profile needs a hierarchical network")
    sites = net.level_sites(level)
    if sites.size == 0:
        raise ValueError(f"level {level} out of range 0..{int(net.site_level.max())}")
    sq = spec.eigenvectors[sites] ** 2
    return OverlapProfile(level, int(sites.size), np.asarray(spec.eigenvalues),
                          net.n_sites * sq.mean(axis=0), sq.sum(axis=1))


def record_fields() -> list[str]:
    return [f for f in ScalingRecord.__dataclass_fields__]


def record_row(rec: ScalingRecord) -> list:
    return list(asdict(rec).values())
