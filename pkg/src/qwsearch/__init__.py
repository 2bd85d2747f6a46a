"""Spatial search by continuous-time quantum walk on lattices and
hierarchical networks."""

from .netgen import (
    Family,
    LaplacianMatrix,
    Network,
    NetworkDescriptor,
    complete_graph,
    hypercubic_lattice,
    laplacian,
    load_network,
    mk_hierarchical,
    mk_site_count,
    save_network,
)
from .scaling import (
    ScalingFit,
    ScalingSeries,
    classify_regime,
    fit_exponent,
    overlap_profile,
    run_series,
)
from .search import (
    SearchConfig,
    SearchLevels,
    amplitude_direct,
    amplitude_spectral,
    find_t_opt,
    gamma_sweep,
    solve_levels,
    spectral_function,
    sub_grover_solve,
    two_level_predict,
)
from .spectra import (
    GroupedSpectrum,
    LaplacianSpectrum,
    eigendecompose,
    group_by_target,
    lattice_spectrum_analytic,
    network_spectrum,
    spectral_dimension_estimate,
    zeta_logdet,
    zeta_spectral,
)

__version__ = "0.1.0"
