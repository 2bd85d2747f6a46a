import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from qwsearch import netgen
from qwsearch.search import (
    NoMaximumError,
    PoleProximityError,
    RegimeMismatchError,
    SearchConfig,
    amplitude_direct,
    amplitude_spectral,
    direct_decomposition,
    evolve_state,
    find_t_opt,
    gamma_sweep,
    probability,
    search_config,
    solve_levels,
    spectral_function,
    sub_grover_solve,
    sweep_grid,
    two_level_predict,
)
from qwsearch.spectra import (
    lattice_spectrum_analytic,
    network_spectrum,
    zeta_spectral,
)

from conftest import edge2, random_connected


def cfg_for(net, gamma, w=0, vectors=True):
    return search_config(network_spectrum(net, need_vectors=vectors), w, gamma)


# ---------------------------------------------------------------- oracles

class TestTwoSite:
    """H = [[gamma - 1, -gamma], [-gamma, gamma]] for the single edge, target 0."""

    def test_spectral_function(self):
        F, Fp = spectral_function(-1.0, cfg_for(edge2(), 1.0))
        assert F == pytest.approx(2 / 3, rel=1e-15)
        assert Fp == pytest.approx(0.5 + 0.5 / 9, rel=1e-15)

    def test_levels_exact(self):
        E = sympy.symbols("E")
        gamma = sympy.Integer(1)
        H = sympy.Matrix([[gamma - 1, -gamma], [-gamma, gamma]])
        exact = sorted(float(r) for r in sympy.solve(H.charpoly(E).as_expr(), E))
        assert np.allclose(exact, [(1 - math.sqrt(5)) / 2, (1 + math.sqrt(5)) / 2])
        lv = solve_levels(cfg_for(edge2(), 1.0))
        assert np.allclose(lv.energies, exact, rtol=1e-14)
        vecs = [v[2][0] for v in sorted(H.eigenvects(), key=lambda v: float(v[0]))]
        s_exact = [float((v[0] + v[1]) ** 2 / (2 * v.dot(v))) for v in vecs]
        w_exact = [float(v[0] ** 2 / v.dot(v)) for v in vecs]
        assert np.allclose(lv.s_overlap, s_exact, rtol=1e-13)
        assert np.allclose(lv.w_overlap, w_exact, rtol=1e-13)
        assert lv.silent_levels.size == 0

    @pytest.mark.parametrize("t", np.linspace(0, 20, 13))
    def test_amplitude_routes(self, t):
        cfg = cfg_for(edge2(), 1.0)
        lv = solve_levels(cfg)
        a = amplitude_spectral(cfg, lv, t)
        b = amplitude_direct(netgen.laplacian(edge2()), cfg, t)
        assert abs(a - b) < 1e-10

    def test_sweep_monotone(self):
        gammas = np.geomspace(0.01, 100, 60)
        sw = gamma_sweep(edge2(), 0, gammas=gammas)
        ground = np.array([p.s_overlap_ground for p in sw.points])
        excited = np.array([p.s_overlap_excited for p in sw.points])
        assert np.all(np.diff(ground) > 0) and np.all(np.diff(excited) < 0)
        # 2x2 oracle: eigenvectors of [[g-1, -g], [-g, g]]
        for p in sw.points[::10]:
            g = p.gamma
            _, vecs = np.linalg.eigh([[g - 1, -g], [-g, g]])
            s = (vecs.sum(axis=0) / math.sqrt(2)) ** 2
            assert np.allclose([p.s_overlap_ground, p.s_overlap_excited], s, atol=1e-12)


class TestSpectralFunction:
    def test_k4_root(self):
        F, _ = spectral_function(-0.5, cfg_for(netgen.complete_graph(4), 0.25))
        assert F == pytest.approx(1.0, rel=1e-14)

    def test_far_left_limit(self):
        cfg = cfg_for(netgen.hypercubic_lattice([5, 5]), 0.3)
        vals = [spectral_function(-x, cfg)[0] for x in (1e3, 1e6, 1e9)]
        assert all(v > 0 for v in vals) and vals[0] > vals[1] > vals[2]
        assert vals[-1] < 1e-8

    def test_pole_proximity(self):
        cfg = cfg_for(netgen.complete_graph(4), 0.25)
        with pytest.raises(PoleProximityError) as err:
            spectral_function(1.0, cfg)
        assert err.value.m == 1

    def test_derivative_positive(self):
        cfg = cfg_for(random_connected(20, 4), 0.7, w=3)
        for E in (-3.0, 0.01, 0.5, 2.3):
            assert spectral_function(E, cfg)[1] > 0

    def test_config_validation(self):
        spec = network_spectrum(edge2(), need_vectors=True)
        with pytest.raises(ValueError):
            search_config(spec, 0, 0.0)
        with pytest.raises(ValueError):
            SearchConfig(1.0, 1, search_config(spec, 0, 1.0).grouped)


class TestCompleteGraph:
    def test_k4_levels(self):
        lv = solve_levels(cfg_for(netgen.complete_graph(4), 0.25, vectors=False))
        assert np.allclose(lv.energies, [-0.5, 0.5], atol=1e-14)
        assert lv.gap == pytest.approx(1.0, rel=1e-14)
        assert np.allclose(lv.silent_levels, [1.0, 1.0])

    def test_k4_dynamics(self):
        net = netgen.complete_graph(4)
        cfg = cfg_for(net, 0.25)
        assert abs(amplitude_direct(netgen.laplacian(net), cfg, math.pi)) ** 2 >= 0.99
        t, p = find_t_opt(cfg, solve_levels(cfg))
        assert t == pytest.approx(math.pi, rel=1e-6) and p == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("n", [16, 64, 256, 1024])
    def test_gap_and_time(self, n):
        cfg = cfg_for(netgen.complete_graph(n), 1 / n, vectors=False)
        lv = solve_levels(cfg)
        assert lv.gap == pytest.approx(2 / math.sqrt(n), rel=1e-12)
        t, p = find_t_opt(cfg, lv)
        assert t == pytest.approx(math.pi / 2 * math.sqrt(n), rel=1e-6)
        assert p >= 0.999

    def test_k1024_amplitude_peak(self):
        cfg = cfg_for(netgen.complete_graph(1024), 1 / 1024, vectors=False)
        amp = amplitude_spectral(cfg, solve_levels(cfg), math.pi / 2 * 32)
        assert abs(amp) >= 0.999


# ---------------------------------------------------------------- invariants

def check_sum_rules(lv):
    for key, val in lv.sum_rules().items():
        assert abs(val) < 1e-9, key


def check_interlacing(cfg, lv):
    poles, _ = cfg.poles()
    assert len(lv.energies) == len(poles)
    assert lv.energies[0] < poles[0]
    assert np.all(lv.energies[1:] > poles[:-1]) and np.all(lv.energies[1:] < poles[1:])
    assert lv.E0 < 0 < lv.E1


class TestRandomGraphs:
    def test_count(self, random_graphs):
        assert len(random_graphs) >= 20
        assert all(g.n_sites <= 64 for g in random_graphs)

    def test_route_equivalence(self, random_graphs):
        rng = np.random.default_rng(5)
        ts = np.linspace(0, 60, 100)
        for net in random_graphs:
            w = int(rng.integers(net.n_sites))
            gamma = float(rng.uniform(0.05, 2.0))
            cfg = cfg_for(net, gamma, w)
            lv = solve_levels(cfg)
            a = amplitude_spectral(cfg, lv, ts)
            b = amplitude_direct(netgen.laplacian(net), cfg, ts)
            assert np.abs(a - b).max() < 1e-8
            assert np.max(np.abs(b) ** 2) <= 1 + 1e-9
            check_sum_rules(lv)
            check_interlacing(cfg, lv)

    def test_overlap_formula_vs_eigenvectors(self, random_graphs):
        for net in random_graphs:
            w = net.n_sites // 3
            cfg = cfg_for(net, 0.5, w)
            lv = solve_levels(cfg)
            dd = direct_decomposition(netgen.laplacian(net), cfg.gamma, w)
            idx = np.abs(dd.energies[:, None] - lv.energies[None, :]).argmin(axis=0)
            assert np.allclose(dd.energies[idx], lv.energies, atol=1e-10)
            assert np.allclose(dd.s_components[idx] ** 2, lv.s_overlap, atol=1e-8)
            assert np.allclose(dd.w_components[idx] ** 2, lv.w_overlap, atol=1e-8)
            # every other H eigenvalue is silent
            rest = np.delete(dd.energies, idx)
            assert np.allclose(np.sort(rest), np.sort(lv.silent_levels), atol=1e-9)

    def test_random_ten_times_n16(self):
        net = random_connected(16, 99)
        cfg = cfg_for(net, 0.8, 5)
        lv = solve_levels(cfg)
        ts = np.random.default_rng(1).uniform(0, 100, 10)
        diff = amplitude_spectral(cfg, lv, ts) - amplitude_direct(netgen.laplacian(net), cfg, ts)
        assert np.abs(diff).max() < 1e-8


@given(st.integers(4, 40), st.integers(0, 10_000), st.floats(0.01, 10.0))
@settings(max_examples=40, deadline=None)
def test_sum_rules_property(n, seed, gamma):
    net = random_connected(n, seed, extra=n // 2)
    cfg = cfg_for(net, gamma, seed % n)
    lv = solve_levels(cfg)
    check_sum_rules(lv)
    check_interlacing(cfg, lv)
    assert abs(amplitude_spectral(cfg, lv, 0.0) - 1 / math.sqrt(n)) < 1e-10


@pytest.mark.parametrize("g", [1, 2, 3, 4])
def test_mk_b2_route_equivalence(g):
    net = netgen.mk_hierarchical(2, g)
    lap = netgen.laplacian(net)
    spec = network_spectrum(net, need_vectors=True)
    ts = np.linspace(0, 200, 100)
    for w in (0, net.n_sites - 1):
        cfg = search_config(spec, w, zeta_spectral(spec, 1).value)
        lv = solve_levels(cfg)
        check_sum_rules(lv)
        check_interlacing(cfg, lv)
        assert np.abs(amplitude_spectral(cfg, lv, ts) - amplitude_direct(lap, cfg, ts)).max() < 1e-8


def test_silent_level_count():
    net = netgen.mk_hierarchical(3, 3)
    cfg = cfg_for(net, 0.4, 0)
    lv = solve_levels(cfg)
    assert len(lv.energies) + len(lv.silent_levels) == net.n_sites


@pytest.mark.parametrize("t", [0.0, 0.7, 3.1, 12.0])
def test_unitarity_and_convention(t):
    net = random_connected(12, 3)
    lap = netgen.laplacian(net)
    cfg = cfg_for(net, 0.6, 2)
    psi = evolve_state(lap, 0.6, 2, t)
    assert abs(np.linalg.norm(psi) - 1) < 1e-9
    # e^{+iHt} amplitude is the conjugate of the Schrodinger amplitude
    assert abs(np.conj(psi[2]) - amplitude_direct(lap, cfg, t)) < 1e-10


def test_t0_amplitude_direct():
    net = netgen.hypercubic_lattice([3, 4])
    cfg = cfg_for(net, 1.0, 0)
    assert amplitude_direct(netgen.laplacian(net), cfg, 0.0) == pytest.approx(1 / math.sqrt(12), abs=1e-12)


# ---------------------------------------------------------------- t_opt

class TestTOpt:
    def test_5d_torus(self):
        spec = lattice_spectrum_analytic([4] * 5)
        i1, i2 = zeta_spectral(spec, 1).value, zeta_spectral(spec, 2).value
        cfg = search_config(spec, 0, i1)
        t, p = find_t_opt(cfg, solve_levels(cfg))
        assert 0.5 <= p <= 1.0
        predicted = two_level_predict(i1, i2, 1024).t_opt
        assert t == pytest.approx(predicted, rel=0.25)

    def test_no_maximum(self):
        cfg = cfg_for(netgen.complete_graph(64), 1 / 64, vectors=False)
        lv = solve_levels(cfg)
        with pytest.raises(NoMaximumError):
            find_t_opt(cfg, lv, floor=2.0)

    def test_probability_array(self):
        cfg = cfg_for(netgen.complete_graph(16), 1 / 16, vectors=False)
        p = probability(cfg, solve_levels(cfg), np.array([0.0, 2 * math.pi]))
        assert p[0] == pytest.approx(1 / 16)
        assert p[1] == pytest.approx(1.0)


# ---------------------------------------------------------------- sweeps

class TestSweep:
    def test_grid(self):
        grid = sweep_grid(0.01)
        assert len(grid) == 81
        assert grid[40] == 0.01
        assert grid[0] == pytest.approx(0.001) and grid[-1] == pytest.approx(0.1)

    @pytest.mark.parametrize("n", [64, 1024])
    def test_complete(self, n):
        sw = gamma_sweep(netgen.complete_graph(n), 0)
        assert sw.crossing == pytest.approx(1 / n, rel=0.1)
        assert sw.gamma_predictor == pytest.approx((n - 1) / n ** 2, rel=1e-12)

    def test_5d_torus(self):
        net = netgen.hypercubic_lattice([4] * 5)
        sw = gamma_sweep(net, 0)
        assert sw.crossing == pytest.approx(sw.gamma_predictor, rel=0.2)

    def test_no_crossing(self):
        sw = gamma_sweep(netgen.complete_graph(32), 0, gammas=[1e-4, 2e-4, 3e-4])
        assert sw.crossing is None
        assert "no overlap crossing" in sw.diagnostic


# ---------------------------------------------------------------- regime solvers

class TestTwoLevel:
    @pytest.mark.parametrize("n", [16, 256, 1024])
    def test_complete_limit(self, n):
        spec = network_spectrum(netgen.complete_graph(n))
        i1, i2 = zeta_spectral(spec, 1).value, zeta_spectral(spec, 2).value
        assert i1 == pytest.approx((n - 1) / n ** 2) and i2 == pytest.approx((n - 1) / n ** 3)
        pred = two_level_predict(i1, i2, n)
        lv = solve_levels(search_config(spec, 0, i1))
        assert pred.E1 - pred.E0 == pytest.approx(lv.gap, rel=2 / math.sqrt(n))
        assert pred.E0 == -pred.E1

    def test_5d_prediction(self):
        spec = lattice_spectrum_analytic([4] * 5)
        i1, i2 = zeta_spectral(spec, 1).value, zeta_spectral(spec, 2).value
        pred = two_level_predict(i1, i2, 1024, ds=5)
        lv = solve_levels(search_config(spec, 0, i1))
        assert abs(pred.E0 - lv.E0) / abs(lv.E0) <= 0.1
        assert abs(pred.E1 - lv.E1) / abs(lv.E1) <= 0.1
        assert pred.regime_ok
        assert np.allclose(lv.s_overlap[:2], 0.5, atol=0.15)

    def test_dynamics_formula(self):
        pred = two_level_predict(0.2, 0.05, 400)
        assert pred.amplitude == pytest.approx(0.8)
        assert pred.probability(pred.t_opt) == pytest.approx(pred.p_opt)
        assert pred.probability(0.0) == 0.0

    def test_amplitude_capped(self):
        assert two_level_predict(1.0, 0.5, 100).amplitude == 1.0

    def test_regime_warning(self):
        with pytest.warns(UserWarning):
            assert not two_level_predict(0.2, 0.05, 400, ds=3).regime_ok


class TestSubGrover:
    def test_mk_b3_g4(self):
        net = netgen.mk_hierarchical(3, 4)
        spec = network_spectrum(net, need_vectors=True)
        w = net.representative_site()
        i1 = zeta_spectral(spec, 1).value
        cfg = search_config(spec, w, i1)
        sol = sub_grover_solve(cfg, solve_levels(cfg), math.log2(6), spec.lambda_1)
        assert sol.e0 < 0 < sol.e1 < 1
        assert sol.runtime_exponent == pytest.approx(2 / math.log2(6))
        assert sol.p_bound < 1

    def test_lambda_fit(self):
        series = []
        for g in (2, 3, 4):
            spec = network_spectrum(netgen.mk_hierarchical(3, g))
            series.append((spec.n, spec.lambda_1))
        net = netgen.mk_hierarchical(3, 4)
        spec = network_spectrum(net, need_vectors=True)
        cfg = search_config(spec, net.representative_site(), zeta_spectral(spec, 1).value)
        sol = sub_grover_solve(cfg, solve_levels(cfg), 2.585, spec.lambda_1, series)
        assert sol.lambda_exponent < 0
        assert sol.Lambda > 0

    def test_exponent_limit(self):
        cfg = cfg_for(netgen.complete_graph(8), 0.1, vectors=False)
        sol = sub_grover_solve(cfg, solve_levels(cfg), 4 - 1e-12, 8.0)
        assert sol.runtime_exponent == pytest.approx(0.5)

    @pytest.mark.parametrize("ds", [2.0, 4.0, 5.0])
    def test_regime_mismatch(self, ds):
        cfg = cfg_for(netgen.complete_graph(8), 0.1, vectors=False)
        with pytest.raises(RegimeMismatchError):
            sub_grover_solve(cfg, solve_levels(cfg), ds, 8.0)
