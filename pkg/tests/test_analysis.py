import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctqw_traps import (
    NoCrossoverError,
    TimeGrid,
    build_chain,
    classical_curve,
    classical_transfer_matrix,
    collapse_curves,
    decompose,
    detect_crossover,
    fit_decay_exponent,
    fit_exponential_tail,
    fit_spectral_exponent,
    gamma_sweep,
    intermediate_window,
    physical_time,
    powerlaw_model,
    propagate_oracle,
)
from ctqw_traps.analysis import (
    PHYSICAL_TIME_RULE,
    default_rank_window,
    running_slope,
    sweep_to_csv,
    time_to_threshold,
)
from ctqw_traps.curves import Model, SurvivalCurve


def synthetic_spectrum(rates):
    return decompose(np.diag(-1j * np.asarray(rates, dtype=float)))


def test_rank_window_defaults():
    assert default_rank_window(100) == (10, 60)
    assert default_rank_window(15) == (2, 9)


def test_intermediate_window_defaults():
    assert intermediate_window(100, 7.94e-6) == (200.0, 1000.0)
    assert intermediate_window(100) == (200.0, 1000.0)
    assert intermediate_window(40, 1e-4) == (80.0, 400.0)
    with pytest.raises(ValueError):
        intermediate_window(40, 1e-3)


def test_spectral_fit_exact_power_law():
    ranks = np.arange(1, 41)
    fit = fit_spectral_exponent(synthetic_spectrum(3.0 * ranks**2.0), 2, 30)
    assert fit.exponent == pytest.approx(2.0, abs=1e-12)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.n_points == 29 and fit.window == (2, 30)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(1e-6, 1e2), mu=st.floats(0.5, 3.5))
def test_spectral_fit_recovers_any_power_law(a, mu):
    ranks = np.arange(1, 31)
    fit = fit_spectral_exponent(synthetic_spectrum(a * ranks**mu))
    assert fit.exponent == pytest.approx(mu, rel=1e-12)
    assert fit.prefactor == pytest.approx(a, rel=1e-11)


def test_spectral_fit_rejects_bad_window(spectrum100):
    with pytest.raises(ValueError, match="rank window"):
        fit_spectral_exponent(spectrum100, 60, 10)
    with pytest.raises(ValueError, match="rank window"):
        fit_spectral_exponent(spectrum100, 1, 101)
    s = synthetic_spectrum([0.0, 0.0, 1.0, 2.0, 3.0])
    with pytest.raises(ValueError, match="non-positive"):
        fit_spectral_exponent(s, 1, 4)


def test_spectral_fit_chain100_range(spectrum100):
    fit = fit_spectral_exponent(spectrum100, 10, 60)
    assert 1.8 < fit.exponent < 2.0
    assert fit.r_squared > 0.99


def test_decay_exponent_chain100(curve100):
    fit = fit_decay_exponent(curve100, 200, 1000)
    assert fit.exponent == pytest.approx(-1 / 1.865, abs=0.03)
    assert fit.window == (200, 1000)
    assert fit_decay_exponent(curve100).window == (200.0, 1000.0)


def test_decay_exponent_of_model():
    c = powerlaw_model(1e-4, 2.0, TimeGrid.log(1, 1e4, 50))
    assert fit_decay_exponent(c, 1, 1e4).exponent == pytest.approx(-0.5, abs=1e-12)


def test_decay_exponent_rejects_nonpositive():
    c = SurvivalCurve([1.0, 2.0, 3.0, 4.0], [1.0, 0.5, 0.0, 0.0], Model.QUANTUM_EXACT)
    with pytest.raises(ValueError, match="non-positive"):
        fit_decay_exponent(c, 1, 4)
    with pytest.raises(ValueError):
        fit_decay_exponent(c, 3, 2)
    with pytest.raises(ValueError, match="at least 3"):
        fit_decay_exponent(c, 1, 2)


def test_classical_is_a_poor_power_law(curve100):
    cl = classical_curve(build_chain(100, 1.0), curve100.times)
    cl_pl = fit_decay_exponent(cl, 200, 1000).r_squared
    cl_exp = fit_exponential_tail(cl, 200, 1000).r_squared
    q_pl = fit_decay_exponent(curve100, 200, 1000).r_squared
    assert cl_pl < cl_exp
    assert cl_pl < q_pl


def test_exponential_tail_chain100(curve100):
    g = curve100.meta["gamma_min"]
    fit = fit_exponential_tail(curve100)
    assert fit.window == (pytest.approx(2 / g), pytest.approx(10 / g))
    assert fit.exponent == pytest.approx(2 * g, rel=0.01)


@pytest.mark.parametrize("gamma", [0.25, 1.0, 3.0])
def test_exponential_tail_single_node(gamma):
    c = propagate_oracle(np.array([[-1j * gamma]]), 1, TimeGrid.linear(0, 2, 41))
    assert fit_exponential_tail(c, 0.1, 2).exponent == pytest.approx(2 * gamma, rel=1e-8)


def test_exponential_tail_classical_chain100():
    spec = build_chain(100, 1.0)
    slowest = abs(np.linalg.eigvalsh(classical_transfer_matrix(spec)).max())
    grid = TimeGrid.log(2 / slowest, 10 / slowest, 100)
    fit = fit_exponential_tail(classical_curve(spec, grid), grid.t_min, grid.t_max)
    assert fit.exponent == pytest.approx(slowest, rel=0.01)


def test_exponential_tail_needs_window():
    c = SurvivalCurve([1.0, 2.0, 3.0], [0.9, 0.8, 0.7], Model.CLASSICAL_EXACT)
    with pytest.raises(ValueError, match="gamma_min"):
        fit_exponential_tail(c)


def test_running_slope_of_power_law():
    c = powerlaw_model(1e-3, 1.5, TimeGrid.log(1, 1e3, 40))
    _, s = running_slope(c)
    np.testing.assert_allclose(s, -1 / 1.5, atol=1e-12)


@pytest.mark.parametrize("n, band", [(40, (10, 40)), (100, (25, 100))])
def test_crossover_near_half_n(curves_by_n, n, band):
    t = detect_crossover(curves_by_n[n])
    assert band[0] <= t <= band[1]


def test_crossover_pure_power_law():
    c = powerlaw_model(1e-5, 1.865, TimeGrid.log(0.1, 1e4, 200))
    with pytest.raises(NoCrossoverError):
        detect_crossover(c, plateau_window=(200, 1000))


def test_crossover_scales_with_n(curves_by_n):
    ratios = [detect_crossover(c) / n for n, c in curves_by_n.items()]
    assert max(ratios) / min(ratios) <= 2.0


def test_collapse_single_curve(curves_by_n):
    rep = collapse_curves([curves_by_n[60]], 1.865)
    assert rep.dispersion == 0.0


def test_collapse_order_invariant(curves_by_n):
    cs = list(curves_by_n.values())
    a = collapse_curves(cs, 1.9)
    b = collapse_curves(cs[::-1], 1.9)
    c = collapse_curves([cs[2], cs[0], cs[3], cs[1]], 1.9)
    assert a.dispersion == b.dispersion == c.dispersion
    assert [n for n, _ in a.curves] == [40, 60, 80, 100]


def test_collapse_wrong_mu_is_worse(curves_by_n):
    cs = list(curves_by_n.values())
    assert collapse_curves(cs, 0.5).dispersion > collapse_curves(cs, 1.865).dispersion


def test_collapse_rescaling(curves_by_n):
    rep = collapse_curves(list(curves_by_n.values()), 2.0)
    n, c = rep.curves[0]
    np.testing.assert_allclose(c.times * n, curves_by_n[n].times, rtol=1e-14)
    assert rep.dispersion >= 0
    doc = json.loads(rep.to_json())
    assert doc["N"] == [40, 60, 80, 100] and doc["mu_used"] == 2.0


def test_collapse_errors(curves_by_n):
    c40 = curves_by_n[40]
    with pytest.raises(ValueError, match="distinct"):
        collapse_curves([c40, c40], 1.865)
    other = SurvivalCurve(c40.times, c40.values, c40.model, dict(c40.meta, N=41, gamma=2.0))
    with pytest.raises(ValueError, match="Gamma"):
        collapse_curves([c40, other], 1.865)
    with pytest.raises(ValueError, match="overlap"):
        collapse_curves([c40, curves_by_n[100]], 1.865, window=(5.0, 1.0))
    with pytest.raises(ValueError):
        collapse_curves([], 1.865)


def test_sweep_minimum_at_unit_gamma():
    rows = dict(gamma_sweep(50, [0.1, 1.0, 10.0], 0.5))
    assert rows[1.0] < rows[0.1] and rows[1.0] < rows[10.0]


def test_sweep_immediate_crossing():
    grid = TimeGrid.log(0.1, 1e4, 200)
    for _, t in gamma_sweep(20, [0.1, 1.0, 10.0], 0.999999, grid):
        assert t == pytest.approx(0.1, rel=0.1)


def test_sweep_unreached_threshold():
    rows = gamma_sweep(50, [1.0], 1e-3, TimeGrid.log(0.1, 10, 20))
    assert rows == [(1.0, None)]
    assert sweep_to_csv(rows) == "gamma,t_threshold\n1,\n"


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.5])
def test_sweep_bad_threshold(bad):
    with pytest.raises(ValueError):
        gamma_sweep(10, [1.0], bad)


def test_sweep_rejects_nonpositive_gamma():
    with pytest.raises(ValueError):
        gamma_sweep(10, [0.0], 0.5)


@pytest.mark.parametrize("gamma", [0.1, 1.0, 10.0])
def test_sweep_monotone_in_threshold(gamma):
    grid = TimeGrid.log(0.1, 1e5, 300)
    ts = [gamma_sweep(30, [gamma], th, grid)[0][1] for th in (0.9, 0.7, 0.5, 0.3)]
    assert all(np.diff(ts) > 0)


def test_time_to_threshold_interpolates_in_log_time():
    t = time_to_threshold(SurvivalCurve([1.0, 100.0], [0.8, 0.4], Model.QUANTUM_EXACT), 0.6)
    assert t == pytest.approx(10.0)


def test_physical_time():
    assert physical_time(1.0, 1.0) == pytest.approx(0.159, abs=5e-4)
    assert physical_time(1.0, 1.0976) * 1e3 == pytest.approx(145, abs=0.5)
    assert physical_time(2.0, 1.3) == pytest.approx(2 * physical_time(1.0, 1.3), rel=1e-15)
    assert "2*pi" in PHYSICAL_TIME_RULE
    with pytest.raises(ValueError):
        physical_time(1.0, 0.0)


def test_fit_result_json(curve100):
    doc = json.loads(fit_decay_exponent(curve100, 200, 1000).to_json())
    assert set(doc) == {"exponent", "prefactor", "window", "r_squared", "n_points", "kind"}
    assert doc["kind"] == "power_law"
    assert 0 <= doc["r_squared"] <= 1
