import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from twinbeam.estimators import (
    FIXED_EXPOSURE,
    FIXED_SQUEEZING,
    GAMMA_TO_0,
    GAMMA_TO_1,
    InconsistentStatisticsError,
    Protocol,
    asymptotic_diff,
    asymptotic_opt,
    balance_energy,
    delta_gamma_diff,
    delta_gamma_opt,
    delta_gamma_ratio,
    snl_diff,
    snl_direct,
    uncertainty_point,
    uql,
)
from twinbeam.model import ModelParams, mean_photons


def test_diff_examples():
    assert delta_gamma_diff(1.0, 1.0, 1.0, 0.0) == pytest.approx(math.sqrt(2))
    assert delta_gamma_diff(1.0, 0.0, 1.0, 0.0) == 0.0
    # classical light reproduces the shot-noise limit at every gamma
    for g in (0.0, 0.3, 1.0):
        assert delta_gamma_diff(1.0, 1.0, 7.0, g) == pytest.approx(snl_diff(7.0, g))


def test_diff_low_absorption_limit():
    eta, lam = 0.98, 1e-3
    u = uncertainty_point(ModelParams(lam, 1.0, 0, eta), 1e-6)
    assert u.diff == pytest.approx(math.sqrt(2 * (1 - eta) / (eta * lam)), rel=0.005)


def test_opt_examples():
    N, g = 40.0, 0.3
    assert delta_gamma_opt(1.0, 0.0, N, g) == pytest.approx(uql(N, g))
    assert delta_gamma_opt(0.5, 1.0, N, g) == pytest.approx(uql(N, g))
    assert delta_gamma_opt(1.0, 1.0, N, 0.0) == pytest.approx(1 / math.sqrt(N))
    assert delta_gamma_diff(1.0, 1.0, N, 0.0) / delta_gamma_opt(1.0, 1.0, N, 0.0) == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        delta_gamma_opt(0.0, 0.5, N, g)


def test_ratio_examples():
    N = 25.0
    for g in (0.0, 0.2, 0.7, 1.0):
        assert delta_gamma_ratio(0.0, N, g) == pytest.approx(uql(N, g))
        assert delta_gamma_ratio(0.5, N, g) == pytest.approx(math.sqrt((1 - g) / N))
        assert delta_gamma_ratio(0.5, N, g) == pytest.approx(snl_direct(N, g))
    assert delta_gamma_ratio(0.5, 100.0, 0.0) == pytest.approx(0.1)


def test_snl_direct_is_half_power_of_difference_snl():
    # at gamma = 0 the two references differ by sqrt(2), not 2
    assert snl_diff(9.0, 0.0) / snl_direct(9.0, 0.0) == pytest.approx(math.sqrt(2))


@pytest.mark.parametrize("func", [
    lambda N, g: delta_gamma_diff(1, 1, N, g),
    lambda N, g: delta_gamma_opt(1, 1, N, g),
    lambda N, g: delta_gamma_ratio(1, N, g),
    snl_diff, snl_direct, uql,
])
def test_input_validation(func):
    with pytest.raises(ValueError):
        func(0.0, 0.5)
    with pytest.raises(ValueError):
        func(1.0, 1.5)


def test_radicand_hygiene():
    assert delta_gamma_diff(1.0, -1e-13, 1.0, 0.0) == 0.0
    with pytest.raises(InconsistentStatisticsError):
        delta_gamma_diff(1.0, -1.0, 1.0, 0.0)
    with pytest.raises(InconsistentStatisticsError):
        delta_gamma_ratio(-1.0, 1.0, 0.0)


@pytest.mark.parametrize("F, sigma, N", [(0.7, 0.3, 5.0), (2.0, 0.02, 0.1), (1.0, 1.0, 100.0)])
def test_endpoint_full_absorption(F, sigma, N):
    assert delta_gamma_opt(F, sigma, N, 1.0) == 0.0
    assert delta_gamma_ratio(sigma, N, 1.0) == 0.0
    assert delta_gamma_diff(F, sigma, N, 1.0) == pytest.approx(math.sqrt(F / N))


@settings(max_examples=500, deadline=None)
@given(st.floats(0, 1), st.floats(1e-6, 5), st.floats(0, 1), st.floats(1e-6, 1e3))
def test_estimator_ordering(g, F, sigma, N):
    # |cov| <= var forces sigma <= 2F
    assume(sigma <= 2 * F)
    d = delta_gamma_diff(F, sigma, N, g)
    o = delta_gamma_opt(F, sigma, N, g)
    r = delta_gamma_ratio(sigma, N, g)
    assert o <= r * (1 + 1e-12) + 1e-12
    assert r <= d * (1 + 1e-12) + 1e-12


def test_opt_rejects_sigma_above_twice_fano():
    with pytest.raises(InconsistentStatisticsError):
        delta_gamma_opt(0.25, 1.0, 1.0, 0.0)
    assert delta_gamma_opt(0.5, 1.0, 1.0, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_asymptote_examples():
    lam, eta = 1e-3, 0.98
    assert asymptotic_diff(2, eta, lam, GAMMA_TO_1) == pytest.approx(1 / (3 * math.sqrt(eta * lam)))
    assert asymptotic_diff(2, eta, lam, GAMMA_TO_1) == pytest.approx(10.648, abs=1e-3)
    assert asymptotic_opt(0, 1.0, lam, GAMMA_TO_0) == 0.0
    assert asymptotic_diff(2, eta, lam, GAMMA_TO_0) / asymptotic_diff(0, eta, lam, GAMMA_TO_0) == pytest.approx(1 / 3)
    # the printed m=1 form equals (1/2) of the m=0 form
    assert asymptotic_diff(1, eta, lam, GAMMA_TO_0) == pytest.approx(asymptotic_diff(0, eta, lam, GAMMA_TO_0) / 2)
    assert asymptotic_opt(1, eta, lam, GAMMA_TO_1, gamma=0.99) == pytest.approx(
        math.sqrt(0.01) / (2 * math.sqrt(eta * lam)))


def test_asymptote_errors():
    with pytest.raises(ValueError):
        asymptotic_diff(3, 0.9, 0.1, GAMMA_TO_0)
    with pytest.raises(ValueError):
        asymptotic_opt(0, 0.9, 0.1, "gamma->0.5")
    with pytest.raises(ValueError):
        asymptotic_opt(0, 0.9, 0.1, GAMMA_TO_1)


@pytest.mark.parametrize("m", [0, 1, 2])
@pytest.mark.parametrize("eta", [0.5, 0.7])
def test_asymptotes_track_full_formulas(m, eta):
    # gamma corrections scale as gamma / (2 sigma); keep them far below 1% here
    lam = 1e-3
    p = ModelParams(lam, 1.0, m, eta)
    lo, hi = uncertainty_point(p, 1e-4), uncertainty_point(p, 0.999)
    assert lo.diff == pytest.approx(asymptotic_diff(m, eta, lam, GAMMA_TO_0), rel=0.01)
    assert hi.diff == pytest.approx(asymptotic_diff(m, eta, lam, GAMMA_TO_1), rel=0.01)
    assert lo.opt == pytest.approx(asymptotic_opt(m, eta, lam, GAMMA_TO_0), rel=0.01)
    assert hi.opt == pytest.approx(asymptotic_opt(m, eta, lam, GAMMA_TO_1, 0.999), rel=0.01)


def test_balance_energy_examples():
    assert balance_energy(0.37, 0) == 0.37
    assert balance_energy(4e-4, 1) == pytest.approx(1e-4, rel=0.01)
    assert balance_energy(9e-4, 2) == pytest.approx(1e-4, rel=0.01)


@pytest.mark.parametrize("lam_ref", [1e-3, 0.05, 2.0, 5.0])
@pytest.mark.parametrize("m", [1, 2])
@pytest.mark.parametrize("beta", [0.0, 1.0])
def test_balance_energy_hits_target(lam_ref, m, beta):
    lam = balance_energy(lam_ref, m, beta)
    assert 0 < lam < lam_ref
    assert mean_photons(lam, m, beta) == pytest.approx(lam_ref, rel=1e-12)


def test_balance_energy_errors():
    with pytest.raises(ValueError):
        balance_energy(0.0, 1)
    with pytest.raises(ValueError):
        balance_energy(1000.0, 2, lam_max=20.0)


def test_perfect_correlation_limit():
    # eta = 1, beta = 0: sigma = 0 and F = 1
    u = uncertainty_point(ModelParams(0.05, 0.0, 0, 1.0), 0.3)
    assert u.sigma == pytest.approx(0.0, abs=1e-12)
    assert u.fano == pytest.approx(1.0, abs=1e-12)
    assert u.opt == pytest.approx(u.uql, rel=1e-9)
    assert u.ratio == pytest.approx(u.uql, rel=1e-9)
    # the difference estimator keeps the probe's own partition noise
    assert u.diff == pytest.approx(math.sqrt(0.3 / u.N_P), rel=1e-9)


def test_fixed_squeezing_advantage_low_lam():
    p0 = uncertainty_point(ModelParams(0.05, 1.0, 0, 0.98), 0.01)
    p2 = uncertainty_point(ModelParams(0.05, 1.0, 2, 0.98), 0.01)
    assert p2.diff / p0.diff == pytest.approx(1 / 3, rel=0.1)


def test_fixed_exposure_equalizes_detected_mean():
    pr = Protocol(FIXED_EXPOSURE, 2.0, 1.0, 0.98)
    N = [pr.point(m, 0.5).N_P for m in range(3)]
    assert np.ptp(N) < 1e-12
    assert N[0] == pytest.approx(0.98 * 2.0)
    direct = uncertainty_point(ModelParams(2.0, 1.0, 2, 0.98), 0.5, FIXED_EXPOSURE)
    assert direct == pr.point(2, 0.5)


@pytest.mark.parametrize("lam_ref", [0.05, 2.0])
@pytest.mark.parametrize("beta", [0.0, 1.0])
@pytest.mark.parametrize("eta", [0.5, 0.98])
def test_ratio_estimator_blind_to_subtraction_at_fixed_exposure(lam_ref, beta, eta):
    pr = Protocol(FIXED_EXPOSURE, lam_ref, beta, eta)
    for g in (0.0, 0.01, 0.5, 0.9):
        vals = [pr.point(m, g).ratio for m in range(3)]
        assert np.ptp(vals) < 1e-12


@pytest.mark.parametrize("beta", [0.0, 1.0])
@pytest.mark.parametrize("m", [0, 1, 2])
def test_sub_shot_noise_at_fixed_squeezing(beta, m):
    p = ModelParams(0.05, beta, m, 0.98)
    for g in np.linspace(0, 0.9, 46):
        u = uncertainty_point(p, float(g))
        assert max(u.diff, u.opt, u.ratio) < u.snl_diff


def test_protocol_validation():
    with pytest.raises(ValueError):
        Protocol("fixed_energy", 1.0)
    with pytest.raises(ValueError):
        Protocol(FIXED_SQUEEZING, 0.0)
    with pytest.raises(ValueError):
        uncertainty_point(ModelParams(0.1), 0.1, protocol="fixed_energy")
    assert Protocol(FIXED_SQUEEZING, 0.3, 0.5, 0.9).params(2) == ModelParams(0.3, 0.5, 2, 0.9)
