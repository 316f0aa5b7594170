import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrinterf import scenarios as sc
from corrinterf.analysis import (
    band_floor,
    clsd,
    covariance_peak_snr,
    cpsd,
    cross_covariance,
    fit_power_law,
    floor_scaling_fit,
    lsd,
    normalized_covariance,
    psd,
    twb_covariance_estimate,
    twb_snr_curve,
    variance_of_difference,
)
from corrinterf.errors import FitError, ParameterError
from corrinterf.generator import ChannelPair, split_runs

from conftest import make_pair, white_pair

FS = 500e3


# --- oracles ---------------------------------------------------------------

def brute_cross_covariance(x1, x2, lag):
    """Direct double loop over the overlapping samples."""
    n = len(x1)
    m1, m2 = sum(x1) / n, sum(x2) / n
    if lag >= 0:
        s = sum((x1[t] - m1) * (x2[t + lag] - m2) for t in range(n - lag))
    else:
        s = sum((x1[t] - m1) * (x2[t + lag] - m2) for t in range(-lag, n))
    return s / (n - 1) if lag == 0 else s / n


def dft_matrix(n):
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n)[: n // 2 + 1]


def oracle_clsd_floor(seed, n_spectra, seg, fs=FS, band=(0, 100e3)):
    """Power-domain band floor of the uncalibrated CLSD from an explicit DFT."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((2, n_spectra, seg))
    w = dft_matrix(seg)
    f1 = x[0] @ w.T
    f2 = x[1] @ w.T
    c = (np.conj(f1) * f2).mean(axis=0) / seg
    f = np.arange(seg // 2 + 1) * fs / seg
    mask = (f > band[0]) & (f <= band[1])
    return float(np.mean(np.abs(c[mask]) ** 2) ** 0.25)


# --- normalized covariance ------------------------------------------------

def test_cross_covariance_matches_brute_force():
    p = white_pair(400, seed=1, cov=0.3)
    lags, cov = cross_covariance(p.x1, p.x2, 7)
    x1, x2 = p.x1.tolist(), p.x2.tolist()
    for lag, c in zip(lags, cov):
        assert c == pytest.approx(brute_cross_covariance(x1, x2, int(lag)), rel=1e-10, abs=1e-13)


def test_self_correlation_is_one():
    p = make_pair(n=200_000, seed=2)
    same = ChannelPair(p.x1, p.x1, FS)
    tr = normalized_covariance(same, 20 / FS)
    assert tr.peak() == pytest.approx(1.0, abs=5 * math.sqrt(2 / 200_000))


@pytest.mark.parametrize("n", [1_000, 10_000])
def test_background_level_matches_monte_carlo(n):
    # oracle: |Cov| at a fixed lag, brute-forced over many independent seeds
    rng = np.random.default_rng(99)
    samples = []
    for _ in range(400):
        a, b = rng.standard_normal((2, n))
        samples.append(abs(np.dot(a - a.mean(), b - b.mean()) / n))
    oracle = np.mean(samples)
    oracle_se = np.std(samples) / math.sqrt(len(samples))
    assert oracle == pytest.approx(math.sqrt(2 / (math.pi * n)), rel=0.1)

    floors = [normalized_covariance(make_pair(n=n, seed=s), 100 / FS).floor() for s in range(40)]
    # each floor averages ~190 weakly dependent lags; spread across seeds is the honest error
    se = np.std(floors) / math.sqrt(len(floors))
    assert abs(np.mean(floors) - oracle) < 3 * math.hypot(se, oracle_se)


def test_background_decays_as_inverse_sqrt_n():
    p = make_pair(n=1_000_000, seed=3)
    sizes = [1_000, 10_000, 100_000, 1_000_000]
    floors = [np.mean([normalized_covariance(p.head(m), 100 / FS).floor()]) for m in sizes]
    fit = fit_power_law(sizes, floors)
    assert fit.exponent == pytest.approx(-0.5, abs=0.1)


def test_correlated_plateau():
    p = make_pair(signals=[sc.correlated_signal()], n=1_000_000, seed=4)
    tr = normalized_covariance(p, 50 / FS)
    assert tr.peak() == pytest.approx(0.04, abs=5 * math.sqrt(1.08 / 1_000_000))


def test_snl_normalisation_and_rescaling():
    p = make_pair(signals=[sc.correlated_signal()], n=50_000, seed=5)
    scaled = ChannelPair(3 * p.x1, 3 * p.x2, FS)
    a = normalized_covariance(p, 30 / FS)
    b = normalized_covariance(scaled, 30 / FS, 9.0, 9.0)
    np.testing.assert_allclose(a.rho, b.rho, rtol=1e-10)


def test_normalized_covariance_errors():
    p = make_pair(n=1000)
    with pytest.raises(ParameterError):
        normalized_covariance(p, p.duration / 2)
    with pytest.raises(ParameterError):
        normalized_covariance(p, 1e-4, snl_var1=0.0)
    with pytest.raises(ParameterError):
        cross_covariance([], [], 0)


# --- SNR curves -------------------------------------------------------------

def _runs(state, n_runs=8, n=200_000, seed=10, signals=None):
    acqs = split_runs(sc.acquisition(n, seed), n_runs)
    sig = [sc.correlated_signal()] if signals is None else signals
    from corrinterf.generator import generate
    return [generate(state, sig, a) for a in acqs]


def test_snr_quadruples_samples_doubles_snr():
    curve = covariance_peak_snr(_runs(sc.coherent()), [20_000, 80_000], floor_lags=100)
    ratio = curve.snr[1] / curve.snr[0]
    err = ratio * math.hypot(curve.snr_err[0] / curve.snr[0], curve.snr_err[1] / curve.snr[1])
    assert abs(ratio - 2) < 3 * err


def test_snr_iss_advantage():
    sizes = [20_000, 50_000, 200_000]
    coh = covariance_peak_snr(_runs(sc.coherent(), seed=11), sizes, floor_lags=100)
    iss = covariance_peak_snr(_runs(sc.iss(3.0), seed=12), sizes, floor_lags=100)
    assert iss.sqrt_fit.prefactor / coh.sqrt_fit.prefactor == pytest.approx(2.0, abs=0.25)


def test_zero_signal_snr_near_one():
    curve = covariance_peak_snr(_runs(sc.coherent(), n_runs=30, n=20_000, signals=[]), [5_000, 20_000],
                                floor_lags=100)
    # |rho(0)| / mean |rho(tau)| of pure noise: both are half-normal draws
    assert np.all(np.abs(curve.snr - 1) < 3 * curve.snr_err + 0.05)


def test_snr_errors():
    runs = _runs(sc.coherent(), n_runs=2, n=10_000)
    with pytest.raises(ParameterError):
        covariance_peak_snr(runs[:1], [5_000])
    with pytest.raises(ParameterError):
        covariance_peak_snr(runs, [20_000], floor_lags=100)


# --- spectra ----------------------------------------------------------------

@pytest.mark.parametrize("n_spectra", [1, 10, 1000])
def test_parseval(n_spectra):
    p = make_pair(sc.iss(2.0), [sc.correlated_signal()], n=200_000, seed=6)
    e = psd(p.x1, n_spectra, FS)
    seg = e.segment_length
    x = p.x1[: seg * n_spectra].reshape(n_spectra, seg)
    # one-sided sum of |X|^2 / seg over all bins reproduces the mean square
    w = np.full(e.values.size, 2.0)
    w[0] = 1.0
    if seg % 2 == 0:
        w[-1] = 1.0
    total = np.sum(w * e.values) / seg
    assert total == pytest.approx(np.mean(x**2), rel=1e-10)
    # and the white-noise band level equals the sample variance within 1 %
    level = e.values[1:].mean() if n_spectra > 1 else None
    if level is not None:
        assert level == pytest.approx(np.var(p.x1), rel=0.01)


def test_psd_flat_at_snl():
    p = make_pair(n=1_000_000, seed=7)
    level, se = band_floor(psd(p.x1, 1000, FS))
    assert abs(level - 1.0) < 3 * se


def test_psd_of_twb_difference():
    p = make_pair(sc.twb(), n=1_000_000, seed=8)
    level, se = band_floor(psd(p.difference(), 1000, FS))
    assert abs(level / 2 - 0.5623) < 3 * se / 2


def test_psd_confidence_bounds_bracket_estimate():
    e = psd(make_pair(n=10_000, seed=9).x1, 10, FS)
    assert np.all(e.lower < e.values) and np.all(e.values < e.upper)


def test_tone_only_in_first_channel():
    p = make_pair(signals=[sc.tone()], n=1_000_000, seed=10)
    e1, e2 = psd(p.x1, 1000, FS), psd(p.x2, 1000, FS)
    k = int(np.argmax(e1.values[1:])) + 1
    assert e1.frequencies[k] == pytest.approx(50e3)
    assert e1.values[k] > 50
    assert e2.at(50e3) < 1.5


def test_clsd_of_identical_channels_equals_lsd():
    p = make_pair(n=100_000, seed=11)
    same = ChannelPair(p.x1, p.x1, FS, calibration=p.calibration)
    np.testing.assert_allclose(clsd(same, 100).values, lsd(same, 100).values, rtol=1e-12)


def test_clsd_calibration():
    p = make_pair(n=10_000, seed=12)
    a, b = clsd(p, 10), clsd(p, 10, calibrated=False)
    np.testing.assert_allclose(a.values, 6e-16 * b.values, rtol=1e-12)


@pytest.mark.parametrize("n_spectra", [1, 10, 100, 1000])
def test_clsd_floor_matches_oracle(n_spectra):
    seg = 64
    seeds = range(150)
    oracle = np.array([oracle_clsd_floor(1000 + s, n_spectra, seg) for s in seeds])
    ours = np.array([band_floor(clsd(make_pair(n=seg * n_spectra, seed=s), n_spectra, calibrated=False))[0]
                     for s in seeds])
    se = math.hypot(ours.std(ddof=1), oracle.std(ddof=1)) / math.sqrt(len(seeds))
    assert abs(ours.mean() - oracle.mean()) < 3 * se


def test_clsd_averaging_factor():
    p = make_pair(n=1_000_000, seed=13)
    f1 = band_floor(clsd(p, 1))[0]
    f1000 = band_floor(clsd(p, 1000))[0]
    assert f1 / f1000 == pytest.approx(1000**0.25, abs=0.3)


def test_clsd_plateau():
    p = make_pair(sc.iss(2.6), [sc.correlated_signal()], n=1_000_000, seed=14)
    assert band_floor(clsd(p, 1000))[0] == pytest.approx(1.2e-16, rel=0.1)


def test_mean_floor_method_is_biased_at_one_spectrum():
    p = make_pair(n=1_000_000, seed=15)
    e = clsd(p, 1, calibrated=False)
    # arithmetic mean of sqrt|conj(X1) X2| for one spectrum: Gamma(5/4)^2
    assert band_floor(e, method="mean")[0] == pytest.approx(math.gamma(1.25) ** 2, rel=0.02)
    assert band_floor(e)[0] == pytest.approx(1.0, rel=0.02)


@pytest.mark.parametrize("kind, expected", [("clsd", -0.25), ("cpsd", -0.5)])
def test_floor_scaling_exponents(kind, expected):
    p = make_pair(n=1_000_000, seed=16)
    f = clsd if kind == "clsd" else cpsd
    fs = floor_scaling_fit([f(p, m) for m in (1, 3, 10, 30, 100, 300, 1000)])
    assert fs.fit.exponent == pytest.approx(expected, abs=0.02)


def test_floor_scaling_plateau():
    p = make_pair(signals=[sc.correlated_signal(1.0)], n=1_000_000, seed=17)
    fs = floor_scaling_fit([clsd(p, m) for m in (100, 200, 500, 1000)])
    assert fs.fit.exponent == pytest.approx(0.0, abs=0.02)


def test_floor_scaling_errors():
    p = make_pair(n=10_000, seed=18)
    with pytest.raises(ParameterError):
        floor_scaling_fit([clsd(p, m) for m in (1, 10, 100)])
    with pytest.raises(ParameterError):
        floor_scaling_fit([clsd(p, 1), clsd(p, 2), cpsd(p, 3), clsd(p, 4)])
    with pytest.raises(ParameterError):
        clsd(p, 10_000)
    with pytest.raises(ParameterError):
        band_floor(clsd(p, 10), band=(260e3, 270e3))
    with pytest.raises(ParameterError):
        band_floor(clsd(p, 10), method="median")


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 100))
def test_rescaling_invariance(k):
    p = make_pair(sc.iss(3.0), [sc.correlated_signal()], n=4_000, seed=19)
    q = ChannelPair(k * p.x1, k * p.x2, FS, calibration=p.calibration / k)
    np.testing.assert_allclose(clsd(q, 10).values, clsd(p, 10).values, rtol=1e-9)
    a = normalized_covariance(p, 20 / FS)
    b = normalized_covariance(q, 20 / FS, k * k, k * k)
    np.testing.assert_allclose(a.rho, b.rho, rtol=1e-9)
    ra = variance_of_difference(p, [-3, 0, 3])
    rb = variance_of_difference(q, [-3, 0, 3])
    np.testing.assert_allclose(rb.var_diff / k**2, ra.var_diff, rtol=1e-9)


# --- subtraction ----------------------------------------------------------

def test_variance_of_difference_identity():
    p = make_pair(sc.twb(), [sc.uncorrelated_signal(0.4)], n=100_000, seed=20)
    tr = variance_of_difference(p, np.arange(-20, 21))
    assert tr.identity_error < 1e-10
    # independent check at one lag against numpy's own estimators
    a, b = p.x1[:-5], p.x2[5:]
    assert tr.at(5) == pytest.approx(np.var(a - b, ddof=1), rel=1e-12)
    c = np.cov(a, b)
    assert tr.at(5) == pytest.approx(c[0, 0] + c[1, 1] - 2 * c[0, 1], rel=1e-10)


def test_variance_of_difference_coherent_is_two():
    p = make_pair(n=500_000, seed=21)
    tr = variance_of_difference(p, np.arange(-10, 11))
    np.testing.assert_allclose(tr.var_diff, 2.0, atol=5 * 2 * math.sqrt(2 / 500_000))


def test_variance_of_difference_twb_dip_and_wings():
    p = make_pair(sc.twb(), n=500_000, seed=22)
    tr = variance_of_difference(p, np.arange(-30, 31))
    tol = 5 * math.sqrt(2 / 500_000) * 2
    assert tr.at(0) == pytest.approx(1.1246, abs=tol)
    assert tr.off_dip() == pytest.approx(2 * 0.7812, abs=tol)


def test_variance_of_difference_errors():
    p = make_pair(n=100)
    with pytest.raises(ParameterError):
        variance_of_difference(p, [99])
    with pytest.raises(ParameterError):
        variance_of_difference(p, [])


def test_covariance_estimate_recovers_signal_power():
    a = 0.5
    pc = make_pair(sc.twb(), [sc.correlated_signal(a)], n=1_000_000, seed=23)
    pu = make_pair(sc.twb(), [sc.uncorrelated_signal(a)], n=1_000_000, seed=24)
    est = twb_covariance_estimate(pc, pu, 50_000)
    assert abs(est.estimate - a * a) < 5 * est.std / math.sqrt(est.n_subsets)
    assert est.mean > 0 and est.snr > 0


def test_covariance_estimate_zero_signal():
    pc = make_pair(sc.twb(), [], n=400_000, seed=25)
    pu = make_pair(sc.twb(), [], n=400_000, seed=26)
    est = twb_covariance_estimate(pc, pu)
    assert est.n_subsets == 20
    assert abs(est.mean) < 3 * est.std / math.sqrt(est.n_subsets)


def test_covariance_estimate_snr_error_formula():
    # spread of mean/std across repeats should match the quoted error
    snrs = []
    for s in range(40):
        pc = make_pair(sc.coherent(), [sc.correlated_signal(0.3)], n=40_000, seed=100 + s)
        pu = make_pair(sc.coherent(), [sc.uncorrelated_signal(0.3)], n=40_000, seed=200 + s)
        est = twb_covariance_estimate(pc, pu, 2_000)
        snrs.append((est.snr, est.snr_err))
    snrs = np.array(snrs)
    assert np.std(snrs[:, 0]) == pytest.approx(np.mean(snrs[:, 1]), rel=0.35)


def test_covariance_snr_curve_sqrt_scaling():
    pc = make_pair(sc.twb(), [sc.correlated_signal(0.4)], n=1_000_000, seed=27)
    pu = make_pair(sc.twb(), [sc.uncorrelated_signal(0.4)], n=1_000_000, seed=28)
    curve = twb_snr_curve(pc, pu, [500, 1000, 2000, 4000, 8000])
    assert curve.fit.exponent == pytest.approx(0.5, abs=0.1)


def test_covariance_estimate_errors():
    pc = make_pair(n=1000, seed=1)
    with pytest.raises(ParameterError):
        twb_covariance_estimate(pc, make_pair(n=2000, seed=2))
    with pytest.raises(ParameterError):
        twb_covariance_estimate(pc, ChannelPair(pc.x1, pc.x2, 1e5))
    with pytest.raises(ParameterError):
        twb_covariance_estimate(pc, pc, 600)


# --- power-law fitting ------------------------------------------------------

def test_fit_power_law_exact():
    x = np.array([1, 2, 4, 8, 16.0])
    fit = fit_power_law(x, 3 * x**-0.25)
    assert fit.exponent == pytest.approx(-0.25, abs=1e-12)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-12)
    fixed = fit_power_law(x, 2 * x**0.5, np.full(5, 0.01), exponent=0.5)
    assert fixed.prefactor == pytest.approx(2.0)
    assert fixed.fixed_exponent


def test_fit_power_law_errors():
    with pytest.raises(ParameterError):
        fit_power_law([1, 1], [1, 2])
    with pytest.raises(FitError):
        fit_power_law([1, 2, 3], [1, -1, 2])
