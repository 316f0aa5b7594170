"""Read-out subtraction statistics: variance of difference and the variance-subtraction covariance estimator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from corrinterf.analysis.scaling import ScalingFit, fit_power_law
from corrinterf.errors import ParameterError
from corrinterf.generator import ChannelPair


@dataclass(frozen=True)
class DifferenceTrace:
    lag_samples: np.ndarray
    lags: np.ndarray  # seconds
    var_diff: np.ndarray  # direct Var(x1(t) - x2(t + tau))
    var1: np.ndarray
    var2: np.ndarray
    cov: np.ndarray

    @property
    def reconstructed(self) -> np.ndarray:
        return self.var1 + self.var2 - 2 * self.cov

    @property
    def identity_error(self) -> float:
        """Largest relative mismatch between the direct and reconstructed variance."""
        return float(np.max(np.abs(self.var_diff - self.reconstructed) / np.abs(self.var_diff)))

    def at(self, lag: int) -> float:
        return float(self.var_diff[self.lag_samples == lag][0])

    def off_dip(self, exclude: int = 3) -> float:
        return float(self.var_diff[np.abs(self.lag_samples) > exclude].mean())


def _overlap(x1, x2, lag):
    n = x1.size
    if lag >= 0:
        return x1[: n - lag], x2[lag:]
    return x1[-lag:], x2[: n + lag]


def variance_of_difference(pair: ChannelPair, lags) -> DifferenceTrace:
    """Var(x1(t) - x2(t + tau)) over the overlapping samples at each lag.

    The direct variance and the parts Var(x1), Var(x2), Cov(x1, x2) are all
    computed on the same overlapping slices with 1/(N-1) normalisation, so
    the identity Var(a - b) = Var(a) + Var(b) - 2 Cov(a, b) holds to
    round-off.
    """
    lags = np.asarray(lags, dtype=int)
    n = len(pair)
    if lags.ndim != 1 or lags.size == 0:
        raise ParameterError("lag grid must be a non-empty 1-D sequence")
    if np.any(np.abs(lags) > n - 2):
        raise ParameterError(f"lag grid exceeds the data length {n}")
    out = np.empty((4, lags.size))
    for i, lag in enumerate(lags):
        a, b = _overlap(pair.x1, pair.x2, int(lag))
        d = a - b
        am = a - a.mean()
        bm = b - b.mean()
        m = a.size - 1
        out[0, i] = np.var(d, ddof=1)
        out[1, i] = np.dot(am, am) / m
        out[2, i] = np.dot(bm, bm) / m
        out[3, i] = np.dot(am, bm) / m
    return DifferenceTrace(lags, lags / pair.sample_rate, *out)


@dataclass(frozen=True)
class CovarianceEstimate:
    estimate: float  # full-record (Var_uncorr - Var_corr) / 2
    mean: float  # mean over subsets
    std: float  # standard deviation over subsets
    n_subsets: int
    subset_size: int
    per_subset: np.ndarray

    @property
    def snr(self) -> float:
        return self.mean / self.std if self.std > 0 else float("inf")

    @property
    def snr_err(self) -> float:
        # large-sample standard error of mean/std for normal data
        return float(np.sqrt((1 + self.snr**2 / 2) / self.n_subsets))


def _check_pairs(pair_corr: ChannelPair, pair_uncorr: ChannelPair):
    if len(pair_corr) != len(pair_uncorr):
        raise ParameterError("correlated and uncorrelated records differ in length")
    if pair_corr.sample_rate != pair_uncorr.sample_rate:
        raise ParameterError("correlated and uncorrelated records differ in sample rate")


def twb_covariance_estimate(pair_corr: ChannelPair, pair_uncorr: ChannelPair,
                            subset_size: int | None = None) -> CovarianceEstimate:
    """Signal covariance from the variance of read-out differences.

    With a positively correlated signal, Var(x1 - x2)_corr - Var(x1 - x2)_uncorr
    equals -2 Cov(signal1, signal2), so the estimate returned is
    (Var_uncorr - Var_corr) / 2, which is positive for a correlated signal.
    SNR is mean / std of the same quantity over non-overlapping subsets of
    ``subset_size`` samples (default: 20 subsets).
    """
    _check_pairs(pair_corr, pair_uncorr)
    n = len(pair_corr)
    subset_size = n // 20 if subset_size is None else int(subset_size)
    if not 2 <= subset_size <= n // 2:
        raise ParameterError(f"subset_size must lie in [2, {n // 2}] to form >= 2 subsets")
    k = n // subset_size
    dc = pair_corr.difference()
    du = pair_uncorr.difference()
    full = (np.var(du, ddof=1) - np.var(dc, ddof=1)) / 2
    vc = dc[: k * subset_size].reshape(k, subset_size).var(axis=1, ddof=1)
    vu = du[: k * subset_size].reshape(k, subset_size).var(axis=1, ddof=1)
    per = (vu - vc) / 2
    return CovarianceEstimate(float(full), float(per.mean()), float(per.std(ddof=1)), k, subset_size, per)


@dataclass(frozen=True)
class CovarianceSNRCurve:
    n_samples: np.ndarray
    snr: np.ndarray
    snr_err: np.ndarray
    fit: ScalingFit
    sqrt_fit: ScalingFit


def twb_snr_curve(pair_corr: ChannelPair, pair_uncorr: ChannelPair, subset_sizes) -> CovarianceSNRCurve:
    """SNR of the subtraction covariance estimate against subset size."""
    sizes = np.asarray(sorted(set(int(s) for s in subset_sizes)))
    results = [twb_covariance_estimate(pair_corr, pair_uncorr, s) for s in sizes]
    snr = np.array([r.snr for r in results])
    err = np.array([r.snr_err for r in results])
    if np.any(snr <= 0):
        raise ParameterError("non-positive SNR; the signal is not resolved at these subset sizes")
    return CovarianceSNRCurve(sizes, snr, err, fit_power_law(sizes, snr, err),
                              fit_power_law(sizes, snr, err, exponent=0.5))


def twb_snr_ensemble(pairs_corr, pairs_uncorr, subset_sizes) -> CovarianceSNRCurve:
    """Covariance-estimate SNR averaged over independent (correlated, uncorrelated) record pairs.

    Per subset size the SNR is the mean over records and its error the
    standard error of that mean; the fits then use these averaged points.
    """
    pairs_corr, pairs_uncorr = list(pairs_corr), list(pairs_uncorr)
    if len(pairs_corr) != len(pairs_uncorr) or len(pairs_corr) < 2:
        raise ParameterError("need at least two matched (correlated, uncorrelated) record pairs")
    sizes = np.asarray(sorted(set(int(s) for s in subset_sizes)))
    per = np.array([[twb_covariance_estimate(pc, pu, s).snr for s in sizes]
                    for pc, pu in zip(pairs_corr, pairs_uncorr)])
    snr = per.mean(axis=0)
    err = per.std(axis=0, ddof=1) / np.sqrt(len(per))
    if np.any(snr <= 0):
        raise ParameterError("non-positive SNR; the signal is not resolved at these subset sizes")
    return CovarianceSNRCurve(sizes, snr, err, fit_power_law(sizes, snr, err),
                              fit_power_law(sizes, snr, err, exponent=0.5))
