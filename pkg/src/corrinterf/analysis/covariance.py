"""Time-domain cross-covariance, normalised covariance and SNR-versus-samples curves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from corrinterf.analysis.scaling import ScalingFit, fit_power_law
from corrinterf.errors import ParameterError
from corrinterf.generator import ChannelPair


@dataclass(frozen=True)
class CovarianceTrace:
    lags: np.ndarray  # seconds
    rho: np.ndarray
    n_samples: int
    lag_samples: np.ndarray

    def peak(self) -> float:
        return float(self.rho[self.lag_samples == 0][0])

    def floor(self, exclude: int = 3) -> float:
        """Mean |rho| over lags more than ``exclude`` samples away from zero."""
        mask = np.abs(self.lag_samples) > exclude
        if not mask.any():
            raise ParameterError(f"no lags beyond +-{exclude} samples to estimate a floor")
        return float(self.rho[mask].mean())


def cross_covariance(x1, x2, max_lag: int) -> tuple[np.ndarray, np.ndarray]:
    """Sample covariance of x1(t) and x2(t + tau) for tau = -max_lag..max_lag.

    Lag zero uses the unbiased 1/(N-1) normalisation; other lags use 1/N over
    the overlapping samples, which keeps the lag sequence a valid
    (positive-definite) autocovariance-style estimate.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    n = x1.size
    if n == 0 or x2.size != n:
        raise ParameterError("series must be non-empty and of equal length")
    if not 0 <= max_lag < n:
        raise ParameterError(f"max_lag {max_lag} exceeds the data length {n}")
    a = x1 - x1.mean()
    b = x2 - x2.mean()
    nfft = 1 << int(np.ceil(np.log2(n + max_lag)))
    fa = np.fft.rfft(a, nfft)
    fb = np.fft.rfft(b, nfft)
    circ = np.fft.irfft(np.conj(fa) * fb, nfft)
    # circ[k] = sum_t a[t] b[t + k]; negative lags wrap to the end
    lags = np.arange(-max_lag, max_lag + 1)
    sums = circ[lags % nfft]
    cov = sums / n
    cov[max_lag] = np.dot(a, b) / (n - 1) if n > 1 else 0.0
    return lags, cov


def normalized_covariance(pair: ChannelPair, max_lag: float, snl_var1: float = 1.0,
                          snl_var2: float = 1.0) -> CovarianceTrace:
    """|Cov(x1(t), x2(t + tau))| normalised by the shot-noise variances.

    ``max_lag`` is in seconds and must be below half the record length.
    """
    if snl_var1 <= 0 or snl_var2 <= 0:
        raise ParameterError("SNL variances must be positive")
    if max_lag < 0 or max_lag >= pair.duration / 2:
        raise ParameterError(f"max_lag {max_lag} s must lie in [0, {pair.duration / 2} s)")
    max_lag_samples = int(round(max_lag * pair.sample_rate))
    lags, cov = cross_covariance(pair.x1, pair.x2, max_lag_samples)
    rho = np.abs(cov) / np.sqrt(snl_var1 * snl_var2)
    return CovarianceTrace(lags / pair.sample_rate, rho, len(pair), lags)


@dataclass(frozen=True)
class SNRCurve:
    n_samples: np.ndarray
    snr: np.ndarray  # mean over runs
    snr_err: np.ndarray  # standard error over runs
    per_run: np.ndarray  # shape (runs, sizes)
    fit: ScalingFit
    sqrt_fit: ScalingFit

    def rows(self):
        for n, s, e in zip(self.n_samples, self.snr, self.snr_err):
            yield {"n_samples": int(n), "snr": float(s), "snr_err": float(e)}


def covariance_peak_snr(runs, subset_sizes, floor_lags: int = 200, exclude: int = 3,
                        snl_var1: float = 1.0, snl_var2: float = 1.0) -> SNRCurve:
    """SNR = rho(0) / floor on growing prefix subsets, averaged across runs.

    The floor is the mean |rho| over lags ``exclude < |tau| <= floor_lags``
    samples. Returns the run-averaged curve, a free power-law fit and a fit
    with the exponent pinned to 1/2.
    """
    runs = list(runs)
    if len(runs) < 2:
        raise ParameterError("need at least two runs to estimate uncertainties")
    sizes = np.asarray(sorted(set(int(s) for s in subset_sizes)))
    shortest = min(len(r) for r in runs)
    if sizes.size == 0 or sizes[-1] > shortest or sizes[0] < 2 * floor_lags + 2:
        raise ParameterError(
            f"subset sizes must lie in [{2 * floor_lags + 2}, {shortest}], got {sizes.tolist()}"
        )
    per_run = np.empty((len(runs), sizes.size))
    for i, run in enumerate(runs):
        for j, n in enumerate(sizes):
            sub = run.head(int(n))
            lags, cov = cross_covariance(sub.x1, sub.x2, floor_lags)
            rho = np.abs(cov) / np.sqrt(snl_var1 * snl_var2)
            floor = rho[np.abs(lags) > exclude].mean()
            per_run[i, j] = rho[floor_lags] / floor
    snr = per_run.mean(axis=0)
    err = per_run.std(axis=0, ddof=1) / np.sqrt(len(runs))
    fit = fit_power_law(sizes, snr, err)
    sqrt_fit = fit_power_law(sizes, snr, err, exponent=0.5)
    return SNRCurve(sizes, snr, err, per_run, fit, sqrt_fit)
