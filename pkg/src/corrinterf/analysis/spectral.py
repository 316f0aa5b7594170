"""Segment-averaged PSD, CPSD and CLSD with rectangular, non-overlapping segments.

Densities are normalised to the shot-noise level: a unit-variance white
series has PSD 1 in every bin. Multiplying the square root of a normalised
density by the pair's calibration (m/sqrt(Hz) per unit SNL) gives a
displacement linear spectral density.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import stats

from corrinterf.analysis.scaling import ScalingFit, fit_power_law
from corrinterf.errors import ParameterError
from corrinterf.generator import ChannelPair

DEFAULT_BAND = (0.0, 100e3)


class SpectrumKind(str, enum.Enum):
    PSD = "psd"
    CPSD = "cpsd"
    CLSD = "clsd"
    LSD = "lsd"


@dataclass(frozen=True)
class SpectralEstimate:
    frequencies: np.ndarray
    values: np.ndarray  # complex for CPSD
    n_spectra: int
    kind: SpectrumKind
    sample_rate: float
    segment_length: int
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    calibrated: bool = False

    def band_mask(self, band=DEFAULT_BAND) -> np.ndarray:
        lo, hi = band
        # DC is never part of a noise floor
        return (self.frequencies > max(lo, 0.0)) & (self.frequencies <= hi)

    def at(self, frequency: float) -> complex | float:
        return self.values[int(np.argmin(np.abs(self.frequencies - frequency)))]


def _segments(x, n_spectra: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ParameterError("series must be a non-empty 1-D array")
    if not 1 <= n_spectra <= x.size // 2:
        raise ParameterError(f"n_spectra must lie in [1, {x.size // 2}], got {n_spectra}")
    seg = x.size // n_spectra
    return x[: seg * n_spectra].reshape(n_spectra, seg)


def _spectra(x, n_spectra):
    segs = _segments(x, n_spectra)
    return np.fft.rfft(segs, axis=1), segs.shape[1]


def psd(series, n_spectra: int, sample_rate: float, calibration: float | None = None,
        confidence: float = 0.68) -> SpectralEstimate:
    """Averaged periodogram of one series.

    Without ``calibration`` values are SNL-normalised power; with it they
    are a displacement LSD (m/sqrt(Hz)). Confidence bounds follow the
    chi-square law with 2 * n_spectra degrees of freedom.
    """
    spec, seg = _spectra(series, n_spectra)
    p = (np.abs(spec) ** 2).mean(axis=0) / seg
    freqs = np.fft.rfftfreq(seg, 1 / sample_rate)
    dof = 2 * n_spectra
    alpha = (1 - confidence) / 2
    lower = p * dof / stats.chi2.ppf(1 - alpha, dof)
    upper = p * dof / stats.chi2.ppf(alpha, dof)
    if calibration is None:
        return SpectralEstimate(freqs, p, n_spectra, SpectrumKind.PSD, sample_rate, seg, lower, upper)
    return SpectralEstimate(freqs, calibration * np.sqrt(p), n_spectra, SpectrumKind.LSD, sample_rate, seg,
                            calibration * np.sqrt(lower), calibration * np.sqrt(upper), calibrated=True)


def lsd(pair_or_series, n_spectra: int, sample_rate: float | None = None, channel: int = 1) -> SpectralEstimate:
    """Calibrated single-channel linear spectral density."""
    if isinstance(pair_or_series, ChannelPair):
        x = pair_or_series.x1 if channel == 1 else pair_or_series.x2
        return psd(x, n_spectra, pair_or_series.sample_rate, pair_or_series.calibration)
    if sample_rate is None:
        raise ParameterError("sample_rate is required for a bare series")
    return psd(pair_or_series, n_spectra, sample_rate, 1.0)


def cpsd(pair: ChannelPair, n_spectra: int) -> SpectralEstimate:
    """Segment-averaged complex cross spectrum conj(X1) X2, SNL-normalised."""
    s1, seg = _spectra(pair.x1, n_spectra)
    s2, _ = _spectra(pair.x2, n_spectra)
    c = (np.conj(s1) * s2).mean(axis=0) / seg
    freqs = np.fft.rfftfreq(seg, 1 / pair.sample_rate)
    return SpectralEstimate(freqs, c, n_spectra, SpectrumKind.CPSD, pair.sample_rate, seg)


def clsd(pair: ChannelPair, n_spectra: int, calibrated: bool = True) -> SpectralEstimate:
    """Cross linear spectral density sqrt(|<conj(X1) X2>|).

    Uncorrelated contributions fall as n_spectra**-1/4 while a correlated
    component converges to its own linear spectral density.
    """
    c = cpsd(pair, n_spectra)
    scale = pair.calibration if calibrated else 1.0
    return SpectralEstimate(c.frequencies, scale * np.sqrt(np.abs(c.values)), n_spectra, SpectrumKind.CLSD,
                            pair.sample_rate, c.segment_length, calibrated=calibrated)


def band_floor(est: SpectralEstimate, band=DEFAULT_BAND, method: str = "power") -> tuple[float, float]:
    """Band-averaged level of a spectrum and its standard error.

    ``method="power"`` averages in the power domain: mean PSD, rms |CPSD|,
    and for a CLSD the fourth root of the mean of CLSD**4. These follow the
    n_spectra scaling laws exactly at every n_spectra. ``method="mean"``
    is the plain arithmetic mean of the displayed values.
    """
    mask = est.band_mask(band)
    if not mask.any():
        raise ParameterError(f"no frequency bins inside band {band}")
    v = np.abs(est.values[mask])
    k = v.size
    if method == "mean":
        m = v.mean()
        se = v.std(ddof=1) / np.sqrt(k) if k > 1 else 0.0
        return float(m), float(se)
    if method != "power":
        raise ParameterError(f"unknown floor method {method!r}")
    power = {SpectrumKind.PSD: 1, SpectrumKind.CPSD: 2, SpectrumKind.CLSD: 4, SpectrumKind.LSD: 2}[est.kind]
    q = v**power
    qm = q.mean()
    qse = q.std(ddof=1) / np.sqrt(k) if k > 1 else 0.0
    level = qm ** (1 / power)
    return float(level), float(level * qse / (power * qm)) if qm > 0 else 0.0


@dataclass(frozen=True)
class FloorScaling:
    n_spectra: np.ndarray
    floors: np.ndarray
    floor_errs: np.ndarray
    fit: ScalingFit
    kind: SpectrumKind


def floor_scaling_fit(estimates, band=DEFAULT_BAND, method: str = "power") -> FloorScaling:
    """Log-log fit of band floor against n_spectra (needs >= 4 distinct values)."""
    estimates = sorted(estimates, key=lambda e: e.n_spectra)
    counts = np.array([e.n_spectra for e in estimates], dtype=float)
    if len(np.unique(counts)) < 4:
        raise ParameterError("floor_scaling_fit needs at least 4 distinct n_spectra values")
    if len({e.kind for e in estimates}) != 1:
        raise ParameterError("all estimates must be of the same kind")
    levels = [band_floor(e, band, method) for e in estimates]
    floors = np.array([lv[0] for lv in levels])
    errs = np.array([lv[1] for lv in levels])
    sigma = errs if np.all(errs > 0) else None
    fit = fit_power_law(counts, floors, sigma, min_points=4)
    return FloorScaling(counts, floors, errs, fit, estimates[0].kind)
