from corrinterf.analysis.covariance import (
    CovarianceTrace,
    SNRCurve,
    covariance_peak_snr,
    cross_covariance,
    normalized_covariance,
)
from corrinterf.analysis.scaling import ScalingFit, fit_power_law
from corrinterf.analysis.spectral import (
    FloorScaling,
    SpectralEstimate,
    SpectrumKind,
    band_floor,
    clsd,
    cpsd,
    floor_scaling_fit,
    lsd,
    psd,
)
from corrinterf.analysis.subtraction import (
    CovarianceEstimate,
    CovarianceSNRCurve,
    DifferenceTrace,
    twb_covariance_estimate,
    twb_snr_curve,
    twb_snr_ensemble,
    variance_of_difference,
)

__all__ = [
    "CovarianceEstimate",
    "CovarianceSNRCurve",
    "CovarianceTrace",
    "DifferenceTrace",
    "FloorScaling",
    "SNRCurve",
    "ScalingFit",
    "SpectralEstimate",
    "SpectrumKind",
    "band_floor",
    "clsd",
    "covariance_peak_snr",
    "cpsd",
    "cross_covariance",
    "fit_power_law",
    "floor_scaling_fit",
    "lsd",
    "normalized_covariance",
    "psd",
    "twb_covariance_estimate",
    "twb_snr_curve",
    "twb_snr_ensemble",
    "variance_of_difference",
]
