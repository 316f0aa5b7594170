"""Parameter sets matched to the reported measurement runs.

The injection levels differ between measurement campaigns (3 dB effective
squeezing for the cross-correlation runs, 2.6 dB for the spectral runs,
2.5 dB for the twin-beam-like runs), so each figure carries its own state.
"""

from __future__ import annotations

import math

from corrinterf.generator import AcquisitionSpec, Correlation, SignalKind, SignalSpec
from corrinterf.interferometer import SNL_REFERENCE_ASD
from corrinterf.noise_model import QuadratureState, db_to_variance

SAMPLE_RATE = 500e3

# correlated stochastic signal, amplitude 1/5 of the shot-noise level
SIGNAL_AMPLITUDE = 0.2
SIGNAL_PLATEAU_ASD = SIGNAL_AMPLITUDE * SNL_REFERENCE_ASD

ISS_CORRELATION_DB = 3.0
ISS_SPECTRAL_DB = 2.6
TWB_EFFECTIVE_DB = 2.5
TWB_CHANNEL_DB = (1.1, 0.8)

# Uncorrelated noise level of the twin-beam runs, inferred from the ~1 dB
# shrink of the -2.5 dB subtraction dip when it is switched on.
TWB_DIP_SHRINK_DB = 1.0
TWB_NOISE_VARIANCE = db_to_variance(TWB_EFFECTIVE_DB) * (10 ** (TWB_DIP_SHRINK_DB / 10) - 1)

# ~20 dB peak-to-floor in a 1000-sample segment (not a reported value)
TONE_AMPLITUDE = 0.63
TONE_FREQUENCY = 13.55e6


def coherent() -> QuadratureState:
    return QuadratureState.coherent()


def iss(db: float) -> QuadratureState:
    return QuadratureState.iss_from_channel_variances(db_to_variance(db))


def twb(db: float = TWB_EFFECTIVE_DB) -> QuadratureState:
    return QuadratureState.twb_from_effective(db_to_variance(db))


def twb_channels(db1: float = TWB_CHANNEL_DB[0], db2: float = TWB_CHANNEL_DB[1]) -> QuadratureState:
    return QuadratureState.twb_from_channel_variances(db_to_variance(db1), db_to_variance(db2))


def correlated_signal(amplitude: float = SIGNAL_AMPLITUDE) -> SignalSpec:
    return SignalSpec(SignalKind.WHITE_NOISE, amplitude, Correlation.CORRELATED)


def uncorrelated_signal(amplitude: float = SIGNAL_AMPLITUDE) -> SignalSpec:
    return SignalSpec(SignalKind.WHITE_NOISE, amplitude, Correlation.UNCORRELATED)


def twb_noise_amplitude() -> float:
    return math.sqrt(TWB_NOISE_VARIANCE)


def tone(amplitude: float = TONE_AMPLITUDE, channel: int = 1, phase: float | None = 0.0) -> SignalSpec:
    corr = Correlation.CHANNEL1_ONLY if channel == 1 else Correlation.CHANNEL2_ONLY
    return SignalSpec(SignalKind.TONE, amplitude, corr, tone_frequency=TONE_FREQUENCY, tone_phase=phase)


def acquisition(n_samples: int, seed: int) -> AcquisitionSpec:
    return AcquisitionSpec.from_samples(n_samples, SAMPLE_RATE, seed=seed)
