"""Static fringe model of a power-recycled Michelson interferometer."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from corrinterf.errors import ParameterError

# Displacement-equivalent shot-noise ASD of one interferometer at the nominal
# operating point; all other configurations scale as 1/sqrt(G * P_in).
SNL_REFERENCE_ASD = 6.0e-16  # m / sqrt(Hz)


@dataclass(frozen=True)
class InterferometerParams:
    wavelength: float = 1064e-9
    arm_length: float = 0.92
    input_power: float = 1.5e-3
    prm_reflectivity: float = 0.91
    end_mirror_reflectivity: float = 0.999
    internal_loss: float = 0.26
    darm_offset: float = 0.0
    output_power: float = 500e-6

    def __post_init__(self):
        for name in ("wavelength", "arm_length", "input_power", "output_power"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("prm_reflectivity", "end_mirror_reflectivity"):
            if not 0 < getattr(self, name) <= 1:
                raise ParameterError(f"{name} must be in (0, 1], got {getattr(self, name)}")
        if not 0 <= self.internal_loss < 1:
            raise ParameterError(f"internal_loss must be in [0, 1), got {self.internal_loss}")
        if not math.isfinite(self.darm_offset):
            raise ParameterError("darm_offset must be finite")

    def with_(self, **changes) -> "InterferometerParams":
        return replace(self, **changes)


NOMINAL = InterferometerParams()


def michelson_reflectivity(darm_phase, params: InterferometerParams):
    """Power fraction the Michelson returns towards the recycling mirror."""
    return (1 - params.internal_loss) * params.end_mirror_reflectivity * np.cos(np.asarray(darm_phase) / 2) ** 2


def recycling_gain(darm_phase, params: InterferometerParams = NOMINAL):
    """Circulating-to-input power ratio G(phi) of the recycling cavity."""
    r = params.prm_reflectivity
    rm = michelson_reflectivity(darm_phase, params)
    g = (1 - r) / (1 - np.sqrt(r * rm)) ** 2
    return float(g) if np.ndim(g) == 0 else g


def antisym_power(darm_phase, params: InterferometerParams = NOMINAL):
    """Power leaving the antisymmetric port, in watts."""
    phi = np.asarray(darm_phase, dtype=float)
    p = (
        params.input_power
        * recycling_gain(phi, params)
        * (1 - params.internal_loss)
        * params.end_mirror_reflectivity
        * np.sin(phi / 2) ** 2
    )
    return float(p) if np.ndim(p) == 0 else p


def max_antisym_power(params: InterferometerParams = NOMINAL) -> tuple[float, float]:
    """(phase, power) of the brightest antisymmetric-port point on [0, pi]."""
    res = minimize_scalar(lambda p: -antisym_power(p, params), bounds=(0.0, math.pi), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x), float(-res.fun)


def operating_point(params: InterferometerParams = NOMINAL, target_power: float | None = None) -> float:
    """Smallest DARM phase in (0, pi] at which P_AS reaches ``target_power``.

    Defaults to ``params.output_power``. Raises ParameterError if the fringe
    never gets that bright.
    """
    target = params.output_power if target_power is None else target_power
    if target <= 0:
        raise ParameterError("target power must be positive")
    phi_max, p_max = max_antisym_power(params)
    if p_max < target:
        raise ParameterError(
            f"antisymmetric-port power peaks at {p_max:.4g} W (phi={phi_max:.3f}); "
            f"target {target:.4g} W is unreachable"
        )
    return float(brentq(lambda p: antisym_power(p, params) - target, 0.0, phi_max, xtol=1e-14))


def circulating_power(params: InterferometerParams = NOMINAL) -> float:
    return params.input_power * recycling_gain(params.darm_offset, params)


def shot_noise_displacement_asd(params: InterferometerParams = NOMINAL,
                                reference: InterferometerParams = NOMINAL) -> float:
    """Shot-noise-limited displacement ASD in m/sqrt(Hz).

    Anchored to ``SNL_REFERENCE_ASD`` at ``reference`` and scaled as
    1/sqrt(circulating power).
    """
    if params.input_power <= 0:
        raise ParameterError("input power must be positive")
    p = circulating_power(params)
    if not p > 0:
        raise ParameterError("circulating power must be positive")
    return SNL_REFERENCE_ASD * math.sqrt(circulating_power(reference) / p)


@dataclass(frozen=True)
class CalibrationInput:
    v_rms: float
    v_pi: float
    bandwidth: float

    def __post_init__(self):
        if self.v_rms < 0:
            raise ParameterError("V_rms must be >= 0")
        if not self.v_pi > 0:
            raise ParameterError("V_pi must be positive")
        if not self.bandwidth > 0:
            raise ParameterError("bandwidth must be positive")


def strain_calibration(cal: CalibrationInput, wavelength: float = 1064e-9) -> float:
    """Displacement ASD produced by a phase modulator: (lambda/2)(V_rms/V_pi)/sqrt(BW)."""
    if wavelength <= 0:
        raise ParameterError("wavelength must be positive")
    return wavelength / 2 * (cal.v_rms / cal.v_pi) / math.sqrt(cal.bandwidth)


def drive_for_displacement(displacement_asd: float, v_pi: float, bandwidth: float,
                           wavelength: float = 1064e-9) -> CalibrationInput:
    """Inverse of :func:`strain_calibration` for V_rms."""
    v_rms = displacement_asd * math.sqrt(bandwidth) * v_pi * 2 / wavelength
    return CalibrationInput(v_rms, v_pi, bandwidth)
