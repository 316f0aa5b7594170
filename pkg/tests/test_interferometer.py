import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from corrinterf.errors import ParameterError
from corrinterf.interferometer import (
    NOMINAL,
    SNL_REFERENCE_ASD,
    CalibrationInput,
    InterferometerParams,
    antisym_power,
    circulating_power,
    drive_for_displacement,
    operating_point,
    recycling_gain,
    shot_noise_displacement_asd,
    strain_calibration,
)

params = st.builds(
    InterferometerParams,
    prm_reflectivity=st.floats(0.01, 1.0),
    end_mirror_reflectivity=st.floats(0.5, 1.0),
    internal_loss=st.floats(0.0, 0.9),
)
phases = st.floats(-20, 20)


def cavity_oracle(phi, p):
    """Sum the round-trip amplitude series of the recycling cavity directly."""
    r = math.sqrt(p.prm_reflectivity)
    t = math.sqrt(1 - p.prm_reflectivity)
    mich = math.sqrt((1 - p.internal_loss) * p.end_mirror_reflectivity)
    r_m, t_m = mich * math.cos(phi / 2), mich * math.sin(phi / 2)
    circ = sum((r * r_m) ** k for k in range(20_000)) * t
    return circ**2, p.input_power * (circ * t_m) ** 2


def test_gain_bright_port_is_prm_transmission():
    assert recycling_gain(math.pi, NOMINAL) == pytest.approx(1 - NOMINAL.prm_reflectivity, abs=1e-15)


def test_gain_nominal_closed_form():
    p = NOMINAL.with_(end_mirror_reflectivity=0.998)
    expected = 0.09 / (1 - math.sqrt(0.91 * 0.74 * 0.998)) ** 2
    assert recycling_gain(0.0, p) == pytest.approx(expected, rel=1e-12)
    assert recycling_gain(0.0, p) == pytest.approx(2.78, abs=0.01)


def test_gain_lossless_limit():
    p = NOMINAL.with_(internal_loss=0.0, end_mirror_reflectivity=1.0)
    assert recycling_gain(0.0, p) == pytest.approx(0.09 / (1 - math.sqrt(0.91)) ** 2, rel=1e-12)
    assert recycling_gain(0.0, p) == pytest.approx(42.42, abs=0.01)


@pytest.mark.parametrize("phi", [0.0, 0.3, 1.0, 2.5])
@pytest.mark.parametrize("p", [NOMINAL, NOMINAL.with_(internal_loss=0.0, prm_reflectivity=0.5)])
def test_closed_forms_match_cavity_series(phi, p):
    g, p_as = cavity_oracle(phi, p)
    assert recycling_gain(phi, p) == pytest.approx(g, rel=1e-9)
    assert antisym_power(phi, p) == pytest.approx(p_as, rel=1e-9)


def test_gain_decreases_away_from_dark_fringe():
    phi = np.linspace(0, math.pi, 500)
    assert np.all(np.diff(recycling_gain(phi, NOMINAL)) < 0)


def test_dark_fringe_is_dark():
    assert antisym_power(0.0, NOMINAL) == 0.0


def test_nominal_output_power_unreachable():
    # with 26 % internal loss the antisymmetric port never reaches 500 uW
    with pytest.raises(ParameterError, match="unreachable"):
        operating_point(NOMINAL)


def test_operating_point_lossless():
    p = NOMINAL.with_(internal_loss=0.0)
    phi = operating_point(p)
    assert 0 < phi < math.pi / 4
    assert antisym_power(phi, p) == pytest.approx(500e-6, rel=1e-9)


def test_operating_point_reachable_target():
    phi = operating_point(NOMINAL, 100e-6)
    assert antisym_power(phi, NOMINAL) == pytest.approx(100e-6, rel=1e-9)


def test_lossless_bright_port_energy():
    p = NOMINAL.with_(internal_loss=0.0, end_mirror_reflectivity=1.0)
    assert antisym_power(math.pi, p) == pytest.approx(p.input_power * (1 - p.prm_reflectivity))
    assert antisym_power(math.pi, p) <= p.input_power


@given(params, phases)
def test_energy_bound(p, phi):
    assert antisym_power(phi, p) <= p.input_power * (1 + 1e-12)


@given(params, phases)
def test_even_and_periodic(p, phi):
    for f in (recycling_gain, antisym_power):
        v = f(phi, p)
        assert f(-phi, p) == pytest.approx(v, rel=1e-9, abs=1e-300)
        assert f(phi + 2 * math.pi, p) == pytest.approx(v, rel=1e-7, abs=1e-15)


def test_shot_noise_anchor():
    assert shot_noise_displacement_asd(NOMINAL) == pytest.approx(SNL_REFERENCE_ASD)
    assert SNL_REFERENCE_ASD == 6.0e-16


def test_shot_noise_power_scaling():
    four = NOMINAL.with_(input_power=4 * NOMINAL.input_power)
    assert circulating_power(four) == pytest.approx(4 * circulating_power(NOMINAL))
    assert shot_noise_displacement_asd(four) == pytest.approx(3.0e-16)


def test_shot_noise_half_gain():
    # find an R_prm that halves the dark-fringe gain at fixed input power
    from scipy.optimize import brentq

    g0 = recycling_gain(0.0, NOMINAL)
    r = brentq(lambda r: recycling_gain(0.0, NOMINAL.with_(prm_reflectivity=r)) - g0 / 2, 0.01, 0.6)
    half = NOMINAL.with_(prm_reflectivity=r)
    assert shot_noise_displacement_asd(half) == pytest.approx(math.sqrt(2) * SNL_REFERENCE_ASD)


@pytest.mark.parametrize("bad", [dict(input_power=0.0), dict(input_power=-1e-3), dict(prm_reflectivity=0.0),
                                 dict(prm_reflectivity=1.2), dict(internal_loss=1.0), dict(wavelength=0.0)])
def test_invalid_params(bad):
    with pytest.raises(ParameterError):
        NOMINAL.with_(**bad)


def test_strain_calibration_examples():
    assert strain_calibration(CalibrationInput(0.0, 3.0, 10.0)) == 0.0
    assert strain_calibration(CalibrationInput(2.0, 2.0, 1.0), 1064e-9) == pytest.approx(5.32e-7)


def test_strain_calibration_errors():
    with pytest.raises(ParameterError):
        CalibrationInput(1.0, 0.0, 1.0)
    with pytest.raises(ParameterError):
        CalibrationInput(1.0, 1.0, 0.0)
    with pytest.raises(ParameterError):
        CalibrationInput(-1.0, 1.0, 1.0)


def test_drive_for_signal_amplitude():
    cal = drive_for_displacement(SNL_REFERENCE_ASD / 5, v_pi=200.0, bandwidth=100e3)
    assert strain_calibration(cal) == pytest.approx(1.2e-16)


@given(st.floats(0, 100), st.floats(0.1, 500), st.floats(1e-3, 1e7), st.floats(0.1, 10))
def test_strain_calibration_scaling(v_rms, v_pi, bw, k):
    base = strain_calibration(CalibrationInput(v_rms, v_pi, bw))
    assert strain_calibration(CalibrationInput(k * v_rms, v_pi, bw)) == pytest.approx(k * base, rel=1e-12, abs=1e-300)
    assert strain_calibration(CalibrationInput(v_rms, v_pi, k * bw)) == pytest.approx(base / math.sqrt(k), rel=1e-12,
                                                                                       abs=1e-300)
