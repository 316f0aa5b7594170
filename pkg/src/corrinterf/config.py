"""JSON experiment configuration, validated against a schema and every module's preconditions."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import jsonschema

from corrinterf.errors import ParameterError
from corrinterf.generator import AcquisitionSpec, SignalSpec, _check_signal, quantum_weights
from corrinterf.interferometer import InterferometerParams, shot_noise_displacement_asd
from corrinterf.noise_model import (
    Injection,
    LossBudget,
    QuadratureState,
    SqueezingSpec,
    build_readout_covariance,
    db_to_variance,
)

CONFIG_VERSION = 1

REQUESTS = ("rho", "snr", "clsd", "psd", "psd_subtraction", "variance_of_difference", "twb_covariance")

_number = {"type": "number"}
_pair_or_number = {"oneOf": [_number, {"type": "array", "items": _number, "minItems": 2, "maxItems": 2}]}
_loss = {
    "type": "object",
    "properties": {"prm_reflectivity": _number, "internal_loss": _number, "extra_injection_loss": _number},
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "required": ["version"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": CONFIG_VERSION},
        "name": {"type": "string"},
        "interferometers": {
            "type": "array",
            "minItems": 2,
            "maxItems": 2,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "properties": {f.name: _number for f in fields(InterferometerParams)},
            },
        },
        "noise": {
            "type": "object",
            "required": ["mode"],
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": [m.value for m in Injection]},
                "squeezing_db": _pair_or_number,
                "antisqueezing_db": _pair_or_number,
                "losses": {"oneOf": [_loss, {"type": "array", "items": _loss, "minItems": 2, "maxItems": 2}]},
                "effective_db": _pair_or_number,
                "channel_db": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
            },
        },
        "signals": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "properties": {
                    "kind": {"enum": ["tone", "white_noise"]},
                    "amplitude": _number,
                    "displacement_asd": _number,
                    "correlation": {"enum": ["correlated", "uncorrelated", "channel1_only", "channel2_only"]},
                    "tone_frequency": _number,
                    "band": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
                    "tone_phase": _number,
                },
            },
        },
        "acquisition": {
            "type": "object",
            "additionalProperties": False,
            "properties": {f.name: {"type": "integer"} if f.name == "seed" else _number
                           for f in fields(AcquisitionSpec)},
        },
        "n_runs": {"type": "integer", "minimum": 1},
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "requests": {"type": "array", "items": {"enum": list(REQUESTS)}},
                "max_lag": _number,
                "lags": {"type": "integer", "minimum": 0},
                "n_spectra": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                "band": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
                "subset_sizes": {"type": "array", "items": {"type": "integer", "minimum": 2}},
                "snl_var": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
                "floor_method": {"enum": ["power", "mean"]},
                "floor_exclude": {"type": "integer", "minimum": 0},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"out_dir": {"type": "string"}, "format": {"enum": ["csv", "npz"]}},
        },
    },
}


@dataclass(frozen=True)
class AnalysisSpec:
    requests: tuple[str, ...] = ("rho", "clsd")
    max_lag: float = 2e-4
    lags: int = 50
    n_spectra: tuple[int, ...] = (1, 10, 100, 1000)
    band: tuple[float, float] = (0.0, 100e3)
    subset_sizes: tuple[int, ...] = ()
    snl_var: tuple[float, float] = (1.0, 1.0)
    floor_method: str = "power"
    floor_exclude: int = 3


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict
    interferometers: tuple[InterferometerParams, InterferometerParams]
    state: QuadratureState
    signals: tuple[SignalSpec, ...]
    acquisition: AcquisitionSpec
    n_runs: int
    analysis: AnalysisSpec
    out_dir: Path
    data_format: str = "csv"
    name: str = field(default="experiment")

    @property
    def calibration(self) -> float:
        return shot_noise_displacement_asd(self.interferometers[0])

    @property
    def config_hash(self) -> str:
        return config_hash(self.raw)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        raw = copy.deepcopy(self.raw)
        raw.setdefault("acquisition", {})["seed"] = int(seed)
        return from_dict(raw)


def config_hash(raw: dict) -> str:
    return hashlib.sha256(json.dumps(raw, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def _per_channel(value):
    if isinstance(value, list):
        return value
    return [value, value]


def build_state(noise: dict) -> QuadratureState:
    mode = Injection(noise["mode"])
    if mode is Injection.COHERENT:
        extra = sorted(set(noise) - {"mode"})
        if extra:
            raise ParameterError(f"coherent noise takes no squeezing parameters, got {extra}")
        return QuadratureState.coherent()
    if "channel_db" in noise:
        if mode is not Injection.TWB:
            raise ParameterError("noise.channel_db is only meaningful for twb mode")
        v1, v2 = (db_to_variance(d) for d in noise["channel_db"])
        return QuadratureState.twb_from_channel_variances(v1, v2)
    if "effective_db" in noise:
        eff = noise["effective_db"]
        if mode is Injection.TWB:
            if isinstance(eff, list):
                raise ParameterError("twb effective_db is a single number; use channel_db for asymmetric channels")
            return QuadratureState.twb_from_effective(db_to_variance(eff))
        v1, v2 = (db_to_variance(d) for d in _per_channel(eff))
        return QuadratureState.iss_from_channel_variances(v1, v2)
    if "squeezing_db" not in noise:
        raise ParameterError(f"{mode.value} noise needs squeezing_db, effective_db or channel_db")
    sq_db = _per_channel(noise["squeezing_db"])
    anti = _per_channel(noise.get("antisqueezing_db"))
    squeezing = [SqueezingSpec(s, a) for s, a in zip(sq_db, anti)]
    losses = [LossBudget(**lb) for lb in _per_channel(noise.get("losses", {}))]
    return build_readout_covariance(mode, squeezing, losses)


def _signal(d: dict) -> SignalSpec:
    d = dict(d)
    if "displacement_asd" in d:
        if "amplitude" in d:
            raise ParameterError("give a signal either amplitude or displacement_asd, not both")
        return SignalSpec.from_displacement(d.pop("displacement_asd"), **d)
    return SignalSpec(**d)


def from_dict(raw: dict) -> ExperimentConfig:
    """Validate and build a config. Raises ParameterError with the offending path."""
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ParameterError(f"config {where}: {exc.message}") from None
    raw = copy.deepcopy(raw)
    ifos = tuple(InterferometerParams(**d) for d in raw.get("interferometers", [{}, {}]))
    state = build_state(raw.get("noise", {"mode": "coherent"}))
    quantum_weights(state)
    signals = tuple(_signal(s) for s in raw.get("signals", []))
    acq = AcquisitionSpec(**raw.get("acquisition", {}))
    for sig in signals:
        _check_signal(sig, acq)
    a = raw.get("analysis", {})
    analysis = AnalysisSpec(
        requests=tuple(a.get("requests", AnalysisSpec.requests)),
        max_lag=float(a.get("max_lag", AnalysisSpec.max_lag)),
        lags=int(a.get("lags", AnalysisSpec.lags)),
        n_spectra=tuple(a.get("n_spectra", AnalysisSpec.n_spectra)),
        band=tuple(a.get("band", AnalysisSpec.band)),
        subset_sizes=tuple(a.get("subset_sizes", ())),
        snl_var=tuple(a.get("snl_var", AnalysisSpec.snl_var)),
        floor_method=a.get("floor_method", "power"),
        floor_exclude=int(a.get("floor_exclude", 3)),
    )
    n_runs = int(raw.get("n_runs", 1))
    _check_analysis(analysis, acq, n_runs)
    out = raw.get("output", {})
    shot_noise_displacement_asd(ifos[0])
    return ExperimentConfig(raw, ifos, state, signals, acq, n_runs, analysis, Path(out.get("out_dir", "out")),
                            out.get("format", "csv"), raw.get("name", "experiment"))


def _check_analysis(a: AnalysisSpec, acq: AcquisitionSpec, n_runs: int) -> None:
    n = acq.n_samples
    if not 0 <= a.max_lag < acq.duration / 2:
        raise ParameterError(f"analysis.max_lag {a.max_lag} s must be below half the record ({acq.duration / 2} s)")
    if a.lags > n - 2:
        raise ParameterError(f"analysis.lags {a.lags} exceeds the record length")
    bad = [m for m in a.n_spectra if m > n // 2]
    if bad:
        raise ParameterError(f"analysis.n_spectra {bad} exceed half the sample count {n}")
    if "clsd" in a.requests and len(set(a.n_spectra)) < 4 and len(a.n_spectra) > 1:
        raise ParameterError("a CLSD floor-scaling fit needs at least 4 distinct n_spectra values")
    if a.band[0] >= a.band[1]:
        raise ParameterError("analysis.band must be increasing")
    if any(v <= 0 for v in a.snl_var):
        raise ParameterError("analysis.snl_var must be positive")
    if "snr" in a.requests:
        if n_runs < 2:
            raise ParameterError("the snr request needs n_runs >= 2")
        max_lag_samples = int(round(a.max_lag * acq.sample_rate))
        if not a.subset_sizes:
            raise ParameterError("the snr request needs analysis.subset_sizes")
        if min(a.subset_sizes) < 2 * max_lag_samples + 2 or max(a.subset_sizes) > n:
            raise ParameterError(
                f"analysis.subset_sizes must lie in [{2 * max_lag_samples + 2}, {n}]"
            )
    if "twb_covariance" in a.requests and a.subset_sizes and max(a.subset_sizes) > n // 2:
        raise ParameterError("twb_covariance subset sizes must leave at least two subsets")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path}: invalid JSON ({exc})") from None
    return from_dict(raw)


def default_config() -> dict:
    """Nominal single-run setup: coherent light, 1 s at 500 kS/s, correlated signal at SNL/5."""
    return {
        "version": CONFIG_VERSION,
        "name": "default",
        "noise": {"mode": "coherent"},
        "signals": [{"kind": "white_noise", "amplitude": 0.2, "correlation": "correlated"}],
        "acquisition": {"sample_rate": 500e3, "duration": 1.0, "seed": 0},
        "analysis": {"requests": ["rho", "clsd", "variance_of_difference"]},
        "output": {"out_dir": "out", "format": "csv"},
    }
