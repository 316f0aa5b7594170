"""Seeded synthesis of two demodulated read-out channels.

Samples are produced directly in the demodulated band. Every logical noise
source owns a counter-based Philox stream keyed on (seed, source, index), and
the n-th sample of a stream is a pure function of n, so output does not
depend on how the record is partitioned into blocks or on the worker count.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.special import ndtri

from corrinterf.errors import ParameterError, StateError
from corrinterf.interferometer import SNL_REFERENCE_ASD
from corrinterf.noise_model import QuadratureState

_WORDS_PER_COUNTER = 4
_BLOCK = 1 << 18


class SignalKind(str, enum.Enum):
    TONE = "tone"
    WHITE_NOISE = "white_noise"


class Correlation(str, enum.Enum):
    CORRELATED = "correlated"
    UNCORRELATED = "uncorrelated"
    CHANNEL1_ONLY = "channel1_only"
    CHANNEL2_ONLY = "channel2_only"


# stream identifiers; fixed forever so that seeds keep reproducing old data
_SOURCES = {
    "quantum_shared": 1,
    "quantum_ch1": 2,
    "quantum_ch2": 3,
    "signal_shared": 4,
    "signal_ch1": 5,
    "signal_ch2": 6,
    "tone_phase": 7,
}


@dataclass(frozen=True)
class SignalSpec:
    kind: SignalKind = SignalKind.WHITE_NOISE
    amplitude: float = 0.2
    correlation: Correlation = Correlation.CORRELATED
    tone_frequency: float = 13.55e6
    band: tuple[float, float] = (12.3e6, 13.8e6)
    tone_phase: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SignalKind(self.kind))
        object.__setattr__(self, "correlation", Correlation(self.correlation))
        object.__setattr__(self, "band", tuple(float(b) for b in self.band))
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise ParameterError(f"signal amplitude must be >= 0, got {self.amplitude}")
        if not self.band[0] < self.band[1]:
            raise ParameterError(f"band lower edge must be below upper edge, got {self.band}")

    @classmethod
    def from_displacement(cls, displacement_asd: float, calibration: float = SNL_REFERENCE_ASD, **kw):
        """Signal whose amplitude is given as a displacement ASD in m/sqrt(Hz)."""
        if calibration <= 0:
            raise ParameterError("calibration must be positive")
        return cls(amplitude=displacement_asd / calibration, **kw)


@dataclass(frozen=True)
class AcquisitionSpec:
    sample_rate: float = 500e3
    duration: float = 1.0
    demod_frequency: float = 13.5e6
    lowpass_cutoff: float = 100e3
    seed: int = 0

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ParameterError("sample_rate must be positive")
        if not 0 < self.lowpass_cutoff <= self.sample_rate / 2:
            raise ParameterError("lowpass_cutoff must lie in (0, sample_rate/2]")
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")
        n = self.duration * self.sample_rate
        if not (n >= 1 and abs(n - round(n)) <= 1e-9 * max(1.0, n)):
            raise ParameterError(f"duration*sample_rate must be a positive integer, got {n}")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate))

    @classmethod
    def from_samples(cls, n_samples: int, sample_rate: float = 500e3, **kw) -> "AcquisitionSpec":
        return cls(sample_rate=sample_rate, duration=n_samples / sample_rate, **kw)


@dataclass(frozen=True)
class ChannelPair:
    x1: np.ndarray
    x2: np.ndarray
    sample_rate: float
    calibration: float = SNL_REFERENCE_ASD
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        x1 = np.asarray(self.x1, dtype=float)
        x2 = np.asarray(self.x2, dtype=float)
        if x1.ndim != 1 or x1.shape != x2.shape:
            raise ParameterError("channels must be one-dimensional and of equal length")
        if x1.size == 0:
            raise ParameterError("empty channel pair")
        if not (np.all(np.isfinite(x1)) and np.all(np.isfinite(x2))):
            raise ParameterError("channel data must be finite")
        if not self.calibration > 0:
            raise ParameterError("calibration must be positive")
        if not self.sample_rate > 0:
            raise ParameterError("sample_rate must be positive")
        x1.flags.writeable = False
        x2.flags.writeable = False
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)

    def __len__(self):
        return self.x1.size

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def head(self, n: int) -> "ChannelPair":
        """Prefix of the first ``n`` samples."""
        if not 1 <= n <= len(self):
            raise ParameterError(f"subset size {n} outside 1..{len(self)}")
        return replace(self, x1=self.x1[:n], x2=self.x2[:n])

    def difference(self) -> np.ndarray:
        return self.x1 - self.x2


def _stream_key(seed: int, source: str, index: int = 0) -> np.ndarray:
    ss = np.random.SeedSequence([int(seed), _SOURCES[source], int(index)])
    return ss.generate_state(2, dtype=np.uint64)


def stream_uniforms(key: np.ndarray, start: int, n: int) -> np.ndarray:
    """Uniforms in (0, 1) for positions start..start+n of a keyed stream."""
    counter, offset = divmod(start, _WORDS_PER_COUNTER)
    bg = np.random.Philox(key=key, counter=counter)
    raw = bg.random_raw(offset + n)[offset:]
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def stream_normals(key: np.ndarray, start: int, n: int) -> np.ndarray:
    """Standard normals by inverse CDF, one 64-bit word per sample."""
    return ndtri(stream_uniforms(key, start, n))


def quantum_weights(state: QuadratureState) -> tuple[float, float, float, float]:
    """(shared1, shared2, own1, own2) mixing weights reproducing ``state``.

    x_i = shared_i * s + own_i * n_i with s, n_1, n_2 independent unit normals.
    """
    v1, v2, c = state.var1, state.var2, state.cov12
    if not (v1 > 0 and v2 > 0) or abs(c) > math.sqrt(v1 * v2) * (1 + 1e-12):
        raise StateError("quadrature covariance is not positive semi-definite")
    if c == 0:
        return 0.0, 0.0, math.sqrt(v1), math.sqrt(v2)
    ratio = math.sqrt(v1 / v2)
    a1 = math.sqrt(abs(c) * ratio)
    a2 = math.copysign(math.sqrt(abs(c) / ratio), c)
    b1 = math.sqrt(max(v1 - a1 * a1, 0.0))
    b2 = math.sqrt(max(v2 - a2 * a2, 0.0))
    return a1, a2, b1, b2


def _check_signal(sig: SignalSpec, acq: AcquisitionSpec) -> None:
    if sig.kind is SignalKind.TONE:
        offset = sig.tone_frequency - acq.demod_frequency
        if abs(offset) >= acq.sample_rate / 2:
            raise ParameterError(
                f"tone at {sig.tone_frequency:g} Hz maps to {offset:g} Hz, outside the "
                f"+-{acq.sample_rate / 2:g} Hz Nyquist band"
            )
    else:
        lo = acq.demod_frequency - acq.sample_rate / 2
        hi = acq.demod_frequency + acq.sample_rate / 2
        if sig.band[0] > lo or sig.band[1] < hi:
            raise ParameterError(
                f"noise band {sig.band} does not cover the demodulated window [{lo:g}, {hi:g}] Hz; "
                "only sources flat across the acquisition band are supported"
            )


def _tone_phase(sig: SignalSpec, seed: int, index: int) -> float:
    if sig.tone_phase is not None:
        return float(sig.tone_phase)
    u = stream_uniforms(_stream_key(seed, "tone_phase", index), 0, 1)[0]
    return float(2 * math.pi * u)


def _render_block(state, signals, acq, start, n, out1, out2):
    seed = acq.seed
    a1, a2, b1, b2 = quantum_weights(state)
    x1 = np.zeros(n)
    x2 = np.zeros(n)
    if a1 != 0 or a2 != 0:
        s = stream_normals(_stream_key(seed, "quantum_shared"), start, n)
        x1 += a1 * s
        x2 += a2 * s
    x1 += b1 * stream_normals(_stream_key(seed, "quantum_ch1"), start, n)
    x2 += b2 * stream_normals(_stream_key(seed, "quantum_ch2"), start, n)

    t = None
    for i, sig in enumerate(signals):
        if sig.amplitude == 0:
            continue
        to1 = sig.correlation in (Correlation.CORRELATED, Correlation.UNCORRELATED, Correlation.CHANNEL1_ONLY)
        to2 = sig.correlation in (Correlation.CORRELATED, Correlation.UNCORRELATED, Correlation.CHANNEL2_ONLY)
        if sig.kind is SignalKind.TONE:
            if t is None:
                t = np.arange(start, start + n) / acq.sample_rate
            wave = sig.amplitude * np.sin(
                2 * math.pi * (sig.tone_frequency - acq.demod_frequency) * t + _tone_phase(sig, seed, i)
            )
            if to1:
                x1 += wave
            if to2:
                x2 += wave
        elif sig.correlation is Correlation.CORRELATED:
            w = sig.amplitude * stream_normals(_stream_key(seed, "signal_shared", i), start, n)
            x1 += w
            x2 += w
        else:
            if to1:
                x1 += sig.amplitude * stream_normals(_stream_key(seed, "signal_ch1", i), start, n)
            if to2:
                x2 += sig.amplitude * stream_normals(_stream_key(seed, "signal_ch2", i), start, n)
    out1[start:start + n] = x1
    out2[start:start + n] = x2


def fingerprint(payload) -> str:
    text = json.dumps(payload, sort_keys=True, default=_jsonable)
    return hashlib.sha256(text.encode()).hexdigest()


def _jsonable(obj):
    if isinstance(obj, enum.Enum):
        return obj.value
    if hasattr(obj, "__dataclass_fields__"):
        return asdict(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not serialisable: {type(obj)!r}")


def generate(state: QuadratureState, signals=(), acq: AcquisitionSpec | None = None,
             calibration: float = SNL_REFERENCE_ASD, jobs: int = 1, block_size: int = _BLOCK) -> ChannelPair:
    """Synthesise a synchronised two-channel record.

    Each channel is the sum of photon noise drawn from ``state`` and the
    requested artificial signals, in SNL-normalised units. The result is
    bit-identical for identical inputs regardless of ``jobs`` and
    ``block_size``.
    """
    acq = acq or AcquisitionSpec()
    signals = tuple(signals)
    quantum_weights(state)
    for sig in signals:
        _check_signal(sig, acq)
    if block_size < 1:
        raise ParameterError("block_size must be positive")

    n = acq.n_samples
    x1 = np.empty(n)
    x2 = np.empty(n)
    starts = range(0, n, block_size)
    work = [(s, min(block_size, n - s)) for s in starts]
    if jobs > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(lambda w: _render_block(state, signals, acq, w[0], w[1], x1, x2), work))
    else:
        for s, m in work:
            _render_block(state, signals, acq, s, m, x1, x2)

    provenance = {
        "config": state.config.value,
        "state": {"var1": state.var1, "var2": state.var2, "cov12": state.cov12},
        "signals": [asdict(s) for s in signals],
        "acquisition": asdict(acq),
        "seed": int(acq.seed),
    }
    provenance["fingerprint"] = fingerprint(provenance)
    return ChannelPair(x1, x2, acq.sample_rate, calibration, provenance)


def derive_seed(parent: int, index: int) -> int:
    return int(np.random.SeedSequence([int(parent), int(index)]).generate_state(1, dtype=np.uint64)[0])


def split_runs(acq: AcquisitionSpec, n_runs: int) -> list[AcquisitionSpec]:
    """Independent-run specs sharing everything with ``acq`` except the seed."""
    if n_runs < 1:
        raise ParameterError("n_runs must be >= 1")
    seeds = [derive_seed(acq.seed, i) for i in range(n_runs)]
    if len(set(seeds)) != n_runs:  # pragma: no cover - 64-bit hash collision
        raise RuntimeError("derived seed collision")
    return [replace(acq, seed=s) for s in seeds]
