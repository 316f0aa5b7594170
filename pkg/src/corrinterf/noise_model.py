"""Two-channel Gaussian quadrature noise for coherent, ISS and TWB-like injection.

All variances are normalised to the shot-noise level (SNL = 1). Only the
detected (amplitude) quadrature of each channel is tracked; the conjugate
quadrature is carried as a diagnostic so that the anti-squeezing of a state
remains inspectable.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from corrinterf.errors import ParameterError, StateError


class Injection(str, enum.Enum):
    COHERENT = "coherent"
    ISS = "iss"
    TWB = "twb"


def db_to_variance(db: float) -> float:
    """Noise reduction in dB (positive = below SNL) to a linear variance."""
    return 10.0 ** (-db / 10.0)


def variance_to_db(variance: float) -> float:
    """Linear variance to dB below SNL (positive when squeezed)."""
    if variance <= 0:
        raise ParameterError(f"variance must be positive, got {variance}")
    return -10.0 * math.log10(variance)


def apply_loss(variance, efficiency):
    """Beam-splitter loss: mix ``1 - efficiency`` of vacuum into ``variance``."""
    eff = np.asarray(efficiency, dtype=float)
    if np.any(eff < 0) or np.any(eff > 1) or np.any(~np.isfinite(eff)):
        raise ParameterError(f"efficiency must lie in [0, 1], got {efficiency}")
    out = eff * variance + (1.0 - eff)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SqueezingSpec:
    squeezing_db: float = 0.0
    antisqueezing_db: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.squeezing_db) or self.squeezing_db < 0:
            raise ParameterError(f"squeezing_db must be >= 0, got {self.squeezing_db}")
        if self.antisqueezing_db is None:
            object.__setattr__(self, "antisqueezing_db", self.squeezing_db)
        if self.antisqueezing_db < self.squeezing_db:
            raise ParameterError(
                "antisqueezing_db must be >= squeezing_db (purity bound), "
                f"got {self.antisqueezing_db} < {self.squeezing_db}"
            )

    @property
    def variance(self) -> float:
        return db_to_variance(self.squeezing_db)

    @property
    def antivariance(self) -> float:
        return db_to_variance(-self.antisqueezing_db)


@dataclass(frozen=True)
class LossBudget:
    prm_reflectivity: float = 1.0
    internal_loss: float = 0.0
    extra_injection_loss: float = 0.0

    def __post_init__(self):
        if not 0 < self.prm_reflectivity <= 1:
            raise ParameterError(f"prm_reflectivity must be in (0, 1], got {self.prm_reflectivity}")
        for name in ("internal_loss", "extra_injection_loss"):
            value = getattr(self, name)
            if not 0 <= value < 1:
                raise ParameterError(f"{name} must be in [0, 1), got {value}")

    @classmethod
    def from_efficiency(cls, efficiency: float) -> "LossBudget":
        """A budget whose overall efficiency equals ``efficiency``."""
        if not 0 < efficiency <= 1:
            raise ParameterError(f"efficiency must be in (0, 1], got {efficiency}")
        return cls(prm_reflectivity=1.0, internal_loss=1.0 - efficiency)

    @property
    def efficiency(self) -> float:
        return self.prm_reflectivity * (1 - self.internal_loss) * (1 - self.extra_injection_loss)


@dataclass(frozen=True)
class QuadratureState:
    """Shot-noise-normalised covariance of the detected quadratures."""

    config: Injection
    var1: float
    var2: float
    cov12: float
    conjugate_var: tuple[float, float] = field(default=(1.0, 1.0), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "config", Injection(self.config))
        if not (self.var1 > 0 and self.var2 > 0):
            raise StateError(f"variances must be positive, got {self.var1}, {self.var2}")
        bound = math.sqrt(self.var1 * self.var2)
        # small slack for round-off when a state sits on the Cauchy-Schwarz boundary
        if abs(self.cov12) > bound * (1 + 1e-12):
            raise StateError(f"|cov12|={abs(self.cov12)} exceeds sqrt(var1*var2)={bound}")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.var1, self.cov12], [self.cov12, self.var2]])

    @property
    def difference_variance(self) -> float:
        """Var(X1 - X2)."""
        return self.var1 + self.var2 - 2 * self.cov12

    @property
    def sum_variance(self) -> float:
        """Var(X1 + X2)."""
        return self.var1 + self.var2 + 2 * self.cov12

    @classmethod
    def coherent(cls) -> "QuadratureState":
        return cls(Injection.COHERENT, 1.0, 1.0, 0.0)

    @classmethod
    def twb_from_channel_variances(cls, var1: float, var2: float) -> "QuadratureState":
        """TWB-like state reproducing given single-channel variances.

        The split-beam covariance is fixed by the channel variances:
        cov12 = sqrt((1 - var1)(1 - var2)).
        """
        if not (0 < var1 <= 1 and 0 < var2 <= 1):
            raise ParameterError("TWB channel variances must lie in (0, 1]")
        return cls(Injection.TWB, var1, var2, math.sqrt((1 - var1) * (1 - var2)))

    @classmethod
    def twb_from_effective(cls, effective_variance: float) -> "QuadratureState":
        """Symmetric TWB-like state whose Var(X1 - X2)/2 equals ``effective_variance``."""
        if not 0 < effective_variance <= 1:
            raise ParameterError("effective variance must lie in (0, 1]")
        var = (effective_variance + 1) / 2
        return cls(Injection.TWB, var, var, (1 - effective_variance) / 2)

    @classmethod
    def iss_from_channel_variances(cls, var1: float, var2: float | None = None) -> "QuadratureState":
        var2 = var1 if var2 is None else var2
        return cls(Injection.ISS, var1, var2, 0.0)


def _pair(value, kind):
    if value is None:
        return (kind(), kind())
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ParameterError("expected one value per channel")
        return tuple(value)
    return (value, value)


def build_readout_covariance(config, squeezing=None, losses=None) -> QuadratureState:
    """Detected-quadrature covariance for one injection configuration.

    Parameters
    ----------
    config : Injection or str
        ``coherent``, ``iss`` or ``twb``.
    squeezing : SqueezingSpec or pair of SqueezingSpec
        Source squeezing before any loss. ISS takes one spec per channel;
        TWB uses the first spec only (a single source is split).
    losses : LossBudget or pair of LossBudget
        Per-channel propagation losses, applied after the 50/50 split for TWB.
    """
    config = Injection(config)
    if config is Injection.COHERENT:
        return QuadratureState.coherent()
    sq = _pair(squeezing, SqueezingSpec)
    eta = [lb.efficiency for lb in _pair(losses, LossBudget)]

    if config is Injection.ISS:
        var = [apply_loss(s.variance, e) for s, e in zip(sq, eta)]
        anti = tuple(apply_loss(s.antivariance, e) for s, e in zip(sq, eta))
        return QuadratureState(Injection.ISS, var[0], var[1], 0.0, anti)

    # TWB: split first (each half sees the source through a 50 % loss), then
    # per-channel loss. Cross term is sqrt(eta1 eta2) (1 - V) / 2 with the
    # demodulation phase set so the difference channel is the squeezed one.
    source = sq[0]
    v, va = source.variance, source.antivariance
    var = [apply_loss((v + 1) / 2, e) for e in eta]
    cov = math.sqrt(eta[0] * eta[1]) * (1 - v) / 2
    anti = tuple(apply_loss((va + 1) / 2, e) for e in eta)
    return QuadratureState(Injection.TWB, var[0], var[1], cov, anti)


def effective_variance(squeezing: SqueezingSpec, efficiency: float) -> float:
    """Loss-degraded squeezed variance seen by the TWB difference channel."""
    return apply_loss(squeezing.variance, efficiency)
