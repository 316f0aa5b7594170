from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from corrinterf.errors import FitError, ParameterError


@dataclass(frozen=True)
class ScalingFit:
    """Power law y = prefactor * x**exponent fitted in log-log space."""

    exponent: float
    prefactor: float
    covariance: np.ndarray  # of (exponent, ln prefactor)
    n_points: int
    fixed_exponent: bool = False

    @property
    def exponent_err(self) -> float:
        return float(np.sqrt(self.covariance[0, 0]))

    @property
    def prefactor_err(self) -> float:
        return float(self.prefactor * np.sqrt(self.covariance[1, 1]))

    def __call__(self, x):
        return self.prefactor * np.asarray(x, dtype=float) ** self.exponent

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "exponent_err": self.exponent_err,
            "prefactor": self.prefactor,
            "prefactor_err": self.prefactor_err,
            "n_points": self.n_points,
            "fixed_exponent": self.fixed_exponent,
        }


def fit_power_law(x, y, sigma=None, exponent: float | None = None, min_points: int = 2) -> ScalingFit:
    """Weighted linear regression of ln y on ln x.

    With ``sigma`` the parameter covariance uses the stated uncertainties
    (propagated to log space as sigma/y); without it, the covariance is
    scaled by the residual variance. Passing ``exponent`` fixes the slope and
    fits the prefactor alone.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ParameterError("x and y must be 1-D arrays of equal length")
    if len(np.unique(x)) < min_points:
        raise ParameterError(f"need at least {min_points} distinct abscissae, got {len(np.unique(x))}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise FitError("power-law fit needs strictly positive data")
    lx, ly = np.log(x), np.log(y)
    if sigma is None:
        w = np.ones_like(ly)
    else:
        s = np.asarray(sigma, dtype=float) / y
        if np.any(s <= 0) or not np.all(np.isfinite(s)):
            raise ParameterError("sigma must be positive and finite")
        w = 1 / s**2

    if exponent is not None:
        resid_target = ly - exponent * lx
        ln_c = np.sum(w * resid_target) / np.sum(w)
        var_lnc = 1 / np.sum(w)
        dof = len(x) - 1
        if sigma is None:
            r = resid_target - ln_c
            var_lnc *= np.sum(r**2) / max(dof, 1) if dof > 0 else 1.0
        cov = np.array([[0.0, 0.0], [0.0, var_lnc]])
        return ScalingFit(float(exponent), float(np.exp(ln_c)), cov, len(x), fixed_exponent=True)

    a = np.column_stack([lx, np.ones_like(lx)])
    aw = a * w[:, None]
    normal = a.T @ aw
    params = np.linalg.solve(normal, aw.T @ ly)
    cov = np.linalg.inv(normal)
    if sigma is None:
        dof = len(x) - 2
        if dof <= 0:
            raise FitError("unweighted fit needs more points than parameters")
        r = ly - a @ params
        cov = cov * (np.sum(r**2) / dof)
    if not np.all(np.isfinite(cov)):
        raise FitError("singular fit covariance")
    return ScalingFit(float(params[0]), float(np.exp(params[1])), cov, len(x))
