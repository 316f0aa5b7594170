"""Recycling-mirror reflectivity and internal loss from fringe scans, plus efficiency budgets."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from corrinterf.errors import FitError, ParameterError
from corrinterf.interferometer import NOMINAL, InterferometerParams, antisym_power, recycling_gain
from corrinterf.noise_model import db_to_variance

FRINGE_COLUMNS = ("phase_rad", "gain", "gain_sigma", "p_as_w", "p_as_sigma")


@dataclass(frozen=True)
class FringeDataset:
    darm_phases: np.ndarray
    gains: np.ndarray
    gain_sigma: np.ndarray
    p_as: np.ndarray
    p_as_sigma: np.ndarray

    def __post_init__(self):
        arrays = [np.asarray(getattr(self, f), dtype=float) for f in self.__dataclass_fields__]
        n = arrays[0].size
        if any(a.shape != (n,) for a in arrays):
            raise ParameterError("fringe dataset columns must be 1-D and of equal length")
        if n < 3:
            raise ParameterError("need at least 3 fringe points to fit 2 parameters")
        if np.any(arrays[2] <= 0) or np.any(arrays[4] <= 0):
            raise ParameterError("uncertainties must be positive")
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise ParameterError("fringe data must be finite")
        for f, a in zip(self.__dataclass_fields__, arrays):
            object.__setattr__(self, f, a)

    def __len__(self):
        return self.darm_phases.size

    @classmethod
    def from_csv(cls, path) -> "FringeDataset":
        with open(path, newline="") as fh:
            rows = [r for r in csv.DictReader(line for line in fh if not line.startswith("#"))]
        missing = [c for c in FRINGE_COLUMNS if rows and c not in rows[0]]
        if not rows or missing:
            raise ParameterError(f"{path}: expected columns {FRINGE_COLUMNS}, missing {missing}")
        cols = {c: np.array([float(r[c]) for r in rows]) for c in FRINGE_COLUMNS}
        return cls(cols["phase_rad"], cols["gain"], cols["gain_sigma"], cols["p_as_w"], cols["p_as_sigma"])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(FRINGE_COLUMNS)
            for row in zip(self.darm_phases, self.gains, self.gain_sigma, self.p_as, self.p_as_sigma):
                w.writerow([repr(float(v)) for v in row])


def synthesize_fringe(phases, params: InterferometerParams = NOMINAL, rel_noise: float = 0.01,
                      seed: int | None = 0) -> FringeDataset:
    """Fringe scan generated by the fringe model with multiplicative Gaussian noise."""
    phases = np.asarray(phases, dtype=float)
    g = recycling_gain(phases, params)
    p = antisym_power(phases, params)
    rng = np.random.default_rng(seed)
    if rel_noise > 0:
        g_obs = g * (1 + rel_noise * rng.standard_normal(g.shape))
        p_obs = p * (1 + rel_noise * rng.standard_normal(p.shape))
        g_sig, p_sig = rel_noise * g, rel_noise * p
    else:
        g_obs, p_obs = g, p
        g_sig, p_sig = np.full_like(g, 1e-3 * g.mean()), np.full_like(p, 1e-3 * p.mean())
    # the dark fringe has P_AS = 0; give it the scan's typical absolute error
    p_sig = np.where(p_sig > 0, p_sig, max(rel_noise, 1e-3) * p.mean())
    return FringeDataset(phases, g_obs, g_sig, p_obs, p_sig)


@dataclass(frozen=True)
class LossFit:
    prm_reflectivity: float
    prm_reflectivity_err: float
    internal_loss: float
    internal_loss_err: float
    chi2: float
    dof: int
    covariance: np.ndarray
    n_iterations: int

    @property
    def reduced_chi2(self) -> float:
        return self.chi2 / self.dof if self.dof > 0 else float("nan")

    @property
    def efficiency(self) -> float:
        return efficiency_budget(self.prm_reflectivity, self.internal_loss)[0]

    def to_dict(self) -> dict:
        return {
            "prm_reflectivity": self.prm_reflectivity,
            "prm_reflectivity_err": self.prm_reflectivity_err,
            "internal_loss": self.internal_loss,
            "internal_loss_err": self.internal_loss_err,
            "chi2": self.chi2,
            "dof": self.dof,
            "reduced_chi2": self.reduced_chi2,
            "efficiency": self.efficiency,
            "covariance": self.covariance.tolist(),
            "n_function_evals": self.n_iterations,
        }


def fit_losses(data: FringeDataset, fixed: InterferometerParams = NOMINAL, start=(0.9, 0.2),
               max_nfev: int = 200) -> LossFit:
    """Joint weighted least-squares fit of (R_prm, L_d) to gain and P_AS scans.

    Everything else in ``fixed`` (input power, end-mirror reflectivity) is
    held constant. Uncertainties are the square roots of the diagonal of
    (J^T J)^-1 with residuals weighted by the stated per-point errors.
    """
    if np.ptp(np.mod(data.darm_phases, 2 * np.pi)) == 0:
        raise FitError("degenerate fringe scan: every point has the same DARM phase")

    def residuals(theta):
        p = fixed.with_(prm_reflectivity=theta[0], internal_loss=theta[1])
        rg = (recycling_gain(data.darm_phases, p) - data.gains) / data.gain_sigma
        rp = (antisym_power(data.darm_phases, p) - data.p_as) / data.p_as_sigma
        return np.concatenate([rg, rp])

    lower = (1e-9, 0.0)
    upper = (1.0, 1.0 - 1e-9)
    x0 = np.clip(np.asarray(start, dtype=float), lower, upper)
    res = least_squares(residuals, x0, bounds=(lower, upper), method="trf", xtol=1e-10, ftol=1e-15,
                        gtol=1e-15, max_nfev=max_nfev, x_scale="jac")
    if res.status == 0:
        raise FitError(f"loss fit did not converge within {max_nfev} evaluations")
    jtj = res.jac.T @ res.jac
    try:
        cov = np.linalg.inv(jtj)
    except np.linalg.LinAlgError as exc:
        raise FitError("fit Jacobian is singular; the scan does not identify both parameters") from exc
    chi2 = float(np.sum(res.fun**2))
    return LossFit(float(res.x[0]), float(math.sqrt(cov[0, 0])), float(res.x[1]), float(math.sqrt(cov[1, 1])),
                   chi2, 2 * len(data) - 2, cov, int(res.nfev))


def efficiency_budget(prm_reflectivity: float, internal_loss: float, extra_losses=()) -> tuple[float, float]:
    """(overall efficiency, loss fraction) for a chain of losses."""
    if not 0 < prm_reflectivity <= 1:
        raise ParameterError("prm_reflectivity must be in (0, 1]")
    losses = [internal_loss, *extra_losses]
    if any(not 0 <= x <= 1 for x in losses):
        raise ParameterError("losses must lie in [0, 1]")
    eta = prm_reflectivity * float(np.prod([1 - x for x in losses]))
    return eta, 1 - eta


def squeezing_implied_loss(db_in: float, db_out: float) -> float:
    """Loss fraction that degrades ``db_in`` of squeezing to ``db_out``."""
    if db_out < 0 or db_in < db_out:
        raise ParameterError(f"need db_in >= db_out >= 0, got {db_in}, {db_out}")
    if db_in == 0:
        return 0.0
    eta = (1 - db_to_variance(db_out)) / (1 - db_to_variance(db_in))
    return 1 - eta
