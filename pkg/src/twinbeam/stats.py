"""Detected photon statistics: binomial loss on moments, Fano factor and
noise-reduction factor."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .model import ModelParams, RawMoments, raw_moments

POISSON_BAND = 1e-9


@dataclass(frozen=True)
class PhotonStatistics:
    """Means, variances and covariance of the probe (P) and reference (R) counts."""

    mean_p: float
    mean_r: float
    var_p: float
    var_r: float
    cov: float

    @property
    def fano(self) -> float:
        return fano(self)

    @property
    def sigma(self) -> float:
        return nrf(self)


def _check_tau(name, tau):
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {tau!r}")


def apply_loss(raw: RawMoments | PhotonStatistics, tau_p: float, tau_r: float) -> PhotonStatistics:
    """Binomial thinning of both arms with transmittances ``tau_p`` and ``tau_r``.

    mean' = tau mean, var' = tau^2 var + tau (1 - tau) mean, cov' = tau_p tau_r cov.
    Accepts raw moments or already-detected statistics (losses compose).
    """
    _check_tau("tau_p", tau_p)
    _check_tau("tau_r", tau_r)
    if isinstance(raw, PhotonStatistics):
        m1, m2, v1, v2, c = raw.mean_p, raw.mean_r, raw.var_p, raw.var_r, raw.cov
    else:
        m1, m2, v1, v2, c = raw.mean1, raw.mean2, raw.var1, raw.var2, raw.cov
    if not np.all(np.isfinite([m1, m2, v1, v2, c])):
        raise ValueError("moments must be finite")
    return PhotonStatistics(
        mean_p=tau_p * m1,
        mean_r=tau_r * m2,
        var_p=tau_p**2 * v1 + tau_p * (1.0 - tau_p) * m1,
        var_r=tau_r**2 * v2 + tau_r * (1.0 - tau_r) * m2,
        cov=tau_p * tau_r * c,
    )


def fano(stats: PhotonStatistics) -> float:
    """Probe-arm Fano factor ``var_p / mean_p``."""
    if not stats.mean_p > 0:
        raise ZeroDivisionError("Fano factor undefined for zero mean")
    return stats.var_p / stats.mean_p


def nrf(stats: PhotonStatistics) -> float:
    """Noise-reduction factor ``Var(N_P - N_R) / (<N_P> + <N_R>)``."""
    denom = stats.mean_p + stats.mean_r
    if not denom > 0:
        raise ZeroDivisionError("noise-reduction factor undefined for zero means")
    return (stats.var_p + stats.var_r - 2.0 * stats.cov) / denom


def classify(F: float, band: float = POISSON_BAND) -> str:
    """'super', 'poissonian' or 'sub' (Poissonian within ``band`` of 1)."""
    if F > 1.0 + band:
        return "super"
    if F < 1.0 - band:
        return "sub"
    return "poissonian"


def detected_statistics(params: ModelParams, gamma: float = 0.0) -> PhotonStatistics:
    """Statistics at the detectors; the probe passes a sample of absorption ``gamma``."""
    raw = raw_moments(params)
    return apply_loss(raw, params.eta * (1.0 - gamma), params.eta)


def fano_threshold(m: int, beta: float, eta: float, lam_max: float = 50.0,
                   points: int = 200) -> float:
    """Smallest ``lam`` where the detected Fano factor of the m-subtracted state crosses 1.

    Returns ``nan`` when no crossing is found on ``(0, lam_max]``.
    """

    def excess(lam):
        return detected_statistics(ModelParams(lam, beta, m, eta)).fano - 1.0

    grid = np.geomspace(1e-4, lam_max, points)
    vals = [excess(l) for l in grid]
    for lo, hi, vlo, vhi in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if vlo < 0 <= vhi:
            return brentq(excess, lo, hi, xtol=1e-14, rtol=1e-12)
    return math.nan
