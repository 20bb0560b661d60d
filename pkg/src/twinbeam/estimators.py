"""Absorption-estimator uncertainties, reference limits and the two
comparison protocols (fixed squeezing, fixed per-photon exposure)."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .model import ModelParams, mean_photons, raw_moments
from .stats import apply_loss

log = logging.getLogger(__name__)

FIXED_SQUEEZING = "fixed_squeezing"
FIXED_EXPOSURE = "fixed_exposure"
PROTOCOLS = (FIXED_SQUEEZING, FIXED_EXPOSURE)

GAMMA_TO_0 = "gamma->0"
GAMMA_TO_1 = "gamma->1"

RADICAND_SLACK = 1e-12
LAM_MAX = 20.0


class InconsistentStatisticsError(ValueError):
    """The F/sigma/N_P inputs give a clearly negative variance."""


def _sqrt_radicand(r: float, what: str) -> float:
    if r < 0:
        if r < -RADICAND_SLACK:
            raise InconsistentStatisticsError(f"{what}: negative radicand {r:g}")
        log.debug("%s: clamping radicand %g to 0", what, r)
        r = 0.0
    return math.sqrt(r)


def _check(N_P, gamma):
    if not N_P > 0:
        raise ValueError(f"N_P must be positive, got {N_P!r}")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma!r}")


def delta_gamma_diff(F: float, sigma: float, N_P: float, gamma: float) -> float:
    """Photon-number-difference estimator:
    ``sqrt((gamma^2 (F - 1) + gamma + 2 sigma (1 - gamma)) / N_P)``."""
    _check(N_P, gamma)
    r = gamma**2 * (F - 1.0) + gamma + 2.0 * sigma * (1.0 - gamma)
    return _sqrt_radicand(r, "diff") / math.sqrt(N_P)


def delta_gamma_opt(F: float, sigma: float, N_P: float, gamma: float) -> float:
    """Optimized balanced estimator at its variance-minimizing reference weight:
    ``sqrt((gamma (1 - gamma) + (1 - gamma)^2 sigma (2 - sigma / F)) / N_P)``."""
    _check(N_P, gamma)
    if not F > 0:
        raise ValueError(f"F must be positive, got {F!r}")
    r = gamma * (1.0 - gamma) + (1.0 - gamma) ** 2 * sigma * (2.0 - sigma / F)
    return _sqrt_radicand(r, "opt") / math.sqrt(N_P)


def delta_gamma_ratio(sigma: float, N_P: float, gamma: float) -> float:
    """Ratio estimator ``N'_P / N_R``; depends on correlation only."""
    _check(N_P, gamma)
    r = gamma * (1.0 - gamma) + 2.0 * sigma * (1.0 - gamma) ** 2
    return _sqrt_radicand(r, "ratio") / math.sqrt(N_P)


def snl_diff(N_P: float, gamma: float) -> float:
    """Difference measurement with classical light (F = sigma = 1)."""
    _check(N_P, gamma)
    return math.sqrt((2.0 - gamma) / N_P)


def snl_direct(N_P: float, gamma: float) -> float:
    """Direct one-path imaging with Poissonian light, ``sqrt((1 - gamma) / N_P)``."""
    _check(N_P, gamma)
    return math.sqrt((1.0 - gamma) / N_P)


def uql(N_P: float, gamma: float) -> float:
    _check(N_P, gamma)
    return math.sqrt(gamma * (1.0 - gamma) / N_P)


def _check_asymptote(m, regime):
    if m not in (0, 1, 2):
        raise ValueError(f"no printed asymptote for m={m}")
    if regime not in (GAMMA_TO_0, GAMMA_TO_1):
        raise ValueError(f"regime must be {GAMMA_TO_0!r} or {GAMMA_TO_1!r}")


def asymptotic_diff(m: int, eta: float, lam: float, regime: str) -> float:
    """Low-lam limits of the difference estimator, transcribed as printed."""
    _check_asymptote(m, regime)
    s = math.sqrt(eta * lam)
    if regime == GAMMA_TO_0:
        return [
            math.sqrt(2 * (1 - eta)) / s,
            math.sqrt(1 - eta) / math.sqrt(2 * eta * lam),
            math.sqrt(2 * (1 - eta)) / (3 * s),
        ][m]
    return [1 / s, 1 / (2 * s), 1 / (3 * s)][m]


def asymptotic_opt(m: int, eta: float, lam: float, regime: str, gamma: float | None = None) -> float:
    """Low-lam limits of the optimized estimator; the gamma->1 set needs ``gamma``."""
    _check_asymptote(m, regime)
    s = math.sqrt(eta * lam)
    if regime == GAMMA_TO_0:
        return math.sqrt(1 - eta**2) / ((m + 1) * s)
    if gamma is None:
        raise ValueError("the gamma->1 optimized asymptote is written in terms of gamma")
    return math.sqrt(1 - gamma) / ((m + 1) * s)


def balance_energy(lam_ref: float, m: int, beta: float = 1.0, lam_max: float = LAM_MAX) -> float:
    """Squeezer ``lam`` at which the m-subtracted state carries ``lam_ref`` photons per mode.

    Bisection on the (increasing) pre-detection mean, run down to float
    resolution.
    """
    if not lam_ref > 0:
        raise ValueError(f"lam_ref must be positive, got {lam_ref!r}")
    if m == 0:
        return float(lam_ref)

    def excess(lam):
        return mean_photons(lam, m, beta) - lam_ref

    lo, hi = 1e-12, min(lam_ref, lam_max)
    if excess(lo) > 0:
        raise ValueError(f"lam_ref={lam_ref} below the reachable mean for m={m}")
    while excess(hi) < 0:
        if hi >= lam_max:
            raise ValueError(f"no bracket for lam_ref={lam_ref}, m={m}, beta={beta} below lam={lam_max}")
        hi = min(2.0 * hi, lam_max)
    lam = bisect(excess, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=2000)
    got = mean_photons(lam, m, beta)
    if abs(got - lam_ref) > 1e-9 * lam_ref:
        raise ArithmeticError(f"energy balancing missed: mean {got!r} vs target {lam_ref!r}")
    return float(lam)


@dataclass(frozen=True)
class UncertaintyPoint:
    gamma: float
    diff: float
    opt: float
    ratio: float
    snl_diff: float
    snl_direct: float
    uql: float
    N_P: float
    fano: float
    sigma: float
    lam: float


@dataclass(frozen=True)
class Protocol:
    """How ``lam`` is chosen for an m-subtracted state.

    ``fixed_squeezing`` uses ``lam_ref`` as the squeezer ``lam`` for every m;
    ``fixed_exposure`` rebalances ``lam`` so the pre-sample mean equals ``lam_ref``.
    """

    kind: str
    lam_ref: float
    beta: float = 1.0
    eta: float = 1.0

    def __post_init__(self):
        if self.kind not in PROTOCOLS:
            raise ValueError(f"protocol must be one of {PROTOCOLS}, got {self.kind!r}")
        if not self.lam_ref > 0:
            raise ValueError("lam_ref must be positive")

    def params(self, m: int) -> ModelParams:
        lam = self.lam_ref
        if self.kind == FIXED_EXPOSURE:
            lam = balance_energy(self.lam_ref, m, self.beta)
        return ModelParams(lam, self.beta, m, self.eta)

    def point(self, m: int, gamma: float) -> UncertaintyPoint:
        return uncertainty_point(self.params(m), gamma)


def uncertainty_point(params: ModelParams, gamma: float, protocol: str = FIXED_SQUEEZING) -> UncertaintyPoint:
    """All estimator uncertainties at one absorption value.

    F and sigma are those of the detected beams before the sample
    (transmittance ``eta`` on both arms); the sample enters only through
    ``gamma`` in the error-propagation formulas. Under ``fixed_exposure``,
    ``params.lam`` is read as the target mean and rebalanced first.
    """
    if protocol not in PROTOCOLS:
        raise ValueError(f"protocol must be one of {PROTOCOLS}, got {protocol!r}")
    if protocol == FIXED_EXPOSURE:
        params = Protocol(FIXED_EXPOSURE, params.lam, params.beta, params.eta).params(params.m)
    st = apply_loss(raw_moments(params), params.eta, params.eta)
    F, sigma, N_P = st.fano, st.sigma, st.mean_p
    return UncertaintyPoint(
        gamma=gamma,
        diff=delta_gamma_diff(F, sigma, N_P, gamma),
        opt=delta_gamma_opt(F, sigma, N_P, gamma),
        ratio=delta_gamma_ratio(sigma, N_P, gamma),
        snl_diff=snl_diff(N_P, gamma),
        snl_direct=snl_direct(N_P, gamma),
        uql=uql(N_P, gamma),
        N_P=N_P,
        fano=F,
        sigma=sigma,
        lam=params.lam,
    )
