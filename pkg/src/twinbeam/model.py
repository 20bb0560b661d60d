"""Twin-beam source model: squeezed vacuum, symmetric photon subtraction and
the beta-parameterized mode transformation

    c1 = a1 sqrt(1 + beta lam) + a2^dag sqrt(lam)
    c2 = a2 sqrt(1 + beta lam) + a1^dag sqrt(lam)

Statistics of the output beams are ``<s| f(c1, c2) |s>`` for an input seed
``|s>``; vacuum gives the plain twin beam, the ``(m+1)``-component seed from
:func:`seed_state` gives the m-photon-subtracted twin beam. For ``beta < 1``
the transformation is not unitary and the moments are evaluated formally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre

from .fock import (
    ANNIHILATE,
    CREATE,
    DEFAULT_TAIL_TOL,
    HARD_MAX_CUTOFF,
    MOMENT_CUTOFF_MARGIN,
    FockState,
    ModeOpTerm,
    RawMoments,
    TruncationError,
    apply_ladder,
    apply_op_sum,
    initial_cutoff,
    inner,
    tmsv_amplitudes,
    tmsv_state,
    vacuum,
)

__all__ = [
    "ModelParams",
    "RawMoments",
    "SubtractionOfVacuumError",
    "c_terms",
    "legendre_norm",
    "mean_photons",
    "model_moments",
    "raw_moments",
    "seed_state",
    "subtracted_norm_squared",
    "subtracted_tmsv",
]


class SubtractionOfVacuumError(ValueError):
    """Photon subtraction requested on the vacuum (``lam == 0``, ``m >= 1``)."""


@dataclass(frozen=True)
class ModelParams:
    """One source/detection configuration.

    lam : mean photons per mode of the squeezer (``sinh(r)**2``)
    beta : modal-averaging parameter, ``1/M`` for ``M`` pooled modes
    m : photons subtracted from each arm
    eta : detection efficiency
    """

    lam: float
    beta: float = 1.0
    m: int = 0
    eta: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lam must be >= 0, got {self.lam!r}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta!r}")
        if int(self.m) != self.m or self.m < 0:
            raise ValueError(f"m must be a non-negative integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta!r}")
        if self.m >= 1 and self.lam == 0:
            raise SubtractionOfVacuumError("photon subtraction from vacuum is undefined (lam=0, m>=1)")

    @property
    def modes(self) -> int | None:
        """``M`` when ``beta == 1/M`` for a positive integer ``M``, else ``None``."""
        if self.beta == 0:
            return None
        M = round(1.0 / self.beta)
        return M if abs(1.0 / self.beta - M) < 1e-9 else None


def _check_subtraction(lam: float, m: int):
    if int(m) != m or m < 0:
        raise ValueError(f"m must be a non-negative integer, got {m!r}")
    if not (np.isfinite(lam) and lam >= 0):
        raise ValueError(f"lam must be >= 0, got {lam!r}")
    if m >= 1 and lam == 0:
        raise SubtractionOfVacuumError("photon subtraction from vacuum is undefined (lam=0, m>=1)")


def subtracted_tmsv(lam: float, m: int, tail_tol: float = DEFAULT_TAIL_TOL,
                    max_cutoff: int = HARD_MAX_CUTOFF) -> FockState:
    """Normalized ``a1^m a2^m S(lam)|0,0>`` built on the Fock grid."""
    _check_subtraction(lam, m)
    if m == 0:
        return tmsv_state(lam, tail_tol, max_cutoff)
    cutoff = initial_cutoff(lam, m)
    a1 = ModeOpTerm(1, ANNIHILATE)
    a2 = ModeOpTerm(2, ANNIHILATE)
    while True:
        if cutoff > max_cutoff:
            raise TruncationError(
                f"subtracted TMSV (lam={lam}, m={m}) needs cutoff > {max_cutoff}"
            )
        psi = FockState(np.diag(tmsv_amplitudes(lam, cutoff).astype(complex)))
        for _ in range(m):
            psi = apply_ladder(apply_ladder(psi, a1), a2)
        # the top m+1 rows hold whatever the truncated TMSV edge fed in
        if psi.tail_mass(m + 1) < tail_tol * psi.norm_squared():
            break
        cutoff *= 2
    out = psi.normalize()
    return FockState(out.amplitudes, normalized=True, converged=True)


def subtracted_norm_squared(lam: float, m: int, tail_tol: float = 1e-16) -> float:
    """Squared norm of the unnormalized ``a1^m a2^m S(lam)|0,0>``, summed on the grid."""
    _check_subtraction(lam, m)
    x = lam / (1.0 + lam)
    cutoff = initial_cutoff(lam, m)
    while True:
        n = np.arange(cutoff + 1)
        weight = np.ones(cutoff + 1)
        for j in range(m):
            weight = weight * np.clip(n - j, 0, None)
        terms = (1.0 - x) * x**n * weight.astype(float) ** 2
        total = terms.sum()
        if terms[-1] < tail_tol * total:
            return float(total)
        cutoff *= 2
        if cutoff > 4 * HARD_MAX_CUTOFF:
            raise TruncationError(f"norm sum for lam={lam}, m={m} did not converge")


def legendre_norm(lam: float, m: int) -> float:
    """``m! (-i sqrt(lam))^m P_m(i sqrt(lam))`` as a real number.

    Note this is *not* the squared norm of the subtracted state under the
    ``lam = sinh(r)**2`` convention (for m=1 it gives ``lam`` while the grid
    sum gives ``lam (1 + 2 lam)``); see :func:`subtracted_norm_squared`.
    """
    if lam < 0 or int(m) != m or m < 0:
        raise ValueError("need lam >= 0 and integer m >= 0")
    m = int(m)
    z = 1j * math.sqrt(lam)
    coeffs = np.zeros(m + 1)
    coeffs[m] = 1.0
    val = math.factorial(m) * (-1j * math.sqrt(lam)) ** m * legendre.legval(z, coeffs)
    if abs(val.imag) > 1e-12 * max(1.0, abs(val.real)):
        raise ArithmeticError(f"Legendre normalization has imaginary part {val.imag:g}")
    return float(val.real)


def c_terms(lam: float, beta: float) -> tuple[list[ModeOpTerm], list[ModeOpTerm]]:
    """Ladder-term expansions of ``c1`` and ``c2``."""
    a = math.sqrt(1.0 + beta * lam)
    b = math.sqrt(lam)
    c1 = [ModeOpTerm(1, ANNIHILATE, a), ModeOpTerm(2, CREATE, b)]
    c2 = [ModeOpTerm(2, ANNIHILATE, a), ModeOpTerm(1, CREATE, b)]
    return c1, c2


def seed_state(lam: float, m: int) -> FockState:
    """Input superposition on ``|k,k>``, ``k <= m``, equivalent to m-photon subtraction.

    Obtained from ``a^m S = S (a cosh r + b^dag sinh r)^m`` applied to both
    modes, i.e. the beta=1 ``c``-operators raised to the m-th power acting on
    vacuum.
    """
    _check_subtraction(lam, m)
    psi = vacuum(max(m, 1))
    c1, c2 = c_terms(lam, 1.0)
    for _ in range(m):
        psi = apply_op_sum(psi, c2)
    for _ in range(m):
        psi = apply_op_sum(psi, c1)
    if psi.overflow:
        raise TruncationError("seed construction overflowed its grid")
    out = psi.normalize()
    if m == 0:
        return vacuum(1)
    return FockState(out.amplitudes, normalized=True, converged=True)


def model_moments(params: ModelParams, seed: FockState) -> RawMoments:
    """Pre-detection moments of ``N_i = c_i^dag c_i`` evaluated on ``seed``."""
    if not seed.normalized:
        raise ValueError("seed must be normalized")
    s = seed.with_cutoff(seed.cutoff + MOMENT_CUTOFF_MARGIN)
    c1, c2 = c_terms(params.lam, params.beta)
    c1_s = apply_op_sum(s, c1)
    c2_s = apply_op_sum(s, c2)
    n1_s = apply_op_sum(c1_s, [t.adjoint() for t in c1])
    n2_s = apply_op_sum(c2_s, [t.adjoint() for t in c2])
    if n1_s.overflow or n2_s.overflow:
        raise TruncationError(
            f"moment evaluation overflowed; cutoff >= {seed.cutoff + MOMENT_CUTOFF_MARGIN + 1} required"
        )
    cross = inner(n1_s, n2_s)
    if abs(cross.imag) > 1e-10 * max(1.0, abs(cross.real)):
        raise ArithmeticError(f"<N1 N2> has imaginary part {cross.imag:g}")
    return RawMoments(
        mean1=c1_s.norm_squared(),
        mean2=c2_s.norm_squared(),
        second1=n1_s.norm_squared(),
        second2=n2_s.norm_squared(),
        cross=float(cross.real),
    )


def raw_moments(params: ModelParams) -> RawMoments:
    """Pre-detection moments for ``params`` through the seed route."""
    return model_moments(params, seed_state(params.lam, params.m))


def mean_photons(lam: float, m: int, beta: float = 1.0) -> float:
    """Pre-detection mean photon number per mode."""
    return raw_moments(ModelParams(lam, beta, m)).mean1
