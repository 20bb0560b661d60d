"""Truncated two-mode Fock-space engine.

States are dense ``(cutoff + 1, cutoff + 1)`` complex grids indexed by the
joint photon numbers ``(n1, n2)``. Every operation returns a new state; the
underlying arrays are marked read-only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TAIL_TOL = 1e-12
HARD_MAX_CUTOFF = 512
# every moment expression applies at most two creations per mode
MOMENT_CUTOFF_MARGIN = 4

ANNIHILATE = "annihilate"
CREATE = "create"


class TruncationError(RuntimeError):
    """Raised when a state cannot be represented below the hard cutoff."""


class NotNormalizedError(ValueError):
    pass


@dataclass(frozen=True)
class RawMoments:
    """Raw joint photon-number moments of a two-mode state."""

    mean1: float
    mean2: float
    second1: float
    second2: float
    cross: float

    @property
    def var1(self) -> float:
        return self.second1 - self.mean1**2

    @property
    def var2(self) -> float:
        return self.second2 - self.mean2**2

    @property
    def cov(self) -> float:
        return self.cross - self.mean1 * self.mean2


@dataclass(frozen=True)
class ModeOpTerm:
    """``coefficient * a_mode`` or ``coefficient * a_mode^dagger``."""

    mode: int
    kind: str
    coefficient: complex = 1.0

    def __post_init__(self):
        if self.mode not in (1, 2):
            raise ValueError(f"mode must be 1 or 2, got {self.mode!r}")
        if self.kind not in (ANNIHILATE, CREATE):
            raise ValueError(f"kind must be {ANNIHILATE!r} or {CREATE!r}, got {self.kind!r}")
        if not np.isfinite(complex(self.coefficient)):
            raise ValueError("coefficient must be finite")

    def adjoint(self) -> "ModeOpTerm":
        kind = CREATE if self.kind == ANNIHILATE else ANNIHILATE
        return ModeOpTerm(self.mode, kind, complex(self.coefficient).conjugate())


def adjoint_terms(terms: Iterable[ModeOpTerm]) -> list[ModeOpTerm]:
    return [t.adjoint() for t in terms]


@dataclass(frozen=True, eq=False)
class FockState:
    """Two-mode pure state on a truncated grid.

    ``overflow`` is set when a creation operator pushed amplitude past the top
    index and that amplitude was dropped.
    """

    amplitudes: np.ndarray
    normalized: bool = False
    overflow: bool = False
    converged: bool = field(default=False, compare=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.ndim != 2 or amps.shape[0] != amps.shape[1] or amps.shape[0] < 1:
            raise ValueError(f"amplitudes must be a square 2-D grid, got shape {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        if self.normalized and abs(self.norm_squared() - 1.0) > 1e-12:
            raise NotNormalizedError(
                f"state flagged normalized but has squared norm {self.norm_squared():.16g}"
            )

    @property
    def cutoff(self) -> int:
        return self.amplitudes.shape[0] - 1

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def tail_mass(self, width: int = 1) -> float:
        """Squared magnitude on indices with ``n1`` or ``n2`` in the top ``width`` rows."""
        p = self.probabilities()
        lo = max(self.cutoff + 1 - width, 0)
        edge = p[lo:, :].sum() + p[:lo, lo:].sum()
        return float(edge)

    def normalize(self) -> "FockState":
        n2 = self.norm_squared()
        if n2 == 0.0:
            raise ValueError("cannot normalize the zero state")
        return FockState(self.amplitudes / math.sqrt(n2), normalized=True,
                         overflow=self.overflow, converged=self.converged)

    def with_cutoff(self, cutoff: int) -> "FockState":
        """Zero-pad, or truncate when the dropped amplitudes are exactly zero."""
        if cutoff < 0:
            raise ValueError("cutoff must be non-negative")
        if cutoff >= self.cutoff:
            amps = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
            amps[: self.cutoff + 1, : self.cutoff + 1] = self.amplitudes
        else:
            if np.any(self.amplitudes[cutoff + 1:, :]) or np.any(self.amplitudes[:, cutoff + 1:]):
                raise TruncationError(f"cannot shrink to cutoff {cutoff}: non-zero amplitudes dropped")
            amps = self.amplitudes[: cutoff + 1, : cutoff + 1]
        return FockState(amps, normalized=self.normalized, overflow=self.overflow,
                         converged=self.converged)

    def is_diagonal(self, atol: float = 1e-14) -> bool:
        off = self.amplitudes - np.diag(np.diag(self.amplitudes))
        return bool(np.all(np.abs(off) < atol))


def basis_state(n1: int, n2: int, cutoff: int | None = None) -> FockState:
    if cutoff is None:
        cutoff = max(n1, n2)
    if not (0 <= n1 <= cutoff and 0 <= n2 <= cutoff):
        raise ValueError(f"|{n1},{n2}> does not fit cutoff {cutoff}")
    amps = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    amps[n1, n2] = 1.0
    return FockState(amps, normalized=True)


def vacuum(cutoff: int = 0) -> FockState:
    return basis_state(0, 0, cutoff)


def zero_state(cutoff: int) -> FockState:
    return FockState(np.zeros((cutoff + 1, cutoff + 1), dtype=complex))


def schmidt_ratio(lam: float) -> float:
    """``x = lam / (1 + lam)``, so that the per-mode mean of the TMSV is ``lam``."""
    return lam / (1.0 + lam)


def initial_cutoff(lam: float, m: int = 0) -> int:
    return max(8, math.ceil(10 * lam) + 4 * m)


def tmsv_amplitudes(lam: float, cutoff: int) -> np.ndarray:
    """Unrenormalized Schmidt coefficients ``sqrt(1-x) x^(n/2)`` for ``n <= cutoff``."""
    x = schmidt_ratio(lam)
    n = np.arange(cutoff + 1)
    with np.errstate(divide="ignore"):
        c = math.sqrt(1.0 - x) * np.where(n == 0, 1.0, x ** (n / 2.0))
    return c


def tmsv_state(lam: float, tail_tol: float = DEFAULT_TAIL_TOL,
               max_cutoff: int = HARD_MAX_CUTOFF) -> FockState:
    """Two-mode squeezed vacuum with per-mode mean ``lam``.

    The cutoff starts at ``max(8, ceil(10 lam))`` and doubles until the mass
    on the top index is below ``tail_tol``. Exceeding ``max_cutoff`` raises
    :class:`TruncationError`.
    """
    if not lam >= 0 or not np.isfinite(lam):
        raise ValueError(f"lam must be a finite non-negative number, got {lam!r}")
    if not 0.0 < tail_tol < 1.0:
        raise ValueError("tail_tol must lie in (0, 1)")
    cutoff = initial_cutoff(lam)
    while True:
        if cutoff > max_cutoff:
            raise TruncationError(
                f"TMSV with lam={lam} needs cutoff > {max_cutoff} for tail_tol={tail_tol}"
            )
        c = tmsv_amplitudes(lam, cutoff)
        if c[-1] ** 2 < tail_tol:
            break
        cutoff *= 2
    c = c / np.sqrt(np.sum(c**2))
    return FockState(np.diag(c.astype(complex)), normalized=True, converged=True)


def apply_ladder(state: FockState, term: ModeOpTerm) -> FockState:
    """Apply one (scaled) ladder operator; the result is unnormalized."""
    if state.cutoff < 1:
        raise ValueError("ladder operators need cutoff >= 1")
    psi = state.amplitudes
    if term.mode == 2:
        psi = psi.T
    k = psi.shape[0]
    out = np.zeros_like(psi)
    overflow = state.overflow
    if term.kind == ANNIHILATE:
        # a|n> = sqrt(n)|n-1>
        out[:-1, :] = np.sqrt(np.arange(1, k))[:, None] * psi[1:, :]
    else:
        # a^dag|n> = sqrt(n+1)|n+1>
        out[1:, :] = np.sqrt(np.arange(1, k))[:, None] * psi[:-1, :]
        overflow = overflow or bool(np.any(psi[-1, :]))
    if term.mode == 2:
        out = out.T
    return FockState(complex(term.coefficient) * out, overflow=overflow)


def apply_op_sum(state: FockState, terms: Sequence[ModeOpTerm]) -> FockState:
    """Apply the linear combination ``sum(terms)`` to ``state``."""
    if not terms:
        return FockState(np.zeros_like(state.amplitudes), overflow=state.overflow)
    acc = np.zeros_like(state.amplitudes)
    overflow = state.overflow
    for t in terms:
        r = apply_ladder(state, t)
        acc = acc + r.amplitudes
        overflow = overflow or r.overflow
    return FockState(acc, overflow=overflow)


def inner(a: FockState, b: FockState) -> complex:
    """``<a|b>``, conjugate-linear in the first argument."""
    cutoff = max(a.cutoff, b.cutoff)
    if a.cutoff != cutoff:
        a = a.with_cutoff(cutoff)
    if b.cutoff != cutoff:
        b = b.with_cutoff(cutoff)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def number_moments(state: FockState, atol: float = 1e-10) -> RawMoments:
    """Raw moments <n1>, <n2>, <n1^2>, <n2^2>, <n1 n2> of a normalized state."""
    norm2 = state.norm_squared()
    if abs(norm2 - 1.0) > atol:
        raise NotNormalizedError(f"number_moments needs a normalized state (|psi|^2={norm2:.16g})")
    p = state.probabilities() / norm2
    n = np.arange(state.cutoff + 1, dtype=float)
    p1 = p.sum(axis=1)
    p2 = p.sum(axis=0)
    return RawMoments(
        mean1=float(n @ p1),
        mean2=float(n @ p2),
        second1=float((n**2) @ p1),
        second2=float((n**2) @ p2),
        cross=float(n @ p @ n),
    )
