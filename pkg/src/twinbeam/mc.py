"""Monte-Carlo photon counting.

Shots are generated in batches; batch ``b`` draws from its own Philox
stream spawned from ``SeedSequence(seed)``, so reports are reproducible and
independent of how batches are scheduled. Per-batch results are integer
sufficient statistics, merged by exact integer summation.

The estimators are built the way an experiment would build them: ``<N_P>``
is calibrated from the reference-arm counts (balanced source), the
optimized estimator's reference weight ``k`` is fitted on one half of the
batches and applied to the other, both ways round, so every batch is scored
out of sample.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .fock import FockState

DIFF, OPT, RATIO = "diff", "opt", "ratio"
ESTIMATORS = (DIFF, OPT, RATIO)
MAX_RATIO_EXCLUSION = 0.01


class UnsupportedConfigError(ValueError):
    """Configuration the sampler does not define a physical law for."""


class Measured(NamedTuple):
    value: float
    se: float


@dataclass(frozen=True)
class McConfig:
    n_shots: int = 10**6
    n_batches: int = 100
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.n_shots < 1 or self.n_batches < 2:
            raise ValueError("need n_shots >= 1 and n_batches >= 2")
        if self.n_shots % self.n_batches:
            raise ValueError("n_shots must be a multiple of n_batches")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def batch_size(self) -> int:
        return self.n_shots // self.n_batches


@dataclass(frozen=True)
class McReport:
    mean_p: Measured
    mean_r: Measured
    var_p: Measured
    var_r: Measured
    cov: Measured
    fano: Measured
    sigma: Measured
    spread: dict[str, Measured]
    ratio_excluded: float
    ratio_flagged: bool
    n_shots: int
    n_batches: int
    seed: int
    k_opt: tuple[float, float]
    extra: dict = field(default_factory=dict)


# columns of the per-batch sufficient statistics
_N, _SP, _SR, _SPP, _SRR, _SPR = range(6)


def _batch_sums(n_p: np.ndarray, n_r: np.ndarray) -> np.ndarray:
    n_p = n_p.astype(np.int64)
    n_r = n_r.astype(np.int64)
    return np.array([n_p.size, n_p.sum(), n_r.sum(), (n_p * n_p).sum(),
                     (n_r * n_r).sum(), (n_p * n_r).sum()], dtype=np.int64)


def _moments(t):
    """mean_p, mean_r, var_p, var_r, cov, fano, sigma from summed sufficient statistics."""
    n = t[..., _N].astype(float)
    mp = t[..., _SP] / n
    mr = t[..., _SR] / n
    vp = (t[..., _SPP] - n * mp**2) / (n - 1)
    vr = (t[..., _SRR] - n * mr**2) / (n - 1)
    c = (t[..., _SPR] - n * mp * mr) / (n - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        F = vp / mp
        s = (vp + vr - 2 * c) / (mp + mr)
    return mp, mr, vp, vr, c, F, s


def _sum_sq_dev(x: np.ndarray) -> float:
    # fsum is correctly rounded, so the result does not depend on batch order
    mean = math.fsum(x) / x.size
    return math.fsum((x - mean) ** 2)


def _jackknife(loo):
    B = loo.shape[0]
    if not np.all(np.isfinite(loo)):
        return math.nan
    return math.sqrt((B - 1) / B * _sum_sq_dev(loo))


def _spread(g: np.ndarray, batch_size: int) -> Measured:
    s = math.sqrt(_sum_sq_dev(g) / (g.size - 1) * batch_size)
    return Measured(s, s / math.sqrt(2 * (g.size - 1)))


def _run(draw: Callable[[np.random.Generator, int], tuple[np.ndarray, np.ndarray]],
         cfg: McConfig) -> McReport:
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.n_batches)
    size = cfg.batch_size

    def one(ss):
        rng = np.random.Generator(np.random.Philox(ss))
        return _batch_sums(*draw(rng, size))

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            sums = np.stack(list(ex.map(one, streams)))
    else:
        sums = np.stack([one(ss) for ss in streams])
    return report_from_batches(sums, cfg)


def report_from_batches(sums: np.ndarray, cfg: McConfig) -> McReport:
    """Assemble a report from an ``(n_batches, 6)`` array of integer batch sums."""
    total = sums.sum(axis=0)
    loo = total[None, :] - sums
    full = _moments(total)
    jack = _moments(loo)
    est = [Measured(float(f), _jackknife(j)) for f, j in zip(full, jack)]

    size = cfg.batch_size
    n_cal = total[_SR] / total[_N]  # calibrated <N_P> from the reference arm
    sp = sums[:, _SP].astype(float)
    sr = sums[:, _SR].astype(float)
    spread = {}
    if n_cal > 0:
        spread[DIFF] = _spread((sr - sp) / (size * n_cal), size)

        # two-fold cross-fitting: k from one half of the batches, applied to the other
        half = np.arange(cfg.n_batches) < cfg.n_batches // 2
        ks = []
        g_opt = np.empty(cfg.n_batches)
        for cal, ev in ((half, ~half), (~half, half)):
            _, _, _, vr_c, c_c, _, _ = _moments(sums[cal].sum(axis=0))
            k = float(c_c / vr_c) if vr_c > 0 else 0.0
            ks.append(k)
            g_opt[ev] = 1.0 - (sp[ev] - k * (sr[ev] - size * n_cal)) / (size * n_cal)
        spread[OPT] = _spread(g_opt, size)
        k = (ks[0], ks[1])
    else:
        k = (math.nan, math.nan)
    ok = sr > 0
    excluded = 1.0 - ok.mean()
    if ok.sum() >= 2:
        spread[RATIO] = _spread(1.0 - sp[ok] / sr[ok], size)
    return McReport(*est, spread=spread, ratio_excluded=float(excluded),
                    ratio_flagged=bool(excluded > MAX_RATIO_EXCLUSION),
                    n_shots=int(total[_N]), n_batches=cfg.n_batches, seed=cfg.seed, k_opt=k)


def _check_channel(eta, gamma):
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta!r}")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma!r}")


def modes_for_beta(beta: float) -> int:
    """``M`` with ``beta == 1/M``; anything else has no multimode sampling law."""
    if not 0.0 < beta <= 1.0:
        raise UnsupportedConfigError(
            f"unsupported MC configuration: beta={beta} is not 1/M; choose an integer number of modes M"
        )
    M = round(1.0 / beta)
    if abs(1.0 / beta - M) > 1e-9:
        raise UnsupportedConfigError(
            f"unsupported MC configuration: 1/beta={1.0 / beta:.6g} is not an integer; choose M and set beta=1/M"
        )
    return M


def sample_multimode(lam: float, M: int, eta: float, gamma: float, cfg: McConfig) -> McReport:
    """Twin beams from ``M`` pooled thermal modes (mean ``lam/M`` each), no subtraction.

    Both arms share the pair number of every shot; the arms are then thinned
    independently with ``eta (1 - gamma)`` (probe) and ``eta`` (reference).
    """
    if int(M) != M or M < 1:
        raise UnsupportedConfigError(f"M must be a positive integer, got {M!r}")
    if not lam >= 0:
        raise ValueError("lam must be non-negative")
    _check_channel(eta, gamma)
    M = int(M)
    tau_p, tau_r = eta * (1.0 - gamma), eta
    # sum of M geometric counts with per-mode mean mu is negative binomial (M, 1/(1+mu))
    p_success = 1.0 / (1.0 + lam / M)

    def draw(rng, size):
        n = rng.negative_binomial(M, p_success, size) if lam > 0 else np.zeros(size, np.int64)
        return rng.binomial(n, tau_p), rng.binomial(n, tau_r)

    rep = _run(draw, cfg)
    rep.extra.update(kind="multimode", lam=lam, M=M, eta=eta, gamma=gamma)
    return rep


def sample_from_fock(state: FockState, eta: float, gamma: float, cfg: McConfig,
                     tail_tol: float = 1e-10) -> McReport:
    """Sample the diagonal joint law ``p(n) = |c_nn|^2`` of ``state``, then thin both arms."""
    _check_channel(eta, gamma)
    if not state.is_diagonal():
        raise UnsupportedConfigError("sample_from_fock needs a state supported on |n,n>")
    if abs(state.norm_squared() - 1.0) > 1e-10:
        raise ValueError("state must be normalized")
    if state.tail_mass() >= tail_tol and state.cutoff > 0:
        raise ValueError(f"state tail mass {state.tail_mass():.3g} exceeds {tail_tol}")
    p = np.abs(np.diag(state.amplitudes)) ** 2
    cdf = np.cumsum(p)
    cdf /= cdf[-1]
    tau_p, tau_r = eta * (1.0 - gamma), eta

    def draw(rng, size):
        n = np.searchsorted(cdf, rng.random(size), side="right")
        n = np.minimum(n, p.size - 1)
        return rng.binomial(n, tau_p), rng.binomial(n, tau_r)

    rep = _run(draw, cfg)
    rep.extra.update(kind="fock", eta=eta, gamma=gamma)
    return rep


def estimator_spread(report: McReport, estimator: str) -> Measured:
    """Empirical per-shot standard deviation of the estimated ``gamma``."""
    if estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {ESTIMATORS}")
    if estimator == RATIO and report.ratio_flagged:
        raise UnsupportedConfigError(
            f"ratio estimator excluded {report.ratio_excluded:.1%} of batches (zero reference counts)"
        )
    return report.spread[estimator]
