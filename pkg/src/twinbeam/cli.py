"""Command-line front end: sweeps, Monte-Carlo verification and figure presets.

Settings come from, in increasing precedence, :data:`DEFAULTS`, an optional
``key = value`` config file (``--config``) and command-line flags. Every
command writes CSV: one header row, one record per grid point, floats in
shortest round-trip form.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable

import numpy as np

from . import mc
from .estimators import FIXED_EXPOSURE, FIXED_SQUEEZING, PROTOCOLS, Protocol, uncertainty_point
from .model import ModelParams, subtracted_tmsv
from .stats import detected_statistics

STATS_HEADER = ["lam", "beta", "m", "eta", "mean", "var", "cov", "fano", "sigma"]
UNCERTAINTY_HEADER = ["gamma", "m", "beta", "lam", "eta", "diff", "opt", "ratio",
                      "snl_diff", "snl_direct", "uql"]
MC_HEADER = ["m", "beta", "lam", "eta", "gamma", "quantity", "analytic", "empirical",
             "se", "z", "pass"]

# key: (default, help)
DEFAULTS = {
    "protocol": (FIXED_SQUEEZING, "fixed_squeezing or fixed_exposure (lam is then the target mean)"),
    "lam": (0.05, "mean photons per mode (uncertainty, mc-verify)"),
    "lam_start": (0.01, "first lam of the stats sweep"),
    "lam_stop": (2.0, "last lam of the stats sweep"),
    "lam_points": (50, "number of lam points"),
    "beta": ("1.0", "comma-separated beta values"),
    "eta": (0.98, "detection efficiency"),
    "eta_start": (0.3, "first eta of an efficiency sweep"),
    "eta_stop": (1.0, "last eta of an efficiency sweep"),
    "eta_points": (36, "number of eta points"),
    "m": ("0,1,2", "comma-separated subtracted photon numbers"),
    "sweep": ("gamma", "uncertainty sweep axis: gamma or eta"),
    "gamma": (0.01, "absorption for eta sweeps and mc-verify"),
    "gamma_start": (0.0, "first gamma"),
    "gamma_stop": (1.0, "last gamma"),
    "gamma_points": (101, "number of gamma points"),
    "n_shots": (10**6, "Monte-Carlo shots"),
    "n_batches": (100, "Monte-Carlo batches"),
    "seed": (0, "Monte-Carlo seed (unsigned 64-bit)"),
    "analytic_scale": (1.0, "multiply analytic values in mc-verify (harness self-test)"),
    "out": ("-", "output file, '-' for stdout; a directory for reproduce"),
}


class UsageError(ValueError):
    pass


def _float_list(s) -> list[float]:
    if isinstance(s, (int, float)):
        return [float(s)]
    return [float(v) for v in str(s).split(",") if v.strip()]


def _int_list(s) -> list[int]:
    if isinstance(s, int):
        return [s]
    out = []
    for v in str(s).split(","):
        if v.strip():
            f = float(v)
            if f != int(f):
                raise UsageError(f"m: {v!r} is not an integer")
            out.append(int(f))
    return out


@dataclass(frozen=True)
class ScenarioConfig:
    protocol: str = FIXED_SQUEEZING
    lam: float = 0.05
    lam_start: float = 0.01
    lam_stop: float = 2.0
    lam_points: int = 50
    beta: tuple = (1.0,)
    eta: float = 0.98
    eta_start: float = 0.3
    eta_stop: float = 1.0
    eta_points: int = 36
    m: tuple = (0, 1, 2)
    sweep: str = "gamma"
    gamma: float = 0.01
    gamma_start: float = 0.0
    gamma_stop: float = 1.0
    gamma_points: int = 101
    n_shots: int = 10**6
    n_batches: int = 100
    seed: int = 0
    analytic_scale: float = 1.0
    out: str = "-"

    def __post_init__(self):
        def bad(name, why):
            raise UsageError(f"{name}: {why} (got {getattr(self, name)!r})")

        if self.protocol not in PROTOCOLS:
            bad("protocol", f"must be one of {', '.join(PROTOCOLS)}")
        if self.sweep not in ("gamma", "eta"):
            bad("sweep", "must be gamma or eta")
        if not self.m:
            bad("m", "list must not be empty")
        if any(v < 0 for v in self.m):
            bad("m", "values must be >= 0")
        if not self.beta or any(not 0 <= b <= 1 for b in self.beta):
            bad("beta", "values must lie in [0, 1]")
        for name in ("lam", "lam_start", "lam_stop"):
            if not getattr(self, name) > 0:
                bad(name, "must be > 0")
        if self.lam_stop < self.lam_start:
            bad("lam_stop", "must be >= lam_start")
        for name in ("eta", "eta_start", "eta_stop"):
            if not 0 < getattr(self, name) <= 1:
                bad(name, "must lie in (0, 1]")
        if self.eta_stop < self.eta_start:
            bad("eta_stop", "must be >= eta_start")
        for name in ("gamma", "gamma_start", "gamma_stop"):
            if not 0 <= getattr(self, name) <= 1:
                bad(name, "must lie in [0, 1]")
        if self.gamma_stop < self.gamma_start:
            bad("gamma_stop", "must be >= gamma_start")
        for name in ("lam_points", "eta_points", "gamma_points", "n_shots", "n_batches"):
            if getattr(self, name) < 1:
                bad(name, "must be >= 1")
        if self.n_batches < 2 or self.n_shots % self.n_batches:
            bad("n_batches", "must be >= 2 and divide n_shots")
        if not 0 <= self.seed < 2**64:
            bad("seed", "must be an unsigned 64-bit integer")

    @classmethod
    def from_mapping(cls, values: dict) -> "ScenarioConfig":
        kw = {}
        types = {f.name: f.type for f in fields(cls)}
        for key, val in values.items():
            key = key.replace("-", "_")
            if key not in types:
                raise UsageError(f"{key}: unknown setting")
            try:
                if key == "beta":
                    kw[key] = tuple(_float_list(val))
                elif key == "m":
                    kw[key] = tuple(_int_list(val))
                elif types[key] == "int":
                    f = float(val)
                    if f != int(f):
                        raise ValueError
                    kw[key] = int(f)
                elif types[key] == "float":
                    kw[key] = float(val)
                else:
                    kw[key] = str(val)
            except (TypeError, ValueError):
                raise UsageError(f"{key}: cannot parse {val!r}") from None
        return cls(**kw)

    def lam_grid(self) -> np.ndarray:
        return np.linspace(self.lam_start, self.lam_stop, self.lam_points)

    def gamma_grid(self) -> np.ndarray:
        return np.linspace(self.gamma_start, self.gamma_stop, self.gamma_points)

    def eta_grid(self) -> np.ndarray:
        return np.linspace(self.eta_start, self.eta_stop, self.eta_points)


def read_config_file(path) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key] = val
    return values


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def to_csv(header: list[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _params(cfg: ScenarioConfig, lam: float, beta: float, m: int, eta: float) -> ModelParams:
    if cfg.protocol == FIXED_EXPOSURE:
        return Protocol(FIXED_EXPOSURE, lam, beta, eta).params(m)
    return ModelParams(lam, beta, m, eta)


def cmd_stats(cfg: ScenarioConfig) -> list[list]:
    """Detected statistics before the sample over beta x m x lam.

    Under ``fixed_exposure`` the ``lam`` column is the balanced target mean.
    """
    rows = []
    for beta in cfg.beta:
        for m in cfg.m:
            for lam in cfg.lam_grid():
                st = detected_statistics(_params(cfg, lam, beta, m, cfg.eta))
                rows.append([lam, beta, m, cfg.eta, st.mean_p, st.var_p, st.cov, st.fano, st.sigma])
    return rows


def cmd_uncertainty(cfg: ScenarioConfig) -> list[list]:
    """Estimator uncertainties over beta x m x (gamma or eta)."""
    rows = []
    for beta in cfg.beta:
        for m in cfg.m:
            if cfg.sweep == "gamma":
                params = _params(cfg, cfg.lam, beta, m, cfg.eta)
                points = [(g, params) for g in cfg.gamma_grid()]
            else:
                points = [(cfg.gamma, _params(cfg, cfg.lam, beta, m, eta)) for eta in cfg.eta_grid()]
            for gamma, params in points:
                try:
                    u = uncertainty_point(params, float(gamma))
                except ValueError as exc:
                    raise type(exc)(f"at gamma={gamma}, m={m}, beta={beta}, eta={params.eta}: {exc}") from exc
                rows.append([gamma, m, beta, cfg.lam, params.eta, u.diff, u.opt, u.ratio,
                             u.snl_diff, u.snl_direct, u.uql])
    return rows


def _mc_report(cfg: ScenarioConfig, m: int, beta: float) -> mc.McReport:
    mcc = mc.McConfig(cfg.n_shots, cfg.n_batches, cfg.seed)
    if m == 0:
        M = mc.modes_for_beta(beta)
        return mc.sample_multimode(cfg.lam, M, cfg.eta, cfg.gamma, mcc)
    if beta != 1.0:
        raise mc.UnsupportedConfigError(
            f"unsupported MC configuration: m={m} needs beta=1 (got beta={beta})"
        )
    return mc.sample_from_fock(subtracted_tmsv(cfg.lam, m), cfg.eta, cfg.gamma, mcc)


def cmd_mc_verify(cfg: ScenarioConfig) -> list[list]:
    """Closed forms against Monte-Carlo estimates; ``pass`` is ``|z| <= 3``."""
    if cfg.protocol != FIXED_SQUEEZING:
        raise UsageError("protocol: mc-verify runs at fixed squeezing only")
    rows = []
    for beta in cfg.beta:
        for m in cfg.m:
            rep = _mc_report(cfg, m, beta)
            params = ModelParams(cfg.lam, beta, m, cfg.eta)
            st = detected_statistics(params, cfg.gamma)
            u = uncertainty_point(params, cfg.gamma)
            pairs = [
                ("mean_p", st.mean_p, rep.mean_p), ("mean_r", st.mean_r, rep.mean_r),
                ("var_p", st.var_p, rep.var_p), ("var_r", st.var_r, rep.var_r),
                ("cov", st.cov, rep.cov), ("fano", st.fano, rep.fano),
                ("sigma", st.sigma, rep.sigma),
            ]
            pairs += [(f"spread_{k}", getattr(u, k), v) for k, v in rep.spread.items()]
            for name, analytic, meas in pairs:
                analytic = analytic * cfg.analytic_scale
                z = (meas.value - analytic) / meas.se if meas.se > 0 else float("nan")
                rows.append([m, beta, cfg.lam, cfg.eta, cfg.gamma, name, analytic,
                             meas.value, meas.se, z, bool(abs(z) <= 3.0)])
    return rows


COMMANDS = {
    "stats": (cmd_stats, STATS_HEADER),
    "uncertainty": (cmd_uncertainty, UNCERTAINTY_HEADER),
    "mc-verify": (cmd_mc_verify, MC_HEADER),
}

_PANELS = [("top", 0.05, 1.0), ("middle", 0.05, 0.0), ("bottom", 2.0, 1.0)]

# figure id -> list of (file stem, command, settings)
PRESETS = {
    "fig4": [(f"fig4_{name}", "stats", dict(beta=b, eta=0.98, m="0,1,2", lam_start=0.01,
                                            lam_stop=3.0, lam_points=100))
             for name, b in (("top", 1.0), ("bottom", 0.0))],
    "fig5": [(f"fig5_m{m}", "stats", dict(beta=",".join(fmt(b) for b in np.linspace(0, 1, 11)),
                                          eta=0.98, m=str(m), lam_start=0.01, lam_stop=2.0,
                                          lam_points=40))
             for m in (0, 1, 2)],
    "fig9": [("fig9", "uncertainty", dict(lam=0.05, beta=0.0, eta=0.7, m="0,1,2"))],
    "fig10": [(f"fig10_{name}", "stats", dict(protocol=FIXED_EXPOSURE, beta=b, eta=0.98,
                                              m="0,1,2", lam_start=0.01, lam_stop=3.0,
                                              lam_points=60))
              for name, b in (("top", 1.0), ("bottom", 0.0))],
    "fig11": [(f"fig11_{name}", "uncertainty", dict(protocol=FIXED_EXPOSURE, sweep="eta", gamma=0.5,
                                                    lam=2.0, beta=b, m="0,1,2"))
              for name, b in (("top", 1.0), ("bottom", 0.0))],
    "fig12": [(f"fig12_{name}", "uncertainty", dict(protocol=FIXED_EXPOSURE, sweep="eta", gamma=0.01,
                                                    lam=2.0, beta=b, m="0,1,2"))
              for name, b in (("top", 1.0), ("bottom", 0.0))],
}
for _fig in ("fig6", "fig7", "fig8"):
    PRESETS[_fig] = [(f"{_fig}_{name}", "uncertainty", dict(lam=lam, beta=b, eta=0.98, m="0,1,2"))
                     for name, lam, b in _PANELS]


def cmd_reproduce(fig: str, out_dir) -> list[Path]:
    """Write the CSV files for one figure preset; returns the paths written."""
    if fig not in PRESETS:
        raise UsageError(f"figure: unknown id {fig!r}; valid ids: {', '.join(sorted(PRESETS, key=lambda s: int(s[3:])))}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for stem, command, settings in PRESETS[fig]:
        cfg = ScenarioConfig.from_mapping(settings)
        func, header = COMMANDS[command]
        path = out_dir / f"{stem}.csv"
        path.write_text(to_csv(header, func(cfg)))
        written.append(path)
    return written


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twinbeam", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_settings(p):
        p.add_argument("--config", help="key = value settings file")
        for key, (default, help_) in DEFAULTS.items():
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None,
                           help=f"{help_} (default: {default})")

    for name in COMMANDS:
        add_settings(sub.add_parser(name))
    rp = sub.add_parser("reproduce", help="write CSVs for one figure preset")
    rp.add_argument("figure", help=", ".join(sorted(PRESETS, key=lambda s: int(s[3:]))))
    rp.add_argument("--out", default=".", help="output directory")
    return parser


def _error(code: str, msg: str, status: int) -> int:
    print(f"error: code={code} message={msg.replace(chr(10), ' ')}", file=sys.stderr)
    return status


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "reproduce":
            for path in cmd_reproduce(args.figure, args.out):
                print(path)
            return 0
        values = {k: d for k, (d, _) in DEFAULTS.items()}
        if args.config:
            values.update(read_config_file(args.config))
        values.update({k: v for k, v in vars(args).items()
                       if k in DEFAULTS and v is not None})
        cfg = ScenarioConfig.from_mapping(values)
        func, header = COMMANDS[args.command]
        text = to_csv(header, func(cfg))
    except UsageError as exc:
        return _error("usage", str(exc), 2)
    except mc.UnsupportedConfigError as exc:
        return _error("unsupported", str(exc), 3)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        return _error(type(exc).__name__, str(exc), 1)
    if cfg.out == "-":
        sys.stdout.write(text)
    else:
        Path(cfg.out).write_text(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
