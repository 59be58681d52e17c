"""Command-line front end: ``ridgecert curves|oracle|certify|bayes-df``.

Every command reads an optional JSON config; ``--set key=value`` (value parsed
as JSON when possible), ``--out`` and ``--seed`` override file entries.

Exit codes: 0 ok, 2 usage or config error, 3 property violation, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._util import EstimatorFailure, NumericalFailure
from .batchio import BatchFormatError, read_batch
from .bayes import certify_datafree, estimate_h_df, linear_model
from .bounds import BoundFamily, certify, certify_tv, j_basic, j_datafree, j_improved
from .diagnostic import DegenerateWeights, eigh, estimate_h
from .measures import SobolevBudget
from .oracle import algebraic_spectrum, exact_hellinger2, exact_kl, exponential_spectrum, from_spectrum

EXIT_OK, EXIT_CONFIG, EXIT_PROPERTY, EXIT_NUMERICAL = 0, 2, 3, 4
CHAIN_SLACK = 1e-12


class ConfigError(ValueError):
    pass


class PropertyViolation(RuntimeError):
    pass


def _check_alphas(alphas) -> list[float]:
    if not isinstance(alphas, (list, tuple)) or not alphas:
        raise ConfigError("alphas must be a nonempty list")
    out = []
    for a in alphas:
        if not isinstance(a, (int, float)) or not 0 < a <= 1:
            raise ConfigError(f"alpha {a!r} outside (0, 1]")
        out.append(float(a))
    return out


def _check_positive(name: str, value, integer: bool = False) -> None:
    ok = isinstance(value, int) if integer else isinstance(value, (int, float))
    if isinstance(value, bool) or not ok or not value > 0 or not math.isfinite(value):
        kind = "integer" if integer else "number"
        raise ConfigError(f"{name} must be a positive {kind}, got {value!r}")


def _check_ranks(ranks, d: int) -> list[int]:
    if ranks is None:
        return list(range(d + 1))
    if not isinstance(ranks, list) or not all(isinstance(r, int) and not isinstance(r, bool) for r in ranks):
        raise ConfigError("ranks must be a list of integers")
    bad = [r for r in ranks if not 0 <= r <= d]
    if bad:
        raise ConfigError(f"ranks {bad} outside [0, {d}]")
    return ranks


def _check_families(families) -> list[BoundFamily]:
    try:
        return [BoundFamily(f) for f in families]
    except (ValueError, TypeError):
        names = ", ".join(f.value for f in BoundFamily)
        raise ConfigError(f"families must be drawn from {{{names}}}") from None


@dataclass
class CurvesConfig:
    alphas: list = field(default_factory=lambda: [0.25, 0.5, 0.75, 1.0])
    t_max: float = 20.0
    t_step: float = 0.01
    out: Optional[str] = None
    seed: int = 0

    def validate(self):
        self.alphas = _check_alphas(self.alphas)
        _check_positive("t_max", self.t_max)
        _check_positive("t_step", self.t_step)


@dataclass
class OracleConfig:
    decay: str = "algebraic"
    d: int = 100
    s: float = 2.0
    rho: float = 0.7
    trace: float = 7.0
    out: Optional[str] = None
    seed: int = 0

    def validate(self):
        if self.decay not in ("algebraic", "exponential"):
            raise ConfigError("decay must be 'algebraic' or 'exponential'")
        _check_positive("d", self.d, integer=True)
        _check_positive("trace", self.trace)
        _check_positive("s", self.s)
        if not (isinstance(self.rho, (int, float)) and 0 < self.rho < 1):
            raise ConfigError("rho must lie in (0, 1)")


@dataclass
class CertifyConfig:
    batch: Optional[str] = None
    alphas: list = field(default_factory=lambda: [0.5, 1.0])
    families: list = field(default_factory=lambda: ["basic", "improved"])
    ranks: Optional[list] = None
    c1_sub: float = 1.0
    c2_sub: float = 1.0
    out: Optional[str] = None
    seed: int = 0

    def validate(self):
        if not self.batch:
            raise ConfigError("certify needs a batch file ('batch' key or --batch)")
        self.alphas = _check_alphas(self.alphas)
        _check_families(self.families)
        for name in ("c1_sub", "c2_sub"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not v >= 0:
                raise ConfigError(f"{name} must be a nonnegative number")


@dataclass
class BayesDfConfig:
    a: Optional[list] = None
    a_file: Optional[str] = None
    spectrum: Optional[dict] = None
    noise_var: float = 1.0
    n: int = 1000
    alphas: list = field(default_factory=lambda: [0.5, 0.75, 1.0])
    ranks: Optional[list] = None
    c1_sub: float = 1.0
    c2_sub: float = 1.0
    out: Optional[str] = None
    seed: int = 0

    def validate(self):
        given = sum(x is not None for x in (self.a, self.a_file, self.spectrum))
        if given != 1:
            raise ConfigError("give exactly one of 'a', 'a_file' or 'spectrum'")
        _check_positive("noise_var", self.noise_var)
        _check_positive("n", self.n, integer=True)
        self.alphas = _check_alphas(self.alphas)

    def matrix(self) -> np.ndarray:
        if self.a is not None:
            try:
                a = np.array(self.a, dtype=float)
            except (TypeError, ValueError):
                raise ConfigError("'a' must be a numeric matrix") from None
        elif self.a_file is not None:
            try:
                a = np.loadtxt(self.a_file, delimiter=",", ndmin=2)
            except (OSError, ValueError) as exc:
                raise ConfigError(f"cannot read A from {self.a_file}: {exc}") from None
        else:
            s = dict(self.spectrum)
            cfg = OracleConfig(decay=s.pop("decay", "exponential"), d=s.pop("d", 10), trace=s.pop("trace", 1.0))
            for k in ("s", "rho"):
                if k in s:
                    setattr(cfg, k, s.pop(k))
            basis_seed = s.pop("seed", self.seed)
            if s:
                raise ConfigError(f"unknown spectrum keys: {sorted(s)}")
            cfg.validate()
            a = from_spectrum(_oracle_spectrum(cfg), seed=basis_seed).a
        if a.ndim == 1:
            a = a[None, :]
        if a.ndim != 2 or a.size == 0 or not np.all(np.isfinite(a)):
            raise ConfigError("A must be a finite nonempty 2-D matrix")
        return a


_CONFIGS = {"curves": CurvesConfig, "oracle": OracleConfig, "certify": CertifyConfig, "bayes-df": BayesDfConfig}


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def load_config(command: str, path: Optional[str], overrides: dict):
    cls = _CONFIGS[command]
    values: dict = {}
    if path:
        try:
            with open(path) as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(values, dict):
            raise ConfigError("config file must hold a JSON object")
    values.update(overrides)
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {unknown}")
    cfg = cls(**values)
    if isinstance(cfg.seed, bool) or not isinstance(cfg.seed, int) or cfg.seed < 0:
        raise ConfigError("seed must be a nonnegative integer")
    cfg.validate()
    return cfg


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_csv(path: Optional[str], header: list, rows: list) -> None:
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    finally:
        if path:
            fh.close()


def cmd_curves(cfg: CurvesConfig, log=print) -> int:
    n = int(round(cfg.t_max / cfg.t_step))
    t = np.arange(n + 1) * cfg.t_step
    rows = []
    for a in cfg.alphas:
        jb, ji, jd = j_basic(a, t), j_improved(a, t), j_datafree(a, t)
        rows.extend(zip([a] * t.size, t, jb, ji, jd))
    write_csv(cfg.out, ["alpha", "t", "j_basic", "j_improved", "j_datafree"], rows)
    return EXIT_OK


def _oracle_spectrum(cfg: OracleConfig) -> np.ndarray:
    if cfg.decay == "algebraic":
        return algebraic_spectrum(cfg.d, cfg.s, cfg.trace)
    return exponential_spectrum(cfg.d, cfg.rho, cfg.trace)


def oracle_rows(cfg: OracleConfig) -> list:
    """One row per r: tail, exact and certified Hellinger and KL losses."""
    lam = _oracle_spectrum(cfg)
    p = from_spectrum(lam, basis=np.eye(cfg.d))
    rows = []
    for r in range(cfg.d + 1):
        tail = float(np.sum(lam[r:]))
        h2 = exact_hellinger2(p, r)
        bound_j = 0.25 * float(j_basic(0.5, tail))
        cuitong = 0.25 * tail
        kl = exact_kl(p, r)
        bound_kl = 0.5 * tail
        chain = (
            -CHAIN_SLACK <= h2 <= bound_j + CHAIN_SLACK
            and bound_j <= cuitong + CHAIN_SLACK
            and -CHAIN_SLACK <= kl <= bound_kl + CHAIN_SLACK
        )
        if not chain:
            raise PropertyViolation(f"inequality chain violated at r={r}")
        rows.append((r, tail, h2, bound_j, cuitong, kl, bound_kl))
    return rows


def cmd_oracle(cfg: OracleConfig, log=print) -> int:
    rows = oracle_rows(cfg)
    write_csv(cfg.out, ["r", "tail", "exact_hell2", "bound_j", "bound_cuitong", "exact_kl", "bound_kl"], rows)
    return EXIT_OK


_CERT_HEADER = ["alpha", "family", "r", "c_sub", "tail", "bound", "saturated"]


def _certificate_rows(spec, budget, alphas, families, ranks, datafree=False, log=print) -> list:
    rows = []
    for fam in families:
        alist = [1.0] if fam is BoundFamily.PINSKER_TV else alphas
        for a in alist:
            for r in ranks:
                if datafree:
                    cert = certify_datafree(a, budget, spec, r)
                elif fam is BoundFamily.PINSKER_TV:
                    cert = certify_tv(budget, spec, r)
                else:
                    cert = certify(a, fam, budget, spec, r)
                note = f"  [{'; '.join(cert.notes)}]" if cert.notes else ""
                log(
                    f"certificate alpha={a:g} family={cert.family.value} r={r} tail={cert.tail:.6g} "
                    f"bound={cert.bound:.6g} saturated={str(cert.saturated).lower()}{note}"
                )
                rows.append((a, cert.family.value, r, float(cert.c_sub), cert.tail, cert.bound, cert.saturated))
    return rows


def _log_spectrum(spec, log, label="spectrum") -> None:
    log(f"{label} (d={spec.dim}):")
    for k, lam in enumerate(spec.eigenvalues, start=1):
        log(f"  lambda_{k} = {lam:.10g}")


def cmd_certify(cfg: CertifyConfig, log=print) -> int:
    batch = read_batch(cfg.batch)
    h = estimate_h(batch)
    spec = eigh(h)
    log(f"batch: n={batch.n} d={batch.dim} effective sample size={h.n_eff:.1f}")
    _log_spectrum(spec, log)
    budget = SobolevBudget(cfg.c1_sub, cfg.c2_sub)
    ranks = _check_ranks(cfg.ranks, batch.dim)
    rows = _certificate_rows(spec, budget, cfg.alphas, _check_families(cfg.families), ranks, log=log)
    if cfg.out:
        write_csv(cfg.out, _CERT_HEADER, rows)
    return EXIT_OK


def cmd_bayes_df(cfg: BayesDfConfig, log=print) -> int:
    a = cfg.matrix()
    model = linear_model(a, noise_cov=cfg.noise_var * np.eye(a.shape[0]))
    h = estimate_h_df(model, cfg.n, cfg.seed)
    ata = a.T @ a / cfg.noise_var
    err = float(np.max(np.abs(h.h - ata)))
    tol = 1e-12 * max(1.0, float(np.max(np.abs(ata))))
    log(f"linear model m={a.shape[0]} d={a.shape[1]}: max |H_DF - A^T A / noise_var| = {err:.3g}")
    if err > tol:
        raise PropertyViolation(f"H_DF differs from A^T A by {err:.3g} (> {tol:.3g})")
    spec = eigh(h)
    _log_spectrum(spec, log, "H_DF spectrum")
    ranks = _check_ranks(cfg.ranks, a.shape[1])
    budget = SobolevBudget(cfg.c1_sub, cfg.c2_sub)
    rows = _certificate_rows(spec, budget, cfg.alphas, [BoundFamily.DATA_FREE], ranks, datafree=True, log=log)
    if cfg.out:
        write_csv(cfg.out, _CERT_HEADER, rows)
    return EXIT_OK


_COMMANDS = {"curves": cmd_curves, "oracle": cmd_oracle, "certify": cmd_certify, "bayes-df": cmd_bayes_df}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ridgecert", description="Certified ridge dimension reduction.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="CSV output path (stdout for curves/oracle when omitted)")
        p.add_argument("--seed", type=int)
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
        if name == "certify":
            p.add_argument("--batch", help="gradient batch file (CSV or RCGB binary)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    err = lambda msg: print(f"ridgecert: {msg}", file=sys.stderr)
    try:
        overrides = {}
        for item in args.set:
            key, sep, raw = item.partition("=")
            if not sep or not key:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            overrides[key.strip()] = _parse_value(raw)
        for key in ("out", "seed", "batch"):
            v = getattr(args, key, None)
            if v is not None:
                overrides[key] = v
        cfg = load_config(args.command, args.config, overrides)
        return _COMMANDS[args.command](cfg)
    except (ConfigError, BatchFormatError, FileNotFoundError, TypeError) as exc:
        err(exc)
        return EXIT_CONFIG
    except PropertyViolation as exc:
        err(f"property violation: {exc}")
        return EXIT_PROPERTY
    except (DegenerateWeights, NumericalFailure, EstimatorFailure, FloatingPointError) as exc:
        err(f"numerical failure: {exc}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
