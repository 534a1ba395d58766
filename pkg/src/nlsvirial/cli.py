"""Command-line interface: solve, sweep, verify, estimate-t.

Exit codes: 0 success, 1 numerical failure, 2 no ground state,
3 verdict failure, 64 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .errors import DomainError, NumericalFailure
from .grid import RadialGrid, write_profile
from .model import Kind, Nonlinearity, verify_scalar_inequalities
from .solver import DEFAULT_GRID, SolveParams, Status, estimate_threshold, ground_state
from .sweep import (SWEEP_GRID, SweepRecord, all_checks, default_gammas, default_sigma, records_to_csv,
                    records_to_json, run_sweep, summary_json)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_NO_GROUND_STATE = 2
EXIT_VERDICT = 3
EXIT_USAGE = 64

NL_NAMES = {"sqrt": Kind.SQUARE_ROOT, "saturable": Kind.SATURABLE, "power": Kind.POWER_LAW}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs; None means "use the command's default"."""

    nl: str = "saturable"
    p: float | None = None
    gamma: float | None = None
    gamma_range: str | None = None
    rmax: float | None = None
    n: int | None = None
    dt: float = 0.05
    tol: float = 1e-8
    max_iters: int = 200_000
    out: str = "out"
    workers: int | None = None
    format: str | None = None
    samples: int = 100_000
    s_max: float = 1e6
    sigma: float | None = None
    first_order_tol: float = 0.05

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None:
                lines.append(f"{f.name} = {v!r}" if isinstance(v, float) else f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "RunConfig":
        return cls().updated(parse_config_text(text, source))

    def updated(self, values: dict) -> "RunConfig":
        conv = {}
        for key, raw in values.items():
            conv[key] = _convert(key, raw)
        cfg = replace(self, **conv)
        cfg.validate()
        return cfg

    def validate(self):
        if self.nl not in NL_NAMES:
            raise UsageError(f"nl: expected one of {sorted(NL_NAMES)}, got {self.nl!r}")
        if self.nl == "power" and self.p is None:
            raise UsageError("p: required for the power nonlinearity")
        if self.nl != "power" and self.p is not None:
            raise UsageError("p: only valid with nl = power")
        if self.gamma is not None and not (math.isfinite(self.gamma) and self.gamma > 0):
            raise UsageError(f"gamma: must be > 0, got {self.gamma!r}")
        if self.format not in (None, "json", "csv"):
            raise UsageError(f"format: expected json or csv, got {self.format!r}")
        for key in ("rmax", "dt", "tol", "s_max", "first_order_tol", "sigma"):
            v = getattr(self, key)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise UsageError(f"{key}: must be > 0, got {v!r}")
        for key in ("n", "max_iters", "workers", "samples"):
            v = getattr(self, key)
            if v is not None and v < 1:
                raise UsageError(f"{key}: must be >= 1, got {v!r}")
        if self.gamma_range is not None:
            parse_gamma_range(self.gamma_range)

    def nonlinearity(self) -> Nonlinearity:
        try:
            return Nonlinearity(NL_NAMES[self.nl], self.p)
        except DomainError as exc:
            raise UsageError(f"p: {exc}") from exc

    def grid(self, default: RadialGrid) -> RadialGrid:
        try:
            return RadialGrid(self.rmax if self.rmax is not None else default.r_max,
                              self.n if self.n is not None else default.n)
        except DomainError as exc:
            raise UsageError(f"rmax/n: {exc}") from exc

    def params(self) -> SolveParams:
        try:
            return SolveParams(dt=self.dt, tol=self.tol, max_iters=self.max_iters)
        except DomainError as exc:
            raise UsageError(f"dt/tol/max_iters: {exc}") from exc


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, raw):
    if key not in _TYPES:
        raise UsageError(f"unknown configuration key {key!r}")
    if raw is None or not isinstance(raw, str):
        return raw
    t = _TYPES[key]
    try:
        if "float" in t:
            return float(raw)
        if "int" in t:
            return int(raw)
    except ValueError as exc:
        raise UsageError(f"{key}: cannot parse {raw!r}") from exc
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{source}:{lineno}: expected key = value, got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise UsageError(f"{source}:{lineno}: unknown configuration key {key!r}")
        out[key] = val
    return out


def parse_gamma_range(text: str) -> list[float]:
    """``lo:hi:count`` to ``count`` log-spaced values."""
    try:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError as exc:
        raise UsageError(f"gamma_range: expected lo:hi:count, got {text!r}") from exc
    if count < 1 or not (0 < lo <= hi) or not math.isfinite(hi) or (count > 1 and lo == hi):
        raise UsageError(f"gamma_range: empty or invalid range {text!r}")
    if count == 1:
        return [lo]
    return [float(x) for x in np.geomspace(lo, hi, count)]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--nl", choices=sorted(NL_NAMES))
    common.add_argument("--p", type=float)
    common.add_argument("--gamma", type=float)
    common.add_argument("--gamma-range", dest="gamma_range", metavar="LO:HI:COUNT")
    common.add_argument("--rmax", type=float)
    common.add_argument("--n", type=int)
    common.add_argument("--dt", type=float)
    common.add_argument("--tol", type=float)
    common.add_argument("--max-iters", dest="max_iters", type=int)
    common.add_argument("--out")
    common.add_argument("--workers", type=int)
    common.add_argument("--format", choices=["json", "csv"])
    common.add_argument("--samples", type=int)
    common.add_argument("--s-max", dest="s_max", type=float)
    common.add_argument("--sigma", type=float)
    common.add_argument("--first-order-tol", dest="first_order_tol", type=float)

    parser = _Parser(prog="nlsvirial", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("solve", parents=[common], help="compute one ground state")
    sub.add_parser("sweep", parents=[common], help="sweep Gamma and check the asymptotics")
    sub.add_parser("verify", parents=[common], help="scalar inequalities and thresholds")
    sub.add_parser("estimate-t", parents=[common], help="estimate the existence threshold")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise UsageError(f"config: cannot read {args.config!r}: {exc}") from exc
        cfg = cfg.updated(parse_config_text(text, args.config))
    flags = {k: v for k, v in vars(args).items()
             if k not in ("config", "command") and v is not None}
    return cfg.updated(flags)


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_solve(cfg: RunConfig) -> int:
    if cfg.gamma is None:
        raise UsageError("gamma: solve needs a single --gamma")
    nl = cfg.nonlinearity()
    if not nl.subcritical:
        raise UsageError(f"p: ground states need 1 < p < 3, got {nl.p}")
    rep = ground_state(nl, cfg.gamma, cfg.grid(DEFAULT_GRID), cfg.params())
    out = Path(cfg.out)
    if (cfg.format or "json") == "json":
        _write(out / "solve_report.json", rep.to_json())
    else:
        d = rep.diagnostics
        rec = SweepRecord(rep.gamma, rep.e_gamma, rep.lambda_, d.ratio, d.pohozaev_rel,
                          d.pde_residual, rep.iters, rep.status.value)
        _write(out / "solve_report.csv", records_to_csv([rec]))
    out.mkdir(parents=True, exist_ok=True)
    write_profile(out / "profile.txt", rep.profile)
    print(f"{rep.status.value}: Gamma={rep.gamma:g} e={rep.e_gamma:.12g} "
          f"lambda={rep.lambda_:.12g} ratio={rep.diagnostics.ratio:.9g} iters={rep.iters}")
    if rep.status is Status.CONVERGED:
        return EXIT_OK
    if rep.status is Status.NO_GROUND_STATE:
        return EXIT_NO_GROUND_STATE
    return EXIT_FAILURE


def _print_verdicts(verdicts):
    width = max(len(v.name) for v in verdicts)
    for v in verdicts:
        print(f"  {v.status:<12} {v.name:<{width}}  {v.detail}")


def cmd_sweep(cfg: RunConfig) -> int:
    nl = cfg.nonlinearity()
    if nl.kind is Kind.POWER_LAW:
        raise UsageError("nl: sweep checks are defined for sqrt and saturable only")
    gammas = parse_gamma_range(cfg.gamma_range) if cfg.gamma_range else default_gammas()
    if cfg.gamma is not None and cfg.gamma_range is None:
        gammas = [cfg.gamma]
    workers = cfg.workers or os.cpu_count() or 1
    params = cfg.params()
    T_hat = estimate_threshold(nl, DEFAULT_GRID, params).T_hat
    records = run_sweep(nl, gammas, cfg.grid(SWEEP_GRID), params, workers=workers)
    sigma = cfg.sigma if cfg.sigma is not None else default_sigma(nl)
    out = Path(cfg.out)
    if (cfg.format or "csv") == "csv":
        _write(out / "sweep.csv", records_to_csv(records))
    else:
        _write(out / "sweep.json", records_to_json(records))
    conv = [r for r in records if r.converged]
    _write(out / "second_order.dat",
           "".join(f"{math.log(r.gamma):.17g} {r.e_gamma + 0.5 * r.gamma:.17g}\n" for r in conv))
    try:
        verdicts, fit = all_checks(records, T_hat, sigma, cfg.first_order_tol)
    except (DomainError, ValueError) as exc:
        print(f"checks could not run: {exc}", file=sys.stderr)
        return EXIT_VERDICT
    _write(out / "verdicts.json", summary_json(nl, T_hat, verdicts, fit))
    print(f"{nl.label()}: {len(records)} Gamma values, {len(conv)} converged, "
          f"T_hat={T_hat:.10g}, slope={fit.slope:.6g}")
    _print_verdicts(verdicts)
    return EXIT_OK if all(v.passed for v in verdicts) else EXIT_VERDICT


def cmd_verify(cfg: RunConfig, restrict: bool) -> int:
    kinds = [NL_NAMES[cfg.nl]] if restrict else [Kind.SQUARE_ROOT, Kind.SATURABLE]
    if Kind.POWER_LAW in kinds:
        raise UsageError("nl: verify covers sqrt and saturable")
    grid = cfg.grid(DEFAULT_GRID)
    ok = True
    doc = {}
    for kind in kinds:
        nl = Nonlinearity(kind)
        try:
            rep = verify_scalar_inequalities(nl, cfg.s_max, cfg.samples)
        except DomainError as exc:
            raise UsageError(f"samples/s_max: {exc}") from exc
        est = estimate_threshold(nl, grid, cfg.params())
        print(f"{nl.label()}  T_hat = {est.T_hat:.10g}")
        rows = rep.summary_rows()
        width = max(len(r[0]) for r in rows)
        for name, npar, passed, margin in rows:
            print(f"  {'PASS' if passed else 'FAIL':<5} {name:<{width}}  "
                  f"params={npar:<3d} min margin={margin:.3e}")
        ok = ok and rep.passed
        doc[kind.value] = {
            "T_hat": est.T_hat,
            "families": [{"family": n, "n_params": k, "passed": p, "min_margin": m}
                         for n, k, p, m in rows],
        }
    out = Path(cfg.out)
    if (cfg.format or "json") == "json":
        _write(out / "verify.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        lines = ["kind,family,n_params,passed,min_margin"]
        for k, d in doc.items():
            lines += [f"{k},{f['family']},{f['n_params']},{f['passed']},{f['min_margin']:.17g}"
                      for f in d["families"]]
        _write(out / "verify.csv", "\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_VERDICT


def cmd_estimate_t(cfg: RunConfig) -> int:
    nl = cfg.nonlinearity()
    if nl.kind is Kind.POWER_LAW:
        raise UsageError("nl: the threshold exists for sqrt and saturable only")
    est = estimate_threshold(nl, cfg.grid(DEFAULT_GRID), cfg.params())
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_profile(out / "threshold_profile.txt", est.trial)
    doc = {"nonlinearity": nl.kind.value, "T_hat": est.T_hat, "iters": est.iters,
           "restarts": est.restarts, "grid": est.trial.grid.describe()}
    _write(out / "threshold.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"{nl.label()}  T_hat = {est.T_hat:.12g}  ({est.iters} iterations)")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, restrict=args.nl is not None)
        return cmd_estimate_t(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
