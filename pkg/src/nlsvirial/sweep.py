"""Gamma sweeps and the checks on e_Gamma, lambda_Gamma and the virial ratio."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateInputError, DomainError, NumericalFailure
from .grid import RadialGrid
from .model import Kind, Nonlinearity
from .solver import SolveParams, Status, ground_state
from .verdicts import FAIL, PASS, Verdict

CSV_FIELDS = ("gamma", "e_gamma", "lambda", "ratio", "pohozaev_rel", "pde_residual",
              "iters", "status")
FAILED = "Failed"

# finer than the single-solve default so the integer-pair differences at
# Gamma ~ 1000 resolve; the tail check widens the domain for small Gamma
SWEEP_GRID = RadialGrid(12.0, 8192)


@dataclass(frozen=True)
class SweepRecord:
    gamma: float
    e_gamma: float
    lambda_: float
    ratio: float
    pohozaev_rel: float
    pde_residual: float
    iters: int
    status: str
    nehari_rel: float = float("nan")
    bounds_ok: bool | None = None

    @property
    def converged(self) -> bool:
        return self.status == Status.CONVERGED.value

    def csv_row(self) -> list[str]:
        vals = (self.gamma, self.e_gamma, self.lambda_, self.ratio, self.pohozaev_rel,
                self.pde_residual)
        return [f"{v:.17g}" for v in vals] + [str(self.iters), self.status]


@dataclass(frozen=True)
class AsymptoticsFit:
    """Least-squares fit y = slope ln(Gamma) + intercept, y = e_Gamma + Gamma/2."""

    slope: float
    intercept: float
    r_squared: float
    T_hat: float
    sigma: float
    n_used: int
    gamma_min: float
    gamma_max: float
    verdict: Verdict

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = self.verdict.to_dict()
        return d


def default_gammas() -> list[float]:
    """24 log-spaced values on [5, 5000] plus the pairs 100/101 and 1000/1001."""
    g = set(float(x) for x in np.geomspace(5.0, 5000.0, 24))
    g.update([100.0, 101.0, 1000.0, 1001.0])
    return sorted(g)


def _solve_one(args) -> SweepRecord:
    nl, G, grid, params = args
    try:
        rep = ground_state(nl, G, grid, params)
    except (NumericalFailure, DomainError) as exc:
        nan = float("nan")
        return SweepRecord(G, nan, nan, nan, nan, nan, getattr(exc, "iteration", None) or 0,
                           FAILED)
    d = rep.diagnostics
    bounds = all(v.passed for v in d.verdicts) if d.verdicts else None
    return SweepRecord(G, rep.e_gamma, rep.lambda_, d.ratio, d.pohozaev_rel, d.pde_residual,
                       rep.iters, rep.status.value, d.nehari_rel, bounds)


def run_sweep(nl: Nonlinearity, gammas, grid: RadialGrid = SWEEP_GRID,
              params: SolveParams | None = None, workers: int = 1) -> list[SweepRecord]:
    """One independent solve per Gamma, returned in input order.

    With ``workers`` > 1 the solves run in separate processes; the merge is
    ordered, so the output does not depend on scheduling.
    """
    gs = [float(g) for g in gammas]
    if any(not (math.isfinite(g) and g > 0) for g in gs):
        raise DomainError("all Gamma must be finite and > 0")
    if any(b <= a for a, b in zip(gs, gs[1:])):
        raise DomainError("Gamma values must be strictly increasing")
    params = params or SolveParams()
    jobs = [(nl, g, grid, params) for g in gs]
    if workers <= 1 or len(jobs) <= 1:
        return [_solve_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
        return list(ex.map(_solve_one, jobs))


def _converged(records):
    return [r for r in records if r.converged]


def _span_ok(recs, n_min=5, decades=1.5):
    if len(recs) < n_min:
        return False
    gs = [r.gamma for r in recs]
    return math.log10(max(gs) / min(gs)) >= decades


def check_monotone(records) -> Verdict:
    """e_Gamma strictly decreasing along consecutive converged records."""
    name = "e_Gamma decreasing"
    recs = _converged(records)
    if len(recs) < 2:
        return Verdict.inconclusive(name, f"{len(recs)} converged record(s)")
    diffs = [a.e_gamma - b.e_gamma for a, b in zip(recs, recs[1:])]
    k = int(np.argmin(diffs))
    return Verdict.from_margin(name, diffs[k] + 1e-10,
                               f"smallest drop {diffs[k]:.3e} between Gamma={recs[k].gamma:g} "
                               f"and {recs[k + 1].gamma:g}")


def _is_int(x: float) -> bool:
    return float(x).is_integer()


def check_floor_and_difference(records) -> Verdict:
    """e_Gamma >= -Gamma/2 and e_{G+1} - e_G >= -lambda_{G+1} / (2 (G+1)) on integer pairs."""
    name = "floor and difference"
    recs = _converged(records)
    if not recs:
        return Verdict.inconclusive(name, "no converged records")
    floor = [r.e_gamma + 0.5 * r.gamma + 1e-8 * r.gamma for r in recs]
    kf = int(np.argmin(floor))
    margins = [floor[kf]]
    detail = [f"floor margin {floor[kf]:.6g} at Gamma={recs[kf].gamma:g}"]
    pairs = [(a, b) for a, b in zip(recs, recs[1:])
             if _is_int(a.gamma) and b.gamma == a.gamma + 1.0]
    for a, b in pairs:
        m = (b.e_gamma - a.e_gamma) + 0.5 * b.lambda_ / b.gamma + 1e-6
        margins.append(m)
        detail.append(f"pair {a.gamma:g}/{b.gamma:g} margin {m:.3e}")
    if not pairs:
        detail.append("no integer pairs: floor only")
    return Verdict.from_margin(name, min(margins), "; ".join(detail), partial=not pairs)


def check_ratio_vanishing(records, T_hat: float, slack: float = 0.1) -> Verdict:
    """Virial ratio inside (-1, 0), shrinking by 2x across the sweep, and <= -(1-slack) T/Gamma."""
    name = "ratio vanishing"
    recs = _converged(records)
    if not _span_ok(recs):
        return Verdict.inconclusive(name, "need >= 5 converged records over >= 1.5 decades")
    r = np.array([x.ratio for x in recs])
    g = np.array([x.gamma for x in recs])
    m_interval = float(min(np.min(r + 1.0), np.min(-r)))
    m_shrink = float(0.5 * abs(r[0]) - abs(r[-1]))
    comp = -(1.0 - slack) * T_hat / g - r
    k = int(np.argmin(comp))
    m_comp = float(comp[k])
    detail = (f"interval margin {m_interval:.3e}; |ratio| {abs(r[0]):.4g} -> {abs(r[-1]):.4g} "
              f"(margin {m_shrink:.3e}); comparison margin {m_comp:.3e} at Gamma={g[k]:g}")
    return Verdict.from_margin(name, min(m_interval, m_shrink, m_comp), detail)


def check_first_order(records, tol: float = 0.05) -> Verdict:
    """e_Gamma / (-Gamma/2) increases towards 1 and lies within ``tol`` of 1 at the largest Gamma."""
    name = "first-order e_Gamma ~ -Gamma/2"
    recs = _converged(records)
    if len(recs) < 2:
        return Verdict.inconclusive(name, f"{len(recs)} converged record(s)")
    q = np.array([x.e_gamma / (-0.5 * x.gamma) for x in recs])
    m_trend = float(np.min(np.diff(q)))
    m_tol = float(tol - abs(1.0 - q[-1]))
    detail = (f"e/(-Gamma/2) = {q[-1]:.6g} at Gamma={recs[-1].gamma:g} (tolerance {tol:g}); "
              f"smallest increase {m_trend:.3e}")
    return Verdict.from_margin(name, min(m_trend, m_tol), detail)


def check_threshold_consistency(records, T_hat: float, band: float = 0.1) -> Verdict:
    """NoGroundState below (1-band) T_hat, Converged above (1+band) T_hat."""
    name = "status vs threshold"
    below = [r for r in records if r.gamma < (1.0 - band) * T_hat]
    above = [r for r in records if r.gamma > (1.0 + band) * T_hat]
    bad = [r.gamma for r in below if r.status != Status.NO_GROUND_STATE.value]
    bad += [r.gamma for r in above if not r.converged]
    n_band = len(records) - len(below) - len(above)
    detail = (f"{len(below)} below, {len(above)} above, {n_band} indeterminate within "
              f"+-{band:.0%} of T_hat={T_hat:.6g}")
    if bad:
        return Verdict(name, FAIL, -float(len(bad)), detail + f"; mismatches at {bad}")
    return Verdict(name, PASS, float(len(below) + len(above)), detail)


def check_record_bounds(records) -> Verdict:
    """Every converged record passed its eigenvalue bound checks."""
    name = "eigenvalue bounds"
    recs = [r for r in _converged(records) if r.bounds_ok is not None]
    if not recs:
        return Verdict.inconclusive(name, "no converged records with bound checks")
    bad = [r.gamma for r in recs if not r.bounds_ok]
    if bad:
        return Verdict(name, FAIL, -float(len(bad)), f"failed at Gamma={bad}")
    return Verdict(name, PASS, float(len(recs)), f"{len(recs)} records")


def fit_second_order(records, T_hat: float, sigma: float = 0.9,
                     discard: float = 0.2) -> AsymptoticsFit:
    """Fit e_Gamma + Gamma/2 against ln Gamma and test the ln Gamma lower bound.

    The smallest ``discard`` fraction of Gamma values is dropped before the
    fit. With C the fitted intercept, the verdict requires slope > 0 and
    y >= sigma (T_hat/2) ln Gamma + C - 1e-3 |C| at every retained record.
    """
    if not (T_hat > 0):
        raise DomainError(f"T_hat must be > 0, got {T_hat!r}")
    gs = sorted(r.gamma for r in records)
    cut = gs[int(math.floor(discard * len(gs)))] if gs else math.inf
    recs = [r for r in _converged(records) if r.gamma >= cut]
    x = np.log([r.gamma for r in recs])
    y = np.array([r.e_gamma + 0.5 * r.gamma for r in recs])
    if x.size < 2 or np.ptp(x) == 0.0:
        raise DegenerateInputError("need at least two distinct Gamma values to fit")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    name = f"ln Gamma lower bound (sigma={sigma:g})"
    if not _span_ok(recs):
        v = Verdict.inconclusive(name, "need >= 5 converged records over >= 1.5 decades")
    else:
        bound = sigma * 0.5 * T_hat * x + intercept - 1e-3 * abs(intercept)
        gap = y - bound
        k = int(np.argmin(gap))
        v = Verdict.from_margin(
            name, float(min(slope, gap[k])),
            f"slope {slope:.6g} vs sigma T_hat/2 = {sigma * 0.5 * T_hat:.6g}; "
            f"tightest at Gamma={recs[k].gamma:g} (gap {gap[k]:.6g}); Gamma >= {cut:g} used")
    return AsymptoticsFit(float(slope), float(intercept), float(r2), float(T_hat), float(sigma),
                          len(recs), float(cut), float(max(r.gamma for r in recs)), v)


def default_sigma(nl: Nonlinearity) -> float:
    return 1.0 if nl.kind is Kind.SQUARE_ROOT else 0.9


def all_checks(records, T_hat: float, sigma: float, first_order_tol: float = 0.05):
    """Every sweep verdict plus the asymptotics fit."""
    fit = fit_second_order(records, T_hat, sigma)
    verdicts = [
        check_monotone(records),
        check_floor_and_difference(records),
        check_ratio_vanishing(records, T_hat),
        check_record_bounds(records),
        check_threshold_consistency(records, T_hat),
        check_first_order(records, first_order_tol),
        fit.verdict,
    ]
    return verdicts, fit


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in records:
        w.writerow(r.csv_row())
    return buf.getvalue()


def records_from_csv(text: str) -> list[SweepRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_FIELDS:
        raise DomainError(f"unexpected sweep CSV header {rows[0] if rows else None!r}")
    out = []
    for row in rows[1:]:
        vals = [float(v) for v in row[:6]]
        out.append(SweepRecord(*vals, int(row[6]), row[7]))
    return out


def records_to_json(records) -> str:
    rows = []
    for r in records:
        d = {k: getattr(r, "lambda_" if k == "lambda" else k) for k in CSV_FIELDS}
        rows.append({k: None if isinstance(v, float) and v != v else v for k, v in d.items()})
    return json.dumps(rows, indent=2, allow_nan=False) + "\n"


def summary_json(nl: Nonlinearity, T_hat: float, verdicts, fit: AsymptoticsFit) -> str:
    doc = {
        "nonlinearity": nl.kind.value,
        "p": nl.p,
        "T_hat": T_hat,
        "all_passed": all(v.passed for v in verdicts),
        "verdicts": [v.to_dict() for v in verdicts],
        "fit": fit.to_dict(),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
