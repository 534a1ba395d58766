"""Normalized gradient flow for ground states and the existence threshold.

Each flow step solves

    ((1 + dt*lam_k) I - dt L) v = u + dt*Gamma*f(u^2) u,    u_{k+1} = v / ||v||,

where lam_k is the Rayleigh eigenvalue of u_k. The shift makes every fixed
point an exact solution of L u + Gamma f(u^2) u = lam u (without it a
fixed point solves the equation with a rescaled Gamma). The shift is
clamped so that the diagonal term never drops below 1/2, which keeps the
tridiagonal system an M-matrix.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .energy import DiagnosticsReport, diagnose
from .errors import DegenerateInputError, DomainError, NumericalFailure
from .grid import Profile, RadialGrid
from .model import Kind, Nonlinearity

DEFAULT_GRID = RadialGrid(24.0, 4096)


class Status(str, Enum):
    CONVERGED = "Converged"
    NO_GROUND_STATE = "NoGroundState"
    MAX_ITERS = "MaxIters"


@dataclass(frozen=True)
class SolveParams:
    """Flow controls.

    ``spread_window`` consecutive growths of the half-mass radius at
    non-negative energy signal that no ground state exists.
    ``tau_init`` of None picks the width (ln max(Gamma, e))**-1/2.
    """

    dt: float = 0.05
    tol: float = 1e-8
    max_iters: int = 200_000
    tau_init: float | None = None
    collapse_energy_eps: float = 1e-6
    tail_threshold: float = 1e-10
    spread_window: int = 500
    max_enlargements: int = 2
    max_halvings: int = 20
    energy_slack: float = 1e-10

    def __post_init__(self):
        for name in ("dt", "tol", "collapse_energy_eps", "tail_threshold", "energy_slack"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be finite and > 0, got {v!r}")
        if self.tol >= 1:
            raise DomainError(f"tol must be < 1, got {self.tol!r}")
        for name in ("max_iters", "spread_window"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
        for name in ("max_enlargements", "max_halvings"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise DomainError(f"{name} must be a non-negative integer, got {v!r}")
        if self.tau_init is not None and not (np.isfinite(self.tau_init) and self.tau_init > 0):
            raise DomainError(f"tau_init must be > 0 or None, got {self.tau_init!r}")


@dataclass
class SolveReport:
    status: Status
    nonlinearity: Nonlinearity
    gamma: float
    profile: Profile
    e_gamma: float
    lambda_: float
    diagnostics: DiagnosticsReport
    iters: int
    grid: RadialGrid
    tail_value: float
    tail_ok: bool
    enlargements: int
    spreading_detected: bool
    dt_final: float
    max_energy_increase: float
    max_norm_error: float

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    def to_dict(self) -> dict:
        nl = self.nonlinearity
        return {
            "status": self.status.value,
            "nonlinearity": nl.kind.value,
            "p": nl.p,
            "gamma": self.gamma,
            "e_gamma": self.e_gamma,
            "lambda": self.lambda_,
            "iters": self.iters,
            "grid": self.grid.describe(),
            "tail_value": self.tail_value,
            "tail_ok": self.tail_ok,
            "enlargements": self.enlargements,
            "spreading_detected": self.spreading_detected,
            "dt_final": self.dt_final,
            "max_energy_increase": self.max_energy_increase,
            "max_norm_error": self.max_norm_error,
            "diagnostics": self.diagnostics.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def auto_tau(Gamma: float) -> float:
    return math.log(max(Gamma, math.e)) ** -0.5


def initial_guess(Gamma: float, grid: RadialGrid, tau: float | None = None) -> Profile:
    """Normalised Gaussian exp(-r^2 / (2 tau^2)) / tau."""
    if not (np.isfinite(Gamma) and Gamma > 0):
        raise DomainError(f"Gamma must be finite and > 0, got {Gamma!r}")
    if tau is None:
        tau = auto_tau(Gamma)
    r = np.asarray(grid.r)
    u = np.exp(-0.5 * (r / tau) ** 2) / tau
    u[-1] = 0.0
    w = grid.weights()
    return Profile(grid, u / math.sqrt(float(np.dot(w, u * u))))


@dataclass
class _FlowResult:
    status: Status
    u: np.ndarray
    iters: int
    energy: float
    lam: float
    resid: float
    dt: float
    spreading: bool
    max_increase: float
    max_norm_error: float


def _energy(vals, Gamma):
    return 0.5 * vals[0] - 0.5 * Gamma * vals[1]


def _flow(nl: Nonlinearity, Gamma: float, grid: RadialGrid, params: SolveParams,
          u0: np.ndarray) -> _FlowResult:
    W = grid.weights()
    c = grid.face_coefficients
    up, lo = grid.laplacian_coefficients
    r = np.asarray(grid.r)
    code, p = nl.code, nl.p or 0.0
    u = np.array(u0, dtype=float)
    nrm = math.sqrt(float(np.dot(W, u * u)))
    if nrm == 0.0:
        raise DegenerateInputError("zero initial profile")
    u /= nrm
    v = np.empty_like(u)
    vals = kernels.evaluate(u, code, p, Gamma, W, c, up, lo)
    E = _energy(vals, Gamma)
    dt = params.dt
    eps = params.collapse_energy_eps
    run = 0
    radius = None
    max_inc = -math.inf
    max_nerr = 0.0
    status = None
    it = 0
    while True:
        lam, resid = vals[4], vals[5]
        if not (math.isfinite(E) and math.isfinite(lam) and math.isfinite(resid)):
            raise NumericalFailure("non-finite energy or eigenvalue", it)
        if resid <= params.tol:
            status = Status.CONVERGED if (E < -eps and lam > 0) else Status.NO_GROUND_STATE
            break
        if it >= params.max_iters:
            status = Status.MAX_ITERS
            break
        for _ in range(params.max_halvings + 1):
            shift = max(lam, -0.5 / dt)
            kernels.flow_step(u, code, p, Gamma, dt, shift, W, up, lo, v)
            if not np.all(np.isfinite(v)):
                raise NumericalFailure("non-finite profile after flow step", it)
            new = kernels.evaluate(v, code, p, Gamma, W, c, up, lo)
            E_new = _energy(new, Gamma)
            if E_new <= E + params.energy_slack:
                break
            dt *= 0.5
        else:
            raise NumericalFailure(
                f"energy increase persists after {params.max_halvings} step halvings", it)
        max_inc = max(max_inc, E_new - E)
        max_nerr = max(max_nerr, abs(math.sqrt(new[3]) - 1.0))
        u, v = v, u
        vals, E = new, E_new
        it += 1
        if E >= -eps:
            R = _half_mass(W, u, r)
            run = run + 1 if (radius is not None and R > radius) else 0
            radius = R
            if run >= params.spread_window:
                status = Status.NO_GROUND_STATE
                break
        else:
            run = 0
            radius = None
    return _FlowResult(status, u, it, E, vals[4], vals[5], dt, run >= params.spread_window,
                       max_inc, max_nerr)


def _half_mass(W, u, r):
    m = np.cumsum(W * u * u)
    return float(np.interp(0.5 * m[-1], m, r))


def _tail(grid: RadialGrid, u: np.ndarray) -> float:
    return float(abs(np.interp(0.5 * grid.r_max, grid.r, u)))


def ground_state(nl: Nonlinearity, Gamma: float, grid: RadialGrid = DEFAULT_GRID,
                 params: SolveParams | None = None, initial: Profile | None = None) -> SolveReport:
    """Minimise the energy on the unit sphere by the shifted normalized flow.

    On convergence the tail |u(r_max/2)| is checked; if it exceeds
    ``params.tail_threshold`` the domain is doubled (same node count) and
    the flow resumes from the interpolated state, at most
    ``params.max_enlargements`` times. A tail that is still too large after
    that is reported through ``tail_ok`` rather than by changing status.
    """
    params = params or SolveParams()
    if not (np.isfinite(Gamma) and Gamma > 0):
        raise DomainError(f"Gamma must be finite and > 0, got {Gamma!r}")
    if not nl.subcritical:
        raise DomainError(f"power law with p = {nl.p} >= 3 has no ground state to compute")
    Gamma = float(Gamma)
    g = grid
    start = initial.interpolate(g) if initial is not None else initial_guess(Gamma, g, params.tau_init)
    u0 = start.values
    total = 0
    enlargements = 0
    max_inc, max_nerr = -math.inf, 0.0
    while True:
        fr = _flow(nl, Gamma, g, params, u0)
        total += fr.iters
        max_inc = max(max_inc, fr.max_increase)
        max_nerr = max(max_nerr, fr.max_norm_error)
        tail = _tail(g, fr.u)
        if fr.status is not Status.CONVERGED or tail <= params.tail_threshold \
                or enlargements >= params.max_enlargements:
            break
        bigger = g.enlarged(2.0)
        u0 = Profile(g, fr.u).interpolate(bigger).values
        g = bigger
        enlargements += 1
    prof = Profile(g, fr.u)
    diag = diagnose(prof, nl, Gamma, fr.lam, with_bounds=fr.status is Status.CONVERGED)
    return SolveReport(
        status=fr.status, nonlinearity=nl, gamma=Gamma, profile=prof, e_gamma=fr.energy,
        lambda_=fr.lam, diagnostics=diag, iters=total, grid=g, tail_value=tail,
        tail_ok=tail <= params.tail_threshold, enlargements=enlargements,
        spreading_detected=fr.spreading, dt_final=fr.dt,
        max_energy_increase=max_inc if total else 0.0, max_norm_error=max_nerr)


# ---------------------------------------------------------------------------
# threshold


@dataclass
class ThresholdEstimate:
    """Upper bound T_hat on inf int |w'|^2 / int F(w^2) and its near-minimiser."""

    T_hat: float
    trial: Profile
    iters: int
    restarts: int
    history: list[float] = field(default_factory=list)


def quotient(p: Profile, nl: Nonlinearity) -> float:
    """int |w'|^2 / int F(w^2) for a unit-norm profile."""
    g = p.grid
    up, lo = g.laplacian_coefficients
    vals = kernels.evaluate(p.values, nl.code, nl.p or 0.0, 0.0, g.weights(),
                            g.face_coefficients, up, lo)
    if vals[1] <= 0.0:
        raise DegenerateInputError("int F(w^2) vanishes")
    return vals[0] / vals[1]


def _rescaled(spline, grid: RadialGrid, tau: float) -> np.ndarray:
    r = np.asarray(grid.r)
    x = r / tau
    v = np.zeros_like(r)
    inside = x < grid.r_max
    v[inside] = spline(x[inside])
    v[-1] = 0.0
    nrm = math.sqrt(float(np.dot(grid.weights(), v * v)))
    return v / nrm


def _scale_search(u: np.ndarray, grid: RadialGrid, nl: Nonlinearity, q: float):
    """Best member of the mass-preserving family tau^-1 w(r / tau)."""
    spline = Profile(grid, u).spline()

    def obj(log_tau):
        w = _rescaled(spline, grid, math.exp(log_tau))
        try:
            return quotient(Profile(grid, w), nl)
        except DegenerateInputError:
            return math.inf

    res = minimize_scalar(obj, bounds=(-1.5, 1.5), method="bounded", options={"xatol": 1e-6})
    if res.fun < q:
        return _rescaled(spline, grid, math.exp(res.x)), float(res.fun)
    return u, q


def estimate_threshold(nl: Nonlinearity, grid: RadialGrid = DEFAULT_GRID,
                       params: SolveParams | None = None, *, step: float = 1.0,
                       search_every: int = 50, rtol: float = 1e-13,
                       max_iters: int = 50_000) -> ThresholdEstimate:
    """Minimise Q[w] = int |w'|^2 / int F(w^2) over unit-norm profiles.

    Alternates a flow step at Gamma = Q[w] (which lowers the energy, hence
    Q) with a bounded line search over the scaling family every
    ``search_every`` steps. Stops once Q decreases by less than ``rtol``
    relative. The result bounds the infimum over the continuum from above
    up to discretisation error.
    """
    if nl.kind is Kind.POWER_LAW:
        raise DomainError("the threshold quotient is defined for the bounded kinds only")
    params = params or SolveParams()
    W = grid.weights()
    c = grid.face_coefficients
    up, lo = grid.laplacian_coefficients
    tau = 1.0
    restarts = 0
    while True:
        u = np.array(initial_guess(math.e, grid, tau).values)
        try:
            return _threshold_descent(nl, grid, u, W, c, up, lo, step, search_every,
                                      rtol, max_iters, restarts)
        except DegenerateInputError:
            restarts += 1
            if restarts > 3:
                raise NumericalFailure("threshold quotient diverged after 3 restarts")
            tau *= 2.0


def _threshold_descent(nl, grid, u, W, c, up, lo, step, search_every, rtol, max_iters,
                       restarts):
    code = nl.code
    v = np.empty_like(u)
    q = quotient(Profile(grid, u), nl)
    hist = [q]
    k = 0
    for k in range(max_iters):
        if k % search_every == 0:
            u, q = _scale_search(u, grid, nl, q)
        vals = kernels.evaluate(u, code, 0.0, q, W, c, up, lo)
        kernels.flow_step(u, code, 0.0, q, step, max(vals[4], -0.5 / step), W, up, lo, v)
        if not np.all(np.isfinite(v)):
            raise NumericalFailure("non-finite trial in threshold descent", k)
        u, v = v, u
        q_new = quotient(Profile(grid, u), nl)
        hist.append(q_new)
        if k > 2 * search_every and abs(q - q_new) < rtol * q_new:
            q = q_new
            break
        q = q_new
    if not q > 0:
        raise NumericalFailure(f"threshold estimate {q!r} is not positive")
    return ThresholdEstimate(q, Profile(grid, u), k + 1, restarts, hist)


@dataclass
class Bracket:
    """Gamma values bracketing the change of solver status."""

    lo: float
    hi: float
    evaluations: list[tuple[float, str]]

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)


def bisect_threshold(nl: Nonlinearity, T_hat: float, grid: RadialGrid = DEFAULT_GRID,
                     params: SolveParams | None = None, rel_width: float = 0.02) -> Bracket:
    """Bisect on the solver's verdict between 0.5 T_hat and 2 T_hat.

    ``lo`` always carries NoGroundState and ``hi`` Converged.
    """
    params = params or SolveParams()
    evals = []

    def converged(G):
        st = ground_state(nl, G, grid, params).status
        evals.append((G, st.value))
        if st is Status.MAX_ITERS:
            raise NumericalFailure(f"flow did not settle at Gamma = {G}")
        return st is Status.CONVERGED

    lo, hi = 0.5 * T_hat, 2.0 * T_hat
    if converged(lo) or not converged(hi):
        raise NumericalFailure(f"no status change inside [{lo}, {hi}]: {evals}")
    while hi - lo > rel_width * T_hat:
        mid = 0.5 * (lo + hi)
        if converged(mid):
            hi = mid
        else:
            lo = mid
    return Bracket(lo, hi, evals)


def with_params(params: SolveParams | None, **kw) -> SolveParams:
    return replace(params or SolveParams(), **kw)
