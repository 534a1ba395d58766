"""Nonlinearity definitions and the scalar functions used by the virial bounds.

All functions accept scalars or numpy arrays and return the same shape.
Small-argument branches use truncated Taylor series wherever the direct
formula cancels catastrophically.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError

# below this argument the series branches are used
_SERIES_CUTOFF = 0.05
_SERIES_TERMS = 40


class Kind(str, Enum):
    SQUARE_ROOT = "sqrt"
    SATURABLE = "saturable"
    POWER_LAW = "power"


# integer codes shared with the compiled kernels
KIND_CODES = {Kind.SQUARE_ROOT: 0, Kind.SATURABLE: 1, Kind.POWER_LAW: 2}


@dataclass(frozen=True)
class Nonlinearity:
    """Choice of f(s) in the stationary equation.

    Parameters
    ----------
    kind : Kind
    p : float, optional
        Exponent of the power law f(s) = s**((p-1)/2). Required for
        ``Kind.POWER_LAW`` and forbidden otherwise.
    """

    kind: Kind
    p: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.POWER_LAW:
            if self.p is None or not np.isfinite(self.p) or self.p <= 1.0:
                raise DomainError(f"power law requires finite p > 1, got {self.p!r}")
            object.__setattr__(self, "p", float(self.p))
        elif self.p is not None:
            raise DomainError(f"p is only meaningful for the power law, got {self.p!r}")

    @classmethod
    def square_root(cls) -> "Nonlinearity":
        return cls(Kind.SQUARE_ROOT)

    @classmethod
    def saturable(cls) -> "Nonlinearity":
        return cls(Kind.SATURABLE)

    @classmethod
    def power_law(cls, p: float) -> "Nonlinearity":
        return cls(Kind.POWER_LAW, p)

    @property
    def code(self) -> int:
        return KIND_CODES[self.kind]

    @property
    def subcritical(self) -> bool:
        """True unless this is a power law with p >= 3 (no ground state)."""
        return self.kind is not Kind.POWER_LAW or self.p < 3.0

    @property
    def bounded(self) -> bool:
        return self.kind is not Kind.POWER_LAW

    def label(self) -> str:
        if self.kind is Kind.POWER_LAW:
            return f"power(p={self.p:g})"
        return self.kind.value

    def f(self, s):
        return f_value(self, s)

    def F(self, s):
        return F_value(self, s)


def _as_nonneg(s, name="s"):
    a = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} must be finite")
    if np.any(a < 0):
        raise DomainError(f"{name} must be >= 0")
    return a


def _as_pos(s, name="s"):
    a = _as_nonneg(s, name)
    if np.any(a == 0):
        raise DomainError(f"{name} must be > 0")
    return a


def _out(a, like):
    return float(a) if np.ndim(like) == 0 else a


def _series(s, coeff, start):
    """Evaluate sum_{k>=start} coeff(k) s**k by Horner's rule."""
    ks = np.arange(start + _SERIES_TERMS - 1, start - 1, -1)
    acc = np.zeros_like(s)
    for k in ks:
        acc = acc * s + coeff(k)
    return acc * s**start


def _piecewise(s, small, large):
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    m = s < _SERIES_CUTOFF
    out[m] = small(s[m])
    out[~m] = large(s[~m])
    return out


def _sat_F(s):
    return _piecewise(s, lambda x: _series(x, lambda k: (-1.0) ** k / k, 2),
                      lambda x: x - np.log1p(x))


def _sqrt_F(s):
    t = np.sqrt(1.0 + s)
    return (s / (t + 1.0)) ** 2


def f_value(nl: Nonlinearity, s):
    """Return f(s) for s >= 0."""
    a = _as_nonneg(s)
    if nl.kind is Kind.SATURABLE:
        v = a / (1.0 + a)
    elif nl.kind is Kind.SQUARE_ROOT:
        t = np.sqrt(1.0 + a)
        v = a / (t * (t + 1.0))
    else:
        v = a ** ((nl.p - 1.0) / 2.0)
    return _out(v, s)


def F_value(nl: Nonlinearity, I):
    """Return F(I), the integral of f over [0, I]."""
    a = _as_nonneg(I, "I")
    if nl.kind is Kind.SATURABLE:
        v = _sat_F(a)
    elif nl.kind is Kind.SQUARE_ROOT:
        v = _sqrt_F(a)
    else:
        v = 2.0 * a ** ((nl.p + 1.0) / 2.0) / (nl.p + 1.0)
    return _out(v, I)


def _require_bounded(nl: Nonlinearity):
    if nl.kind is Kind.POWER_LAW:
        raise DomainError("ratio kernel is the constant (p+1)/2 for the power law")


def ratio_kernel(nl: Nonlinearity, s):
    """Return f(s) s / F(s) for s > 0."""
    _require_bounded(nl)
    a = _as_pos(s)
    if nl.kind is Kind.SQUARE_ROOT:
        # (s/(t(t+1))) s / (s/(t+1))^2 simplifies to 1 + 1/t
        v = 1.0 + 1.0 / np.sqrt(1.0 + a)
    else:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            v = (a / (1.0 + a)) * (a / _sat_F(a))
        # F(s) ~ s^2/2 underflows first; 2 - 2s/3 is exact to rounding there
        v = np.where(a < 1e-100, 2.0 - (2.0 / 3.0) * a, v)
    return _out(v, s)


def ratio_kernel_deficit(nl: Nonlinearity, s):
    """Return 2 - ratio_kernel(s), computed without cancellation near s = 0."""
    _require_bounded(nl)
    a = _as_pos(s)
    if nl.kind is Kind.SQUARE_ROOT:
        v = f_value(nl, a)
    else:
        num = _piecewise(
            a,
            lambda x: _series(x, lambda m: 2.0 * (-1.0) ** (m + 1) / (m * (m - 1)), 3),
            lambda x: x * x + 2.0 * x - 2.0 * (1.0 + x) * np.log1p(x),
        )
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            v = num / ((1.0 + a) * _sat_F(a))
        # no cancellation once the kernel is near 1; avoids overflow of s^2
        v = np.where(a < 1e-100, (2.0 / 3.0) * a, v)
        v = np.where(a > 1e8, 2.0 - (a / (1.0 + a)) * (a / _sat_F(a)), v)
    return _out(v, s)


def _check_alpha(alpha):
    a = float(alpha)
    if not (-1.0 < a < -0.5):
        raise DomainError(f"alpha must lie in (-1, -1/2), got {alpha!r}")
    return a


def s_alpha(alpha: float) -> float:
    """Crossing point (1+2 alpha)**-2 - 1 of the square-root h function."""
    a = _check_alpha(alpha)
    return (1.0 + 2.0 * a) ** -2 - 1.0


def rho0(alpha: float) -> float:
    """Slope (-(1+2 alpha)/3)**1.5 that makes h(s) - rho0 s nonincreasing."""
    a = _check_alpha(alpha)
    return (-(1.0 + 2.0 * a) / 3.0) ** 1.5


def tau_star(alpha: float) -> float:
    """Minimiser of omega on tau > 1."""
    a = _check_alpha(alpha)
    return (-(1.0 + 2.0 * a) / 3.0) ** -0.5


def omega(alpha: float, tau):
    """omega(tau) = 2 rho0 tau^3 + (1+2 alpha) tau^2 + 1, evaluated directly."""
    a = _check_alpha(alpha)
    t = np.asarray(tau, dtype=float)
    return _out(2.0 * rho0(a) * t**3 + (1.0 + 2.0 * a) * t**2 + 1.0, tau)


def omega_factored(alpha: float, tau):
    """omega in the factored form 2 rho0 (tau - tau*)^2 (tau + tau*/2).

    Same polynomial as :func:`omega`, but keeps full relative accuracy near
    the double root tau*.
    """
    a = _check_alpha(alpha)
    t = np.asarray(tau, dtype=float)
    ts = tau_star(a)
    return _out(2.0 * rho0(a) * (t - ts) ** 2 * (t + 0.5 * ts), tau)


def sqrt_h(alpha: float, s):
    """h(s) = 2 alpha (1 - sqrt(1+s)) - s / sqrt(1+s) for the square-root kind."""
    a = np.asarray(s, dtype=float)
    t = np.sqrt(1.0 + a)
    return _out(a * (-2.0 * alpha / (t + 1.0) - 1.0 / t), s)


def sqrt_h0(alpha: float, s):
    """h(s) - rho0(alpha) s."""
    a = np.asarray(s, dtype=float)
    t = np.sqrt(1.0 + a)
    return _out(a * (-2.0 * alpha / (t + 1.0) - 1.0 / t - rho0(alpha)), s)


def sat_h(beta: float, s):
    """h(s) = -beta ln(1+s) + 1/(1+s) - 1 - beta^2 s / 4 for the saturable kind."""
    a = np.asarray(s, dtype=float)
    return _out(-beta * np.log1p(a) - a / (1.0 + a) - 0.25 * beta * beta * a, s)


def quartic_gap(nl: Nonlinearity, s):
    """c s^2 - F(s) with c = 1/2 (saturable) or 1/4 (square-root)."""
    _require_bounded(nl)
    a = _as_nonneg(s)
    if nl.kind is Kind.SATURABLE:
        v = _piecewise(a, lambda x: _series(x, lambda k: (-1.0) ** (k + 1) / k, 3),
                       lambda x: 0.5 * x * x - (x - np.log1p(x)))
    else:
        t = np.sqrt(1.0 + a)
        v = a * a * (a / (t + 1.0)) * (t + 3.0) / (4.0 * (t + 1.0) ** 2)
    return _out(v, s)


def sat_rho(s):
    """rho(s) = 2 s^2 - (s^2 + 2 s) ln(1+s); negative for s > 0."""
    return _out(_piecewise(
        s,
        lambda x: -_series(x, lambda m: (-1.0) ** m * (m - 3) / ((m - 1) * (m - 2)), 4),
        lambda x: 2 * x * x - (x * x + 2 * x) * np.log1p(x),
    ), s)


def sat_eta(s):
    """eta(s) = 4 - 2 (1+s) ln(1+s) / s - (2+s)/(1+s); negative for s > 0."""
    return _out(_piecewise(
        s,
        lambda x: -_series(x, lambda j: (-1.0) ** j * (1.0 - 2.0 / (j * (j + 1))), 2),
        lambda x: 4 - 2 * (1 + x) * np.log1p(x) / x - (2 + x) / (1 + x),
    ), s)


def sat_omega(s):
    """s - ln(1+s) - s^2 / (2 (1+s)^2); positive for s > 0."""
    return _out(_piecewise(
        s,
        lambda x: _series(x, lambda m: (-1.0) ** m * (1.0 / m - (m - 1) / 2.0), 3),
        lambda x: x - np.log1p(x) - x * x / (2 * (1 + x) ** 2),
    ), s)


# ---------------------------------------------------------------------------
# sampling-based verification


@dataclass(frozen=True)
class InequalityCheck:
    family: str
    parameter: float | None
    passed: bool
    min_margin: float
    n_samples: int


@dataclass
class ScalarReport:
    nonlinearity: Nonlinearity
    s_max: float
    n_samples: int
    checks: list[InequalityCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def families(self) -> dict[str, list[InequalityCheck]]:
        out: dict[str, list[InequalityCheck]] = {}
        for c in self.checks:
            out.setdefault(c.family, []).append(c)
        return out

    def summary_rows(self) -> list[tuple[str, int, bool, float]]:
        """(family, number of parameter values, passed, worst margin)."""
        return [(name, len(cs), all(c.passed for c in cs), min(c.min_margin for c in cs))
                for name, cs in self.families().items()]


def parameter_grid(lo: float, hi: float, n: int = 20, offset: float = 1e-3,
                   closed_lo: bool = False) -> np.ndarray:
    """n values spanning (lo, hi), pulled in by ``offset`` at open ends."""
    a = lo if closed_lo else lo + offset
    return np.linspace(a, hi - offset, n)


def _check(family, param, margins) -> InequalityCheck:
    m = np.asarray(margins, dtype=float)
    ok = bool(m.size) and bool(np.all(np.isfinite(m))) and bool(np.all(m > 0))
    return InequalityCheck(family, None if param is None else float(param), ok,
                           float(np.min(m)) if m.size else float("nan"), int(m.size))


def _kernel_checks(nl, s):
    checks = []
    k = ratio_kernel(nl, s)
    d = ratio_kernel_deficit(nl, s)
    checks.append(_check("ratio kernel in (1, 2)", None, np.minimum(k - 1.0, d)))
    # strict decrease of the kernel = strict increase of its deficit
    checks.append(_check("ratio kernel decreasing", None, np.diff(d)))
    lo = 10.0 ** -np.arange(4, 13)
    hi = 10.0 ** np.arange(4, 13)
    d_lo = ratio_kernel_deficit(nl, lo)
    k_hi = ratio_kernel(nl, hi) - 1.0
    # limits: both gaps shrink monotonically and fall below 1e-5 at the ends
    checks.append(_check("ratio kernel -> 2 as s -> 0", None,
                         np.concatenate([-np.diff(d_lo), [1e-5 - d_lo[-1]]])))
    checks.append(_check("ratio kernel -> 1 as s -> inf", None,
                         np.concatenate([-np.diff(k_hi), [1e-5 - k_hi[-1]]])))
    checks.append(_check("quartic bound on F", None, quartic_gap(nl, s)))
    return checks


def verify_scalar_inequalities(nl: Nonlinearity, s_max: float = 1e6,
                               n_samples: int = 100_000, n_params: int = 20) -> ScalarReport:
    """Check every scalar inequality for ``nl`` on log-uniform samples.

    Samples run from 1e-12 to ``s_max``; each parameterised family is checked
    at ``n_params`` values of alpha or beta. A check passes only if every
    sample satisfies its strict inequality with positive margin.
    """
    if not (np.isfinite(s_max) and s_max > 1e-12):
        raise DomainError(f"s_max must be finite and > 1e-12, got {s_max!r}")
    if n_samples < 100:
        raise DomainError(f"n_samples must be >= 100, got {n_samples!r}")
    if n_params < 2:
        raise DomainError(f"n_params must be >= 2, got {n_params!r}")
    s = np.logspace(-12, np.log10(s_max), int(n_samples))
    rep = ScalarReport(nl, float(s_max), int(n_samples))

    if nl.kind is Kind.POWER_LAW:
        c = (nl.p + 1.0) / 2.0
        k = f_value(nl, s) * s / F_value(nl, s)
        rep.checks.append(_check("constant kernel (p+1)/2", None,
                                 [1e-12 - np.max(np.abs(k - c))]))
        if nl.subcritical:
            rep.checks.append(_check("kernel in (1, 2)", None, [c - 1.0, 2.0 - c]))
        return rep

    rep.checks.extend(_kernel_checks(nl, s))

    if nl.kind is Kind.SATURABLE:
        rep.checks.append(_check("rho(s) < 0", None, -sat_rho(s)))
        rep.checks.append(_check("eta(s) < 0", None, -sat_eta(s)))
        rep.checks.append(_check("omega(s) > 0", None, sat_omega(s)))
        for b in parameter_grid(-1.0, 0.0, n_params):
            rep.checks.append(_check("g(s) < (1+beta/2)^2 s", b, -sat_h(b, s)))
        return rep

    for a in parameter_grid(-0.5, 0.0, n_params, closed_lo=True):
        rep.checks.append(_check("h(s) < 0, alpha in [-1/2, 0)", a, -sqrt_h(a, s)))
    tau = np.logspace(0.0, 3.0, int(n_samples) + 1)[1:]
    for a in parameter_grid(-1.0, -0.5, n_params):
        sa = s_alpha(a)
        h = sqrt_h(a, s)
        keep = np.abs(s - sa) > 1e-12 * sa
        sign = np.where(s[keep] < sa, -1.0, 1.0)
        rep.checks.append(_check("h(s) changes sign at s_alpha", a, sign * h[keep]))
        rep.checks.append(_check("h(s) - rho0 s < 0", a, -sqrt_h0(a, s)))
        ts = tau_star(a)
        keep_t = np.abs(tau - ts) > 1e-12 * ts
        rep.checks.append(_check("omega(tau) >= 0 for tau > 1", a,
                                 omega_factored(a, tau[keep_t])))
    return rep
