"""Energy functional, eigenvalue, virial ratio and identity residuals.

The energy is E[u] = 1/2 int |u'|^2 - (Gamma/2) int F(u^2), with all
integrals over the plane. Energies use the lumped quadrature, so the
gradient of the discrete energy is exactly W (-L u - Gamma f(u^2) u).

The Pohozaev and Nehari residuals are evaluated with the corrected
quadrature and fourth-order differences. Under the lumped rule the Nehari
identity holds to round-off by construction for any profile, so it would
say nothing about the continuum equation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateInputError, DomainError
from .grid import Profile, gradient_sq_integral, laplacian_values
from .model import Kind, Nonlinearity, F_value, f_value, rho0, s_alpha
from .verdicts import Verdict

_FLOOR = 1e-30


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    potential: float
    total: float


@dataclass(frozen=True)
class Integrals:
    """Lumped-rule integrals of a profile.

    grad : int |u'|^2
    pot : int F(u^2)
    nonl : int f(u^2) u^2
    mass : int u^2
    lam : Rayleigh eigenvalue (-grad + Gamma nonl) / mass
    resid : stationarity residual at ``lam``, divided by sqrt(mass)
    """

    grad: float
    pot: float
    nonl: float
    mass: float
    lam: float
    resid: float


def _check_gamma(Gamma):
    if not np.isfinite(Gamma):
        raise DomainError(f"Gamma must be finite, got {Gamma!r}")


def integrals(p: Profile, nl: Nonlinearity, Gamma: float) -> Integrals:
    _check_gamma(Gamma)
    g = p.grid
    u = p.values
    if not np.any(u):
        raise DegenerateInputError("zero profile")
    up, lo = g.laplacian_coefficients
    vals = kernels.evaluate(u, nl.code, nl.p or 0.0, float(Gamma),
                            g.weights(), g.face_coefficients, up, lo)
    return Integrals(*(float(v) for v in vals))


def energy_terms(p: Profile, nl: Nonlinearity, Gamma: float) -> EnergyBreakdown:
    _check_gamma(Gamma)
    K = 0.5 * gradient_sq_integral(p)
    s = p.values * p.values
    P = -0.5 * Gamma * float(np.dot(p.grid.weights(), F_value(nl, s)))
    return EnergyBreakdown(K, P, K + P)


def energy_gradient(p: Profile, nl: Nonlinearity, Gamma: float) -> np.ndarray:
    """-L u - Gamma f(u^2) u at the nodes (zero at the boundary node).

    Multiplied by the lumped weights this is the derivative of
    ``energy_terms(...).total`` with respect to each free nodal value.
    """
    _check_gamma(Gamma)
    u = p.values
    gr = -laplacian_values(p.grid, u) - Gamma * f_value(nl, u * u) * u
    gr[-1] = 0.0
    return gr


def eigenvalue_of(p: Profile, nl: Nonlinearity, Gamma: float) -> float:
    """(-int |u'|^2 + Gamma int f(u^2) u^2) / int u^2."""
    return integrals(p, nl, Gamma).lam


def virial_ratio(p: Profile, nl: Nonlinearity, Gamma: float) -> float:
    """int |u'|^2 / (-Gamma int F(u^2))."""
    if not (np.isfinite(Gamma) and Gamma > 0):
        raise DomainError(f"Gamma must be finite and > 0, got {Gamma!r}")
    I = integrals(p, nl, Gamma)
    if I.pot <= 0.0:
        raise DegenerateInputError("int F(u^2) vanishes")
    return I.grad / (-Gamma * I.pot)


def _corrected(p: Profile, nl: Nonlinearity):
    w = p.grid.weights("corrected")
    s = p.values * p.values
    mass = float(np.dot(w, s))
    pot = float(np.dot(w, F_value(nl, s)))
    nonl = float(np.dot(w, f_value(nl, s) * s))
    grad = gradient_sq_integral(p, rule="corrected")
    return grad, pot, nonl, mass


def _relative(a: float, b: float) -> float:
    den = max(abs(a), abs(b))
    if den == 0.0:
        raise DegenerateInputError("both sides of the identity vanish")
    return abs(a - b) / max(den, _FLOOR)


def pohozaev_residual(p: Profile, nl: Nonlinearity, Gamma: float, lam: float) -> float:
    """Relative mismatch in lambda int u^2 = Gamma int F(u^2)."""
    _check_gamma(Gamma)
    _, pot, _, mass = _corrected(p, nl)
    return _relative(lam * mass, Gamma * pot)


def nehari_residual(p: Profile, nl: Nonlinearity, Gamma: float, lam: float) -> float:
    """Relative mismatch in lambda int u^2 = -int |u'|^2 + Gamma int f(u^2) u^2."""
    _check_gamma(Gamma)
    grad, _, nonl, mass = _corrected(p, nl)
    return _relative(lam * mass, -grad + Gamma * nonl)


def combined_identity_residual(p: Profile, nl: Nonlinearity, Gamma: float) -> float:
    """Relative size of int |u'|^2 - Gamma int f u^2 + Gamma int F.

    This is the difference of the Nehari and Pohozaev identities, so it is
    independent of lambda.
    """
    _check_gamma(Gamma)
    grad, pot, nonl, _ = _corrected(p, nl)
    den = max(grad, abs(Gamma) * nonl, abs(Gamma) * pot, _FLOOR)
    return abs(grad - Gamma * nonl + Gamma * pot) / den


def pde_residual(p: Profile, nl: Nonlinearity, Gamma: float, lam: float) -> float:
    """Weighted norm of L u + Gamma f(u^2) u - lam u over the unknown nodes, over ||u||."""
    _check_gamma(Gamma)
    u = p.values
    w = p.grid.weights()
    mass = float(np.dot(w, u * u))
    if mass == 0.0:
        return 0.0
    r = laplacian_values(p.grid, u) + Gamma * f_value(nl, u * u) * u - lam * u
    return float(np.sqrt(np.dot(w[:-1], r[:-1] ** 2) / mass))


@dataclass
class DiagnosticsReport:
    ratio: float
    lambda_: float
    pohozaev_rel: float
    nehari_rel: float
    pde_residual: float
    combined_rel: float = float("nan")
    verdicts: list[Verdict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "ratio": self.ratio,
            "lambda": self.lambda_,
            "pohozaev_rel": self.pohozaev_rel,
            "nehari_rel": self.nehari_rel,
            "pde_residual": self.pde_residual,
            "combined_rel": self.combined_rel,
            "verdicts": [v.to_dict() for v in self.verdicts],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DiagnosticsReport":
        return cls(d["ratio"], d["lambda"], d["pohozaev_rel"], d["nehari_rel"],
                   d["pde_residual"], d.get("combined_rel", float("nan")),
                   [Verdict.from_dict(v) for v in d.get("verdicts", [])])


def diagnose(p: Profile, nl: Nonlinearity, Gamma: float, lam: float | None = None,
             with_bounds: bool = True) -> DiagnosticsReport:
    """Ratio, eigenvalue, residuals and (for bounded kinds) eigenvalue bound verdicts."""
    I = integrals(p, nl, Gamma)
    lam = I.lam if lam is None else float(lam)
    ratio = I.grad / (-Gamma * I.pot) if I.pot > 0 else float("nan")
    rep = DiagnosticsReport(
        ratio=ratio,
        lambda_=lam,
        pohozaev_rel=pohozaev_residual(p, nl, Gamma, lam),
        nehari_rel=nehari_residual(p, nl, Gamma, lam),
        pde_residual=pde_residual(p, nl, Gamma, lam),
        combined_rel=combined_identity_residual(p, nl, Gamma),
    )
    if with_bounds and nl.bounded and -1.0 < ratio < 0.0:
        rep.verdicts = check_eigenvalue_bounds(rep, Gamma, nl, float(np.max(p.values ** 2)))
    return rep


def check_eigenvalue_bounds(report: DiagnosticsReport, Gamma: float, nl: Nonlinearity,
                            sup_u_sq: float) -> list[Verdict]:
    """Eigenvalue bounds implied by the virial ratio, each with its margin."""
    r = report.ratio
    lam = report.lambda_
    if not (-1.0 < r < 0.0):
        raise DomainError(f"virial ratio {r!r} outside (-1, 0); state is not a ground state")
    out = [Verdict.from_margin("lambda > 0", lam, f"lambda={lam:.6g}")]
    if nl.kind is Kind.SATURABLE:
        bound = (1.0 + 0.5 * r) ** 2 * Gamma
        out.append(Verdict.from_margin("lambda <= (1+beta/2)^2 Gamma", bound - lam,
                                       f"beta={r:.6g} bound={bound:.6g}"))
        return out
    if nl.kind is not Kind.SQUARE_ROOT:
        return []
    if r >= -0.5:
        bound = Gamma * (1.0 + r)
        out.append(Verdict.from_margin("case (i): lambda <= Gamma (1+alpha)", bound - lam,
                                       f"alpha={r:.6g} bound={bound:.6g}"))
        return out
    bound = Gamma * (1.0 + r + rho0(r))
    out.append(Verdict.from_margin("case (ii): lambda <= Gamma (1+alpha+rho0)", bound - lam,
                                   f"alpha={r:.6g} bound={bound:.6g}"))
    if sup_u_sq <= s_alpha(r):
        bound = Gamma * (1.0 + r)
        out.append(Verdict.from_margin("case (iii): lambda <= Gamma (1+alpha)", bound - lam,
                                       f"alpha={r:.6g} sup u^2={sup_u_sq:.6g}"))
    return out
