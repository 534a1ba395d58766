"""Pure numpy implementation of the flow kernels.

Mirrors the compiled module function for function; selected at import
when the extension is unavailable or NLSVIRIAL_BACKEND=python.
"""
import numpy as np
from scipy.linalg import solve_banded

# below this argument F for the saturable kind uses a short series
_SMALL = 1e-3


def nonlinear_terms(s, kind, p):
    """Return f(s) and F(s) for kind codes 0 (sqrt), 1 (saturable), 2 (power)."""
    if kind == 0:
        t = np.sqrt(1.0 + s)
        q = s / (t + 1.0)
        return q / t, q * q
    if kind == 1:
        f = s / (1.0 + s)
        F = s - np.log1p(s)
        m = s < _SMALL
        x = s[m]
        F[m] = x * x * (0.5 - x * (1.0 / 3 - x * (0.25 - x * (0.2 - x / 6.0))))
        return f, F
    e = 0.5 * (p - 1.0)
    f = s**e
    return f, 2.0 * s * f / (p + 1.0)


def evaluate(u, kind, p, gamma, W, c, up, lo):
    """Integrals and stationarity data for a profile.

    Returns
    -------
    kin : float
        Integral of |u'|^2 (staggered differences).
    pot : float
        Integral of F(u^2).
    nonl : float
        Integral of f(u^2) u^2.
    mass : float
        Integral of u^2.
    lam : float
        (-kin + gamma nonl) / mass.
    resid : float
        Weighted norm of Lu + gamma f(u^2) u - lam u over unknown nodes,
        divided by sqrt(mass).
    """
    s = u * u
    f, F = nonlinear_terms(s, kind, p)
    du = np.diff(u)
    flux = c * du
    kin = float(np.dot(flux, du))
    pot = float(np.dot(W, F))
    nonl = float(np.dot(W, f * s))
    mass = float(np.dot(W, s))
    lam = (-kin + gamma * nonl) / mass
    Lu = up * du
    Lu[1:] -= lo[1:] * du[:-1]
    r = Lu + gamma * f[:-1] * u[:-1] - lam * u[:-1]
    resid = float(np.sqrt(np.dot(W[:-1], r * r) / mass))
    return kin, pot, nonl, mass, lam, resid


def flow_step(u, kind, p, gamma, dt, shift, W, up, lo, out):
    """One semi-implicit step, normalised, written into ``out``.

    Solves ((1 + dt shift) I - dt L) v = u + dt gamma f(u^2) u on the
    unknown nodes and returns the norm of v before normalisation.
    """
    m = u.size - 1
    f, _ = nonlinear_terms(u[:-1] * u[:-1], kind, p)
    rhs = u[:-1] * (1.0 + dt * gamma * f)
    ab = np.empty((3, m))
    ab[0, 0] = 0.0
    ab[0, 1:] = -dt * up[:-1]
    ab[1] = 1.0 + dt * shift + dt * (up + lo)
    ab[2, :-1] = -dt * lo[1:]
    ab[2, -1] = 0.0
    v = solve_banded((1, 1), ab, rhs, overwrite_ab=True, overwrite_b=True,
                     check_finite=False)
    nrm = float(np.sqrt(np.dot(W[:-1], v * v)))
    out[:-1] = v / nrm
    out[-1] = 0.0
    return nrm
