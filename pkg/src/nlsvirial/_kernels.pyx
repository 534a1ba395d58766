# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled flow kernels. Same API as ``_kernels_py``."""
from libc.math cimport sqrt, log1p, pow
import numpy as np

cdef double _SMALL = 1e-3


cdef inline double _f(double s, int kind, double p) noexcept nogil:
    cdef double t
    if kind == 0:
        t = sqrt(1.0 + s)
        return s / (t * (t + 1.0))
    elif kind == 1:
        return s / (1.0 + s)
    if p == 2.0:
        return sqrt(s)
    return pow(s, 0.5 * (p - 1.0))


cdef inline double _F(double s, double f, int kind, double p) noexcept nogil:
    cdef double t, q
    if kind == 0:
        t = sqrt(1.0 + s)
        q = s / (t + 1.0)
        return q * q
    elif kind == 1:
        if s < _SMALL:
            return s * s * (0.5 - s * (1.0 / 3 - s * (0.25 - s * (0.2 - s / 6.0))))
        return s - log1p(s)
    return 2.0 * s * f / (p + 1.0)


def nonlinear_terms(s, int kind, double p):
    cdef double[::1] sv = np.ascontiguousarray(s, dtype=np.float64)
    cdef Py_ssize_t i, n = sv.shape[0]
    f = np.empty(n)
    F = np.empty(n)
    cdef double[::1] fv = f
    cdef double[::1] Fv = F
    for i in range(n):
        fv[i] = _f(sv[i], kind, p)
        Fv[i] = _F(sv[i], fv[i], kind, p)
    return f, F


def evaluate(const double[::1] u, int kind, double p, double gamma,
             const double[::1] W, const double[::1] c,
             const double[::1] up, const double[::1] lo):
    cdef Py_ssize_t i, m = u.shape[0] - 1
    cdef double kin = 0.0, pot = 0.0, nonl = 0.0, mass = 0.0
    cdef double s, f, du, lam, r, Lu, acc = 0.0
    cdef double[::1] fb = np.empty(m + 1)
    with nogil:
        for i in range(m):
            du = u[i + 1] - u[i]
            kin += c[i] * du * du
        for i in range(m + 1):
            s = u[i] * u[i]
            f = _f(s, kind, p)
            fb[i] = f
            pot += W[i] * _F(s, f, kind, p)
            nonl += W[i] * f * s
            mass += W[i] * s
        lam = (-kin + gamma * nonl) / mass
        for i in range(m):
            Lu = up[i] * (u[i + 1] - u[i])
            if i > 0:
                Lu = Lu - lo[i] * (u[i] - u[i - 1])
            r = Lu + (gamma * fb[i] - lam) * u[i]
            acc += W[i] * r * r
    return kin, pot, nonl, mass, lam, sqrt(acc / mass)


def flow_step(const double[::1] u, int kind, double p, double gamma, double dt,
              double shift, const double[::1] W,
              const double[::1] up, const double[::1] lo, double[::1] out):
    """Thomas solve of ((1 + dt shift) I - dt L) v = u + dt gamma f(u^2) u."""
    cdef Py_ssize_t i, m = u.shape[0] - 1
    cdef double[::1] cp = np.empty(m)
    cdef double[::1] dp = np.empty(m)
    cdef double a, b, cu, inv, nrm = 0.0
    cdef double base = 1.0 + dt * shift
    with nogil:
        cp[0] = 0.0
        dp[0] = 0.0
        for i in range(m):
            a = -dt * lo[i]
            b = base + dt * (up[i] + lo[i])
            cu = -dt * up[i] if i < m - 1 else 0.0
            if i > 0:
                inv = 1.0 / (b - a * cp[i - 1])
                dp[i] = (u[i] * (1.0 + dt * gamma * _f(u[i] * u[i], kind, p)) - a * dp[i - 1]) * inv
            else:
                inv = 1.0 / b
                dp[i] = u[i] * (1.0 + dt * gamma * _f(u[i] * u[i], kind, p)) * inv
            cp[i] = cu * inv
        out[m - 1] = dp[m - 1]
        for i in range(m - 2, -1, -1):
            out[i] = dp[i] - cp[i] * out[i + 1]
        for i in range(m):
            nrm += W[i] * out[i] * out[i]
        nrm = sqrt(nrm)
        inv = 1.0 / nrm
        for i in range(m):
            out[i] = out[i] * inv
        out[m] = 0.0
    return nrm
