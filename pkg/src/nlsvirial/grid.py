"""Uniform radial mesh, quadrature and differential operators on [0, r_max].

Integrals are over the plane, ``2 pi * int g(r) r dr``. The default
quadrature is the finite-volume ("lumped") rule: node i owns the annulus
between its two neighbouring cell faces. Under this rule the three-point
radial Laplacian is exactly the negative discrete derivative of the
staggered Dirichlet form, so discrete energies and their gradients agree.
The "corrected" rule adds Euler-Maclaurin end corrections and is fourth
order for smooth even integrands; it serves as an independent check.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DegenerateInputError, DomainError

MAX_NODES = 1 << 27
RULES = ("lumped", "corrected")


@dataclass(frozen=True)
class RadialGrid:
    """Nodes r_i = i h, i = 0..n, with h = r_max / n."""

    r_max: float
    n: int

    def __post_init__(self):
        r_max = float(self.r_max)
        if not (np.isfinite(r_max) and r_max > 0):
            raise DomainError(f"r_max must be finite and > 0, got {self.r_max!r}")
        if int(self.n) != self.n or self.n < 16:
            raise DomainError(f"n must be an integer >= 16, got {self.n!r}")
        if self.n > MAX_NODES:
            raise DomainError(f"n = {self.n} exceeds the supported maximum {MAX_NODES}")
        object.__setattr__(self, "r_max", r_max)
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return self.r_max / self.n

    @cached_property
    def r(self) -> np.ndarray:
        r = np.arange(self.n + 1) * self.h
        r[-1] = self.r_max
        r.flags.writeable = False
        return r

    @cached_property
    def _lumped(self) -> np.ndarray:
        h, n = self.h, self.n
        w = 2.0 * np.pi * h * self.r
        w[0] = np.pi * h * h / 4.0
        w[n] = np.pi * h * (self.r_max - h / 4.0)
        w.flags.writeable = False
        return w

    @cached_property
    def _corrected(self) -> np.ndarray:
        h, n, r = self.h, self.n, self.r
        w = 2.0 * np.pi * h * r
        w[0] = np.pi * h * h / 6.0
        w[n] = np.pi * h * r[n] * (1.0 - 1.0 / 6.0)
        w[n - 1] += np.pi * h * r[n - 1] / 6.0
        w.flags.writeable = False
        return w

    def weights(self, rule: str = "lumped") -> np.ndarray:
        """Quadrature weights W_i so that sum(W * g) approximates the plane integral."""
        if rule == "lumped":
            return self._lumped
        if rule == "corrected":
            return self._corrected
        raise DomainError(f"unknown quadrature rule {rule!r}; expected one of {RULES}")

    @cached_property
    def face_coefficients(self) -> np.ndarray:
        """2 pi r_{i+1/2} / h for the n cell faces."""
        c = 2.0 * np.pi * (self.r[:-1] + 0.5 * self.h) / self.h
        c.flags.writeable = False
        return c

    @cached_property
    def laplacian_coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        """(up, lo) with (L u)_i = up_i (u_{i+1} - u_i) - lo_i (u_i - u_{i-1}).

        Both have length n, one entry per unknown node i = 0..n-1.
        """
        c = self.face_coefficients
        w = self.weights("lumped")[:-1]
        up = c / w
        lo = np.zeros(self.n)
        lo[1:] = c[:-1] / w[1:]
        up.flags.writeable = False
        lo.flags.writeable = False
        return up, lo

    def refined(self, factor: int = 2) -> "RadialGrid":
        return refine(self, factor)

    def enlarged(self, factor: float = 2.0) -> "RadialGrid":
        """Same node count on a domain ``factor`` times wider."""
        return RadialGrid(self.r_max * factor, self.n)

    def describe(self) -> dict:
        return {"r_max": self.r_max, "n": self.n, "h": self.h}


def refine(grid: RadialGrid, factor: int = 2) -> RadialGrid:
    """Grid with ``factor`` times as many intervals on the same domain."""
    if int(factor) != factor or factor < 2:
        raise DomainError(f"refinement factor must be an integer >= 2, got {factor!r}")
    if grid.n * factor > MAX_NODES:
        raise DomainError(f"refining n = {grid.n} by {factor} overflows {MAX_NODES} nodes")
    return RadialGrid(grid.r_max, grid.n * int(factor))


def _samples(grid: RadialGrid, samples) -> np.ndarray:
    a = np.asarray(samples, dtype=float)
    if a.shape != (grid.n + 1,):
        raise DomainError(f"expected {grid.n + 1} samples, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("samples must be finite")
    return a


def integrate(grid: RadialGrid, samples, rule: str = "lumped") -> float:
    """Plane integral of a radial function given by its nodal samples."""
    return float(np.dot(grid.weights(rule), _samples(grid, samples)))


class Profile:
    """Radial function on a grid with u(r_max) = 0.

    Values are copied and frozen. A last sample that is not negligible
    relative to the profile's maximum is rejected; a negligible one is
    replaced by an exact zero.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: RadialGrid, values):
        u = np.array(_samples(grid, values), dtype=float)
        scale = float(np.max(np.abs(u))) if u.size else 0.0
        if abs(u[-1]) > 1e-10 * scale:
            raise DomainError(f"profile must vanish at r_max, got u(r_max) = {u[-1]!r}")
        u[-1] = 0.0
        u.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", u)

    def __setattr__(self, name, value):
        raise AttributeError("Profile is immutable")

    def __reduce__(self):
        return (Profile, (self.grid, np.array(self.values)))

    def __repr__(self) -> str:
        return f"Profile(r_max={self.grid.r_max!r}, n={self.grid.n}, u0={self.values[0]!r})"

    @classmethod
    def from_function(cls, grid: RadialGrid, fn) -> "Profile":
        """Sample ``fn`` at the nodes, forcing the boundary value to zero."""
        u = np.array(fn(np.asarray(grid.r)), dtype=float)
        u[-1] = 0.0
        return cls(grid, u)

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    def scaled(self, c: float) -> "Profile":
        return Profile(self.grid, c * self.values)

    def spline(self) -> CubicSpline:
        """Cubic interpolant with u'(0) = 0."""
        return CubicSpline(self.grid.r, self.values, bc_type=((1, 0.0), (2, 0.0)))

    def interpolate(self, grid: RadialGrid) -> "Profile":
        """Resample onto another grid; zero outside the original domain."""
        rr = np.asarray(grid.r)
        u = np.zeros(grid.n + 1)
        inside = rr < self.grid.r_max
        u[inside] = self.spline()(rr[inside])
        u[-1] = 0.0
        return Profile(grid, u)

    def refined(self, factor: int = 2) -> "Profile":
        return self.interpolate(refine(self.grid, factor))


def _d1_fourth_order(u: np.ndarray, h: float) -> np.ndarray:
    # even extension at r = 0, odd extension at r_max
    ext = np.concatenate([u[2:0:-1], u, -u[-2:-4:-1]])
    i = np.arange(u.size) + 2
    return (-ext[i + 2] + 8.0 * ext[i + 1] - 8.0 * ext[i - 1] + ext[i - 2]) / (12.0 * h)


def gradient_sq_integral(p: Profile, rule: str = "lumped") -> float:
    """Plane integral of |u'|^2.

    The lumped rule differences across each cell face, weighted by the face
    circumference; u'(0) = 0 is implicit because no face sits at r = 0.
    The corrected rule uses fourth-order nodal differences with the
    corrected weights.
    """
    g = p.grid
    if rule == "lumped":
        du = np.diff(p.values)
        return float(np.dot(g.face_coefficients, du * du))
    w = g.weights(rule)
    d = _d1_fourth_order(p.values, g.h)
    return float(np.dot(w, d * d))


def laplacian_values(grid: RadialGrid, u: np.ndarray) -> np.ndarray:
    """Three-point radial Laplacian of raw samples; zero at the boundary node."""
    c = grid.face_coefficients
    w = grid.weights("lumped")
    flux = c * np.diff(u)
    out = np.zeros(grid.n + 1)
    out[0] = flux[0] / w[0]
    out[1:-1] = (flux[1:] - flux[:-1]) / w[1:-1]
    return out


def apply_radial_laplacian(p: Profile) -> np.ndarray:
    """u'' + u'/r at the nodes, 4 (u_1 - u_0)/h^2 at the origin, 0 at r_max."""
    return laplacian_values(p.grid, p.values)


def l2_norm(p: Profile, rule: str = "lumped") -> float:
    u = p.values
    return float(np.sqrt(np.dot(p.grid.weights(rule), u * u)))


def normalize(p: Profile) -> Profile:
    nrm = l2_norm(p)
    if nrm == 0.0:
        raise DegenerateInputError("cannot normalize the zero profile")
    return Profile(p.grid, p.values / nrm)


def half_mass_radius(p: Profile) -> float:
    """Radius enclosing half of the squared norm, linearly interpolated."""
    u = p.values
    m = np.cumsum(p.grid.weights() * u * u)
    if m[-1] == 0.0:
        raise DegenerateInputError("zero profile has no half-mass radius")
    return float(np.interp(0.5 * m[-1], m, p.grid.r))


def write_profile(path, p: Profile) -> None:
    """Checkpoint file: ``# r_max=... n=...`` header then ``r u`` rows."""
    g = p.grid
    lines = [f"# r_max={g.r_max!r} n={g.n}"]
    lines.extend(f"{r:.17g} {u:.17g}" for r, u in zip(g.r, p.values))
    Path(path).write_text("\n".join(lines) + "\n")


def read_profile(path) -> Profile:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("#"):
        raise DomainError(f"{path}: missing '# r_max=... n=...' header")
    fields = dict(kv.split("=", 1) for kv in text[0][1:].split())
    try:
        grid = RadialGrid(float(fields["r_max"]), int(fields["n"]))
    except (KeyError, ValueError) as exc:
        raise DomainError(f"{path}: malformed header {text[0]!r}") from exc
    data = np.loadtxt(text[1:], ndmin=2)
    if data.shape != (grid.n + 1, 2):
        raise DomainError(f"{path}: expected {grid.n + 1} rows of 'r u', got {data.shape}")
    if not np.allclose(data[:, 0], grid.r, rtol=0, atol=1e-12 * grid.r_max):
        raise DomainError(f"{path}: node positions do not match the header grid")
    return Profile(grid, data[:, 1])
