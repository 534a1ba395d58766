"""Ground states and virial diagnostics for the 2D radial nonlinear
Schrodinger eigenvalue problem  u'' + u'/r + Gamma f(u^2) u = lambda u."""
from .errors import DegenerateInputError, DomainError, NumericalFailure
from .grid import Profile, RadialGrid
from .model import Kind, Nonlinearity

__version__ = "0.1.0"

__all__ = [
    "DegenerateInputError",
    "DomainError",
    "Kind",
    "Nonlinearity",
    "NumericalFailure",
    "Profile",
    "RadialGrid",
]
