"""Pseudospectral Euler-Maxwell and resistive MHD solvers on the periodic box,
with diagnostics for the zero-dielectric-constant limit."""

from .eos import EosClosure, EosDomainError
from .monitors import PositivityError
from .spectral import TorusField, TorusGrid

__version__ = "0.1.0"

__all__ = [
    "EosClosure",
    "EosDomainError",
    "PositivityError",
    "TorusField",
    "TorusGrid",
    "__version__",
]
