"""Pseudospectral lab for dispersive equations with fractional dissipation."""

from .errors import BlowUpError, DataError, DiagnosticError, ParameterError, SweepError
from .evolution import EquationSpec, Family, SolverConfig, evolve
from .spectral import PeriodicGrid, make_grid

__version__ = "0.1.0"
