"""Numerical lab for the anisotropic Ginzburg-Landau energy

    E_eps(u) = (K1/2)∫(div u)^2 + (K3/2)∫(curl u)^2 + (1/4eps^2)∫(1-|u|^2)^2,
    K1 = 1 + delta, K3 = 1 - delta,

with boundary data of negative degree: minimisers, vortex diagnostics,
Pohozaev residuals and the degree costs C_delta^d.
"""

__version__ = "0.1.0"

from .fields import (AnisotropyParams, BoundaryDatum, ComplexField, ConfigurationError,
                     DegreeUndefinedError, Grid, GridSpec, boundary_datum, make_grid,
                     winding_number)
from .energy import EnergyReport, el_gradient, energy_report
from .minimize import SolveOptions, SolveResult, continuation, init_competitor, minimize
from .vortices import assign_degrees, detect_vortices, separation_stats
from .pohozaev import disc_inequality_check, pohozaev_disc
from .cdelta import (DegreeCostTable, ReducedProfile, annulus_minimize, cdelta_slope,
                     el_ode_residual, k_partition, minimize_reduced, reduced_functional)

__all__ = [
    "AnisotropyParams", "BoundaryDatum", "ComplexField", "ConfigurationError",
    "DegreeUndefinedError", "Grid", "GridSpec", "boundary_datum", "make_grid", "winding_number",
    "EnergyReport", "el_gradient", "energy_report",
    "SolveOptions", "SolveResult", "continuation", "init_competitor", "minimize",
    "assign_degrees", "detect_vortices", "separation_stats",
    "disc_inequality_check", "pohozaev_disc",
    "DegreeCostTable", "ReducedProfile", "annulus_minimize", "cdelta_slope", "el_ode_residual",
    "k_partition", "minimize_reduced", "reduced_functional",
]
