"""Two-temperature thermoelasticity as discrete evolutionary equations.

The state ``U = (v, sigma, theta, w)`` solves ``(d/dt M0 + M1 + A) U = J`` on a
staggered 1D or 2D grid. See :mod:`evotherm.assembly` for the model variants
and :mod:`evotherm.solver` for time stepping and field recovery.
"""

from .assembly import (
    VARIANTS,
    BlockSystem,
    WellPosednessCertificate,
    assemble,
    assemble_classical_limit,
    assemble_two_strain,
    assemble_two_temperature,
    assemble_yosida,
    check_wellposedness,
    gauss_transform,
)
from .material import MaterialData, default_material, material_from_parameters
from .operators import Grid, build_Div, build_div, build_Grad, build_grad
from .scenario import Scenario, load_scenario, parse_scenario
from .solver import (
    RecoveredFields,
    TimeAxis,
    Trajectory,
    causal_integral,
    original_form_oracle,
    recover_fields,
    solve,
    weighted_norm,
)

__version__ = "0.1.0"

__all__ = [
    "VARIANTS", "BlockSystem", "WellPosednessCertificate", "assemble", "assemble_classical_limit",
    "assemble_two_strain", "assemble_two_temperature", "assemble_yosida", "check_wellposedness",
    "gauss_transform", "MaterialData", "default_material", "material_from_parameters", "Grid",
    "build_Div", "build_div", "build_Grad", "build_grad", "Scenario", "load_scenario",
    "parse_scenario", "RecoveredFields", "TimeAxis", "Trajectory", "causal_integral",
    "original_form_oracle", "recover_fields", "solve", "weighted_norm",
]
