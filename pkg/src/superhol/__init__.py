"""
superhol

Equivariant super parallel transport, super holonomy and the bouquet of
Chern characters, computed numerically in charts.
"""

__version__ = "0.1.0"

from .chern import BouquetEntry, bouquet_axiom1, bouquet_axiom2, chern_character, equivariant_differential, integrate_top_form
from .config import DEFAULT_TOLERANCES, Normalization, Tolerances
from .exceptions import SuperholError
from .families import build_geometry, builtin_scenario, get_group
from .forms import FormValue, TangentVector
from .geometry import Chart, EquivariantGeometry, FixedStratum, GroupModel
from .grassmann import GrassmannElement, GrassmannMatrix, SuperFunction, SuperPoint11
from .transport import SuperPath, TransportProblem, equivariant_holonomy_ode, integrate_parallel, super_holonomy_constant

__all__ = [
    "BouquetEntry",
    "Chart",
    "DEFAULT_TOLERANCES",
    "EquivariantGeometry",
    "FixedStratum",
    "FormValue",
    "GrassmannElement",
    "GrassmannMatrix",
    "GroupModel",
    "Normalization",
    "SuperFunction",
    "SuperPath",
    "SuperPoint11",
    "SuperholError",
    "TangentVector",
    "Tolerances",
    "TransportProblem",
    "bouquet_axiom1",
    "bouquet_axiom2",
    "build_geometry",
    "builtin_scenario",
    "chern_character",
    "equivariant_differential",
    "equivariant_holonomy_ode",
    "get_group",
    "integrate_parallel",
    "integrate_top_form",
    "super_holonomy_constant",
]
