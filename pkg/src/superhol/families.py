"""
Built-in registries: matrix groups, analytic geometry families and scenarios.

Every family supplies analytic cocycle generators, fundamental vector fields
and action differentials so that the registry scenarios do not depend on
finite differences of the action.
"""

from __future__ import annotations

import copy
import logging
import math
from typing import Any, Callable, Dict, List, Mapping, Sequence, Tuple

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .exceptions import RegistryError, SchemaError
from .forms import FormValue
from .geometry import ActionModel, Chart, ConnectionModel, EquivariantGeometry, GroupModel

logger = logging.getLogger(__name__)

Path = Tuple[Any, ...]

_J = np.array([[0.0, -1.0], [1.0, 0.0]], dtype=complex)
_SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def _rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


# ---------------------------------------------------------------------------
# Groups


def _u1() -> GroupModel:
    return GroupModel("U(1)", (np.array([[1j]]),), exp_map=np.exp)


def _so2() -> GroupModel:
    def exp_map(X: np.ndarray) -> np.ndarray:
        return _rotation(float(X[1, 0].real)).astype(complex)

    return GroupModel("SO(2)", (_J,), exp_map=exp_map)


def _t2() -> GroupModel:
    def exp_map(X: np.ndarray) -> np.ndarray:
        return np.diag(np.exp(np.diag(X)))

    return GroupModel("T2", (np.diag([1j, 0]), np.diag([0, 1j])), exp_map=exp_map)


def _su2() -> GroupModel:
    basis = tuple(1j * s for s in _SIGMA)
    return GroupModel("SU(2)", basis, special_elements={"weyl": 1j * _SIGMA[1]})


GROUPS: Dict[str, Callable[[], GroupModel]] = {
    "U(1)": _u1,
    "SO(2)": _so2,
    "T2": _t2,
    "SU(2)": _su2,
}

# abelian groups: phases of a group element and rates of a Lie algebra element
_PHASES: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "U(1)": lambda g: np.array([np.angle(g[0, 0])]),
    "SO(2)": lambda g: np.array([math.atan2(g[1, 0].real, g[0, 0].real)]),
    "T2": lambda g: np.angle(np.diag(g)),
}
_RATES: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "U(1)": lambda X: np.array([X[0, 0].imag]),
    "SO(2)": lambda X: np.array([X[1, 0].real]),
    "T2": lambda X: np.diag(X).imag,
}


def get_group(name: str) -> GroupModel:
    try:
        return GROUPS[name]()
    except KeyError:
        raise RegistryError(f"unknown group {name!r}; known groups: {', '.join(sorted(GROUPS))}") from None


def circle_angle(group: GroupModel, g: np.ndarray) -> float:
    """Rotation angle of an element of a circle group."""
    return float(_PHASES[group.name](np.atleast_2d(g))[0])


def circle_rate(group: GroupModel, X: np.ndarray) -> float:
    return float(_RATES[group.name](np.atleast_2d(X))[0])


# ---------------------------------------------------------------------------
# Parameter helpers


def _param(spec: Mapping[str, Any], key: str, path: Path, kind: type, default: Any = None) -> Any:
    if key not in spec:
        if default is None:
            raise SchemaError.at(path + (key,), "required parameter is missing")
        return default
    value = spec[key]
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind is str and isinstance(value, str):
        return value
    raise SchemaError.at(path + (key,), f"expected {kind.__name__}, got {type(value).__name__}")


def _circle_group(spec: Mapping[str, Any], path: Path, default: str) -> GroupModel:
    name = _param(spec, "group", path, str, default)
    if name not in ("U(1)", "SO(2)"):
        raise SchemaError.at(path + ("group",), f"family needs a circle group (U(1) or SO(2)), got {name!r}")
    return get_group(name)


# ---------------------------------------------------------------------------
# Families


def point_representation(spec: Mapping[str, Any], path: Path = (), tolerances: Tolerances = DEFAULT_TOLERANCES) -> EquivariantGeometry:
    """M = pt with V a representation of the group.

    Abelian groups take integer ``weights`` (pairs for T2); SU(2) acts by its
    defining representation.
    """
    group = get_group(_param(spec, "group", path, str, "U(1)"))

    if group.name == "SU(2)":
        rank = 2

        def cocycle(g, p):
            return g

        def generator(X, p):
            return X

        weights: List[Any] = []
    else:
        raw = spec.get("weights")
        if not isinstance(raw, list) or not raw:
            raise SchemaError.at(path + ("weights",), "expected a non-empty list of integer weights")
        width = 2 if group.name == "T2" else 1
        try:
            weight_matrix = np.array(raw, dtype=int).reshape(len(raw), width)
        except (TypeError, ValueError):
            raise SchemaError.at(path + ("weights",), f"weights for {group.name} must be integers{' pairs' if width == 2 else ''}") from None
        if not np.array_equal(weight_matrix, np.array(raw, dtype=float).reshape(len(raw), width)):
            raise SchemaError.at(path + ("weights",), "weights must be integers")
        rank = len(raw)
        weights = weight_matrix.tolist()
        phases, rates = _PHASES[group.name], _RATES[group.name]

        def cocycle(g, p):
            return np.diag(np.exp(1j * (weight_matrix @ phases(g))))

        def generator(X, p):
            return np.diag(1j * (weight_matrix @ rates(X)))

    zero = FormValue.zero(0, rank)
    return EquivariantGeometry(
        name=f"point-{group.name}",
        chart=Chart.point(),
        group=group,
        action=ActionModel(
            act=lambda g, p: p,
            cocycle=cocycle,
            cocycle_generator=generator,
            vector_field=lambda X, p: np.zeros(0),
            differential=lambda g, p: np.zeros((0, 0)),
        ),
        connection=ConnectionModel(lambda p: zero, lambda p: zero),
        fiber_rank=rank,
        tolerances=tolerances,
        description=f"point with {group.name} representation",
        parameters={"group": group.name, "weights": weights},
    )


def monopole(spec: Mapping[str, Any], path: Path = (), tolerances: Tolerances = DEFAULT_TOLERANCES) -> EquivariantGeometry:
    """Charge-n line bundle on S^2 in a stereographic chart, rotated about the z-axis.

    ``chart="south"`` projects from the north pole (its origin is the south
    pole, orientation -1); ``chart="north"`` projects from the south pole.
    The fiber over the south pole has weight ``lift``, over the north pole
    ``lift + charge``.
    """
    n = _param(spec, "charge", path, int)
    lift = _param(spec, "lift", path, int, 0)
    side = _param(spec, "chart", path, str, "south")
    radius = _param(spec, "radius", path, float, 40.0)
    resolution = _param(spec, "grid", path, int, tolerances.default_grid)
    if side not in ("south", "north"):
        raise SchemaError.at(path + ("chart",), f"chart must be 'south' or 'north', got {side!r}")
    if radius <= 0:
        raise SchemaError.at(path + ("radius",), "radius must be positive")
    group = _circle_group(spec, path, "SO(2)")
    sign = 1.0 if side == "south" else -1.0
    weight = lift if side == "south" else lift + n

    def connection_form(p):
        x, y = p
        scale = sign * 1j * n / (1.0 + x * x + y * y)
        return FormValue.one_form([np.array([[-scale * y]]), np.array([[scale * x]])])

    def curvature(p):
        r2 = float(p @ p)
        return FormValue.from_terms(2, {0b11: sign * 2j * n / (1.0 + r2) ** 2}, d=1)

    def density(points):
        r2 = np.sum(points * points, axis=1)
        return (sign * 2j * n / (1.0 + r2) ** 2).reshape(-1, 1, 1)

    return EquivariantGeometry(
        name=f"monopole-{side}",
        chart=Chart.box(radius, 2, grid_resolution=resolution, label=f"stereographic-{side}", orientation=-1 if side == "south" else 1),
        group=group,
        action=_rotation_action(group, 1, weight),
        connection=ConnectionModel(connection_form, curvature, density),
        fiber_rank=1,
        tolerances=tolerances,
        description=f"charge {n} monopole on S^2, {side} chart",
        parameters={"charge": n, "lift": lift, "chart": side, "radius": radius},
    )


def weighted_plane(spec: Mapping[str, Any], path: Path = (), tolerances: Tolerances = DEFAULT_TOLERANCES) -> EquivariantGeometry:
    """C = R^2 with U(1) rotating by weight w and A = (ik/2)(x dy - y dx)."""
    w = _param(spec, "weight", path, int, 1)
    k = _param(spec, "field", path, float, 1.0)
    fiber_weight = _param(spec, "fiber_weight", path, int, 0)
    radius = _param(spec, "radius", path, float, 2.0)
    resolution = _param(spec, "grid", path, int, tolerances.default_grid)
    if radius <= 0:
        raise SchemaError.at(path + ("radius",), "radius must be positive")
    group = _circle_group(spec, path, "U(1)")

    def connection_form(p):
        x, y = p
        return FormValue.one_form([np.array([[-0.5j * k * y]]), np.array([[0.5j * k * x]])])

    field_strength = FormValue.from_terms(2, {0b11: 1j * k}, d=1)

    return EquivariantGeometry(
        name="weighted-plane",
        chart=Chart.box(radius, 2, grid_resolution=resolution, label="plane"),
        group=group,
        action=_rotation_action(group, w, fiber_weight),
        connection=ConnectionModel(
            connection_form,
            lambda p: field_strength,
            lambda points: np.full((len(points), 1, 1), 1j * k),
        ),
        fiber_rank=1,
        tolerances=tolerances,
        description=f"plane with weight-{w} rotation and field strength {k:g}",
        parameters={"weight": w, "field": k, "fiber_weight": fiber_weight, "radius": radius},
    )


def _rotation_action(group: GroupModel, speed: int, fiber_weight: int) -> ActionModel:
    """Rotation of R^2 by speed * angle(g); fiber multiplied by e^{i fiber_weight angle(g)}."""

    def act(g, p):
        return _rotation(speed * circle_angle(group, g)) @ p

    def differential(g, p):
        return _rotation(speed * circle_angle(group, g))

    def vector_field(X, p):
        return speed * circle_rate(group, X) * np.array([-p[1], p[0]])

    def cocycle(g, p):
        return np.array([[np.exp(1j * fiber_weight * circle_angle(group, g))]])

    def generator(X, p):
        return np.array([[1j * fiber_weight * circle_rate(group, X)]])

    return ActionModel(act, cocycle, cocycle_generator=generator, vector_field=vector_field, differential=differential)


FAMILIES: Dict[str, Callable[..., EquivariantGeometry]] = {
    "point-representation": point_representation,
    "monopole": monopole,
    "weighted-plane": weighted_plane,
}


def build_geometry(spec: Mapping[str, Any], path: Path = (), tolerances: Tolerances = DEFAULT_TOLERANCES) -> EquivariantGeometry:
    """Instantiate ``{"family": name, ...parameters}``."""
    if not isinstance(spec, Mapping):
        raise SchemaError.at(path, "geometry must be an object")
    family = _param(spec, "family", path, str)
    try:
        builder = FAMILIES[family]
    except KeyError:
        raise RegistryError(f"unknown family {family!r}; known families: {', '.join(sorted(FAMILIES))}") from None
    geometry = builder(spec, path, tolerances)
    logger.debug("built geometry %s from %s", geometry.name, dict(spec))
    return geometry


# ---------------------------------------------------------------------------
# Built-in scenarios

BUILTIN_SCENARIOS: Dict[str, Dict[str, Any]] = {
    "point-u1-weights": {
        "name": "point-u1-weights",
        "description": "M = pt, G = U(1), V = weights 1, 2, -3: characters, axioms, holonomy",
        "geometries": {
            "point": {"family": "point-representation", "group": "U(1)", "weights": [1, 2, -3]},
        },
        "checks": [
            {"kind": "character", "samples": 20},
            {"kind": "closedness", "g": {"coords": [0.7]}, "X": [0.3], "stratum": {"point": []}},
            {"kind": "axiom1", "h": {"coords": [1.1]}, "g": {"coords": [0.7]}, "X": [0.3], "stratum": {"point": []}},
            {"kind": "axiom2", "g": {"coords": [0.7]}, "X": [0.4], "Y": [0.3], "eps": [1e-2, 1e-3], "stratum": {"point": []}},
            {"kind": "equivariant-holonomy", "h": {"coords": [0.7]}, "a": [0.3], "point": []},
            {"kind": "infinitesimal", "a": [0.3], "point": [], "eps": [1e-2, 5e-3, 2.5e-3]},
            {"kind": "borel-taylor", "X": [0.3], "point": [], "order": 3},
        ],
    },
    "point-su2-diagonal": {
        "name": "point-su2-diagonal",
        "description": "M = pt, G = SU(2), V = C^2: diagonal characters and Weyl conjugation",
        "geometries": {"point": {"family": "point-representation", "group": "SU(2)"}},
        "checks": [
            {"kind": "character", "samples": 20, "direction": [0, 0, 1]},
            {"kind": "axiom1", "h": {"special": "weyl"}, "g": {"coords": [0, 0, 0.7]}, "X": [0, 0, 0.3], "stratum": {"point": []}},
            {"kind": "axiom2", "g": {"coords": [0, 0, 0.7]}, "X": [0, 0, 0.4], "Y": [0, 0, 0.3], "eps": [1e-2, 1e-3], "stratum": {"point": []}},
            {"kind": "equivariant-holonomy", "h": {"coords": [0, 0, 0.7]}, "a": [0, 0, 0.3], "point": []},
        ],
    },
    "monopole-s2": {
        "name": "monopole-s2",
        "description": "charge-1 monopole on S^2 with SO(2) rotations; strata are the poles",
        "geometries": {
            "south": {"family": "monopole", "charge": 1, "lift": 1, "chart": "south", "radius": 40.0},
            "north": {"family": "monopole", "charge": 1, "lift": 1, "chart": "north", "radius": 40.0},
            "south-local": {"family": "monopole", "charge": 1, "lift": 1, "chart": "south", "radius": 2.5},
        },
        "checks": [
            {"kind": "chern-number", "geometry": "south", "grid": 400},
            {"kind": "chern-number", "geometry": "north", "grid": 400},
            {"kind": "closedness", "geometry": "south-local", "g": "identity", "X": [0.5], "grid": 64},
            {"kind": "invariance", "geometry": "south-local", "g": {"coords": [0.9]}},
            {"kind": "super-holonomy", "geometry": "south-local", "points": [[0.0, 0.0], [0.3, -0.2]]},
            {"kind": "equivariant-holonomy", "geometry": "south", "h": {"coords": [0.9]}, "a": [0.4], "point": [0.0, 0.0]},
            {"kind": "equivariant-holonomy", "geometry": "north", "h": {"coords": [0.9]}, "a": [0.4], "point": [0.0, 0.0]},
            {"kind": "axiom1", "geometry": "south-local", "h": {"coords": [1.3]}, "g": "identity", "X": [0.5], "stratum": "identity"},
            {"kind": "axiom2", "geometry": "south", "g": {"coords": [0.9]}, "X": [0.4], "Y": [0.2], "eps": [1e-2, 1e-3], "stratum": {"point": [0.0, 0.0]}},
            {"kind": "axiom2", "geometry": "north", "g": {"coords": [0.9]}, "X": [0.4], "Y": [0.2], "eps": [1e-2, 1e-3], "stratum": {"point": [0.0, 0.0]}},
        ],
    },
    "weighted-c-plane": {
        "name": "weighted-c-plane",
        "description": "C with weight-2 U(1) rotation and A = (ik/2)(x dy - y dx)",
        "geometries": {"plane": {"family": "weighted-plane", "weight": 2, "field": 1.0, "radius": 2.0}},
        "checks": [
            {"kind": "closedness", "g": "identity", "X": [0.5], "grid": 64},
            {"kind": "invariance", "g": {"coords": [0.8]}},
            {"kind": "super-holonomy", "points": [[0.0, 0.0], [0.4, 0.1]]},
            {"kind": "equivariant-holonomy", "h": {"coords": [0.8]}, "a": [0.3], "point": [0.0, 0.0]},
            {"kind": "infinitesimal", "a": [0.5], "point": [0.3, 0.2]},
            {"kind": "axiom1", "h": {"coords": [1.2]}, "g": "identity", "X": [0.5], "stratum": "identity"},
            {"kind": "ode-hygiene", "points": [[-1.5, 1.5], [1.5, -0.5]]},
        ],
    },
}


def builtin_scenario(name: str) -> Dict[str, Any]:
    try:
        return copy.deepcopy(BUILTIN_SCENARIOS[name])
    except KeyError:
        raise RegistryError(f"unknown scenario {name!r}; known scenarios: {', '.join(sorted(BUILTIN_SCENARIOS))}") from None
