"""
Scenario documents and the check runner.

A scenario is a JSON object::

    {
      "name": "...",
      "description": "...",
      "geometries": {"<label>": {"family": "...", ...parameters}},
      "checks": [{"kind": "...", "geometry": "<label>", ...parameters}],
      "output": {"directory": "...", "formats": ["json", "csv"], "tolerances": {...}}
    }

Schema violations raise ``SchemaError`` with the JSON pointer of the offending
field. Numeric trouble inside a check is recorded as a failed check.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import chern, transport
from .config import DEFAULT_TOLERANCES, Normalization, Tolerances
from .exceptions import RegistryError, SchemaError, SuperholError, ValidationError
from .families import BUILTIN_SCENARIOS, FAMILIES, build_geometry, builtin_scenario
from .forms import from_grassmann, to_grassmann
from .geometry import (
    EquivariantGeometry,
    FixedStratum,
    GroupModel,
    check_invariance,
    identity_stratum,
    point_stratum,
)
from .grassmann import GrassmannMatrix

logger = logging.getLogger(__name__)

JsonPath = Tuple[Any, ...]

CHECK_KINDS = (
    "character",
    "closedness",
    "axiom1",
    "axiom2",
    "equivariant-holonomy",
    "super-holonomy",
    "infinitesimal",
    "borel-taylor",
    "chern-number",
    "invariance",
    "ode-hygiene",
)
FORMATS = ("json", "csv")
_TOLERANCE_FIELDS = {f.name for f in fields(Tolerances)}


# ---------------------------------------------------------------------------
# Documents


@dataclass(frozen=True)
class CheckSpec:
    index: int
    kind: str
    geometry: str
    params: Mapping[str, Any]

    @property
    def name(self) -> str:
        return f"{self.index:02d}-{self.kind}@{self.geometry}"

    @property
    def path(self) -> JsonPath:
        return ("checks", self.index)


@dataclass(frozen=True)
class OutputSettings:
    directory: Optional[str] = None
    formats: Tuple[str, ...] = FORMATS
    tolerances: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    geometries: Mapping[str, Mapping[str, Any]]
    checks: Tuple[CheckSpec, ...]
    output: OutputSettings = OutputSettings()
    source: str = "<memory>"


def _require_mapping(value: Any, path: JsonPath, what: str) -> Mapping[str, Any]:
    if not isinstance(value, Mapping):
        raise SchemaError.at(path, f"{what} must be an object")
    return value


def _parse_output(raw: Any) -> OutputSettings:
    if raw is None:
        return OutputSettings()
    raw = _require_mapping(raw, ("output",), "output")
    directory = raw.get("directory")
    if directory is not None and not isinstance(directory, str):
        raise SchemaError.at(("output", "directory"), "expected a string")
    formats = raw.get("formats", list(FORMATS))
    if not isinstance(formats, list) or any(f not in FORMATS for f in formats):
        raise SchemaError.at(("output", "formats"), f"formats must be a list drawn from {list(FORMATS)}")
    tolerances = dict(_require_mapping(raw.get("tolerances", {}), ("output", "tolerances"), "tolerances"))
    for key, value in tolerances.items():
        if key not in _TOLERANCE_FIELDS:
            raise SchemaError.at(("output", "tolerances", key), "unknown tolerance")
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
            raise SchemaError.at(("output", "tolerances", key), "tolerances must be positive numbers")
    return OutputSettings(directory, tuple(formats), tolerances)


def parse_scenario(document: Any, source: str = "<memory>") -> Scenario:
    """Validate a decoded scenario document."""
    document = _require_mapping(document, (), "scenario")
    name = document.get("name")
    if not isinstance(name, str) or not name:
        raise SchemaError.at(("name",), "required string field is missing")
    description = document.get("description", "")
    if not isinstance(description, str):
        raise SchemaError.at(("description",), "expected a string")

    geometries = _require_mapping(document.get("geometries"), ("geometries",), "geometries")
    if not geometries:
        raise SchemaError.at(("geometries",), "at least one geometry is required")
    for label, spec in geometries.items():
        spec = _require_mapping(spec, ("geometries", label), "geometry")
        family = spec.get("family")
        if not isinstance(family, str):
            raise SchemaError.at(("geometries", label, "family"), "required string field is missing")
        if family not in FAMILIES:
            raise RegistryError(f"unknown family {family!r} at /geometries/{label}/family")

    raw_checks = document.get("checks")
    if not isinstance(raw_checks, list):
        raise SchemaError.at(("checks",), "expected a list of checks")
    checks = []
    for index, raw in enumerate(raw_checks):
        raw = _require_mapping(raw, ("checks", index), "check")
        kind = raw.get("kind")
        if kind not in CHECK_KINDS:
            raise SchemaError.at(("checks", index, "kind"), f"unknown check kind {kind!r}")
        geometry = raw.get("geometry")
        if geometry is None:
            if len(geometries) != 1:
                raise SchemaError.at(("checks", index, "geometry"), "required when the scenario has several geometries")
            geometry = next(iter(geometries))
        if geometry not in geometries:
            raise SchemaError.at(("checks", index, "geometry"), f"unknown geometry {geometry!r}")
        params = {k: v for k, v in raw.items() if k not in ("kind", "geometry")}
        checks.append(CheckSpec(index, kind, geometry, params))

    return Scenario(name, description, dict(geometries), tuple(checks), _parse_output(document.get("output")), source)


def load_scenario(reference: Union[str, Path]) -> Scenario:
    """Load a scenario file, or a built-in scenario by name."""
    path = Path(reference)
    if path.is_file():
        try:
            document = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg}", "", exc.lineno, exc.colno) from exc
        return parse_scenario(document, str(path))
    return parse_scenario(builtin_scenario(str(reference)), f"builtin:{reference}")


def discover_scenarios(registry: Optional[Union[str, Path]] = None) -> Dict[str, Dict[str, str]]:
    """Built-in scenarios plus every parsable ``*.json`` scenario in ``registry``."""
    listing = {
        name: {"description": doc.get("description", ""), "source": "builtin"}
        for name, doc in BUILTIN_SCENARIOS.items()
    }
    if registry is not None:
        for path in sorted(Path(registry).glob("*.json")):
            try:
                scenario = load_scenario(path)
            except (SchemaError, RegistryError) as exc:
                logger.warning("skipping %s: %s", path, exc)
                continue
            listing[scenario.name] = {"description": scenario.description, "source": str(path)}
    return dict(sorted(listing.items()))


# ---------------------------------------------------------------------------
# Parameter parsing


def _number(value: Any, path: JsonPath) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise SchemaError.at(path, "expected a finite number")
    return float(value)


def _vector(value: Any, path: JsonPath, length: Optional[int] = None) -> np.ndarray:
    if not isinstance(value, list):
        raise SchemaError.at(path, "expected a list of numbers")
    vector = np.array([_number(v, path + (i,)) for i, v in enumerate(value)], dtype=float)
    if length is not None and vector.size != length:
        raise SchemaError.at(path, f"expected {length} numbers, got {vector.size}")
    return vector


def _positive_int(value: Any, path: JsonPath) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise SchemaError.at(path, "expected a positive integer")
    return value


def parse_group_element(group: GroupModel, spec: Any, path: JsonPath) -> np.ndarray:
    """``"identity"``, ``{"coords": [...]}`` (exp of the algebra element) or ``{"special": name}``."""
    if spec is None or spec == "identity":
        return group.identity()
    spec = _require_mapping(spec, path, "group element")
    if "coords" in spec:
        return group.exp(group.element(_vector(spec["coords"], path + ("coords",), group.dim)))
    if "special" in spec:
        try:
            return group.special(str(spec["special"]))
        except ValidationError as exc:
            raise SchemaError.at(path + ("special",), str(exc)) from None
    raise SchemaError.at(path, "expected 'identity', {'coords': [...]} or {'special': name}")


def parse_algebra_element(group: GroupModel, spec: Any, path: JsonPath) -> np.ndarray:
    if spec is None:
        return np.zeros((group.matrix_size, group.matrix_size), dtype=complex)
    return group.element(_vector(spec, path, group.dim))


def parse_stratum(geom: EquivariantGeometry, g: np.ndarray, spec: Any, path: JsonPath) -> FixedStratum:
    """``"identity"`` (the whole chart) or ``{"point": [...]}``."""
    if spec is None or spec == "identity":
        return identity_stratum(geom).with_element(g)
    spec = _require_mapping(spec, path, "stratum")
    if "point" in spec:
        return point_stratum(geom, g, _vector(spec["point"], path + ("point",), geom.dim))
    raise SchemaError.at(path, "expected 'identity' or {'point': [...]}")


# ---------------------------------------------------------------------------
# Results


@dataclass
class CheckResult:
    name: str
    kind: str
    status: str
    residual: Optional[float]
    tolerance: Optional[float]
    wall_time: float = 0.0
    detail: str = ""
    data: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_json(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "name": self.name,
            "kind": self.kind,
            "status": self.status,
            "residual": self.residual,
            "tolerance": self.tolerance,
        }
        if self.detail:
            payload["detail"] = self.detail
        if self.data:
            payload["data"] = self.data
        return payload


@dataclass
class RunReport:
    scenario: str
    results: List[CheckResult] = field(default_factory=list)
    artifacts: Dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def _largest(self, kind: str) -> Optional[float]:
        values = [r.residual for r in self.results if r.kind == kind and r.residual is not None]
        return max(values) if values else None

    def summary(self) -> Dict[str, Any]:
        chern_numbers = {
            r.name: r.data["value"] for r in self.results if r.kind == "chern-number" and "value" in r.data
        }
        return {
            "passed": sum(r.passed for r in self.results),
            "failed": sum(not r.passed for r in self.results),
            "closedness_max": self._largest("closedness"),
            "axiom1_residual": self._largest("axiom1"),
            "axiom2_residual": self._largest("axiom2"),
            "chern_number": chern_numbers or None,
        }

    def to_json(self, timings: bool = False) -> Dict[str, Any]:
        """Sorted-key report; wall times only when ``timings`` is set."""
        payload: Dict[str, Any] = {
            "scenario": self.scenario,
            "checks": [r.to_json() for r in self.results],
            "artifacts": dict(self.artifacts),
            "summary": self.summary(),
        }
        if timings:
            payload["timings"] = {r.name: round(r.wall_time, 6) for r in self.results}
        return payload


def _complex_json(value: complex) -> Dict[str, float]:
    return {"re": float(value.real), "im": float(value.imag)}


# ---------------------------------------------------------------------------
# Runner


@dataclass(frozen=True)
class RunOptions:
    steps: Optional[int] = None
    grid: Optional[int] = None
    normalization: Normalization = Normalization.RAW
    tolerance_scale: float = 1.0
    seed: int = 0
    out: Optional[Path] = None


@dataclass(frozen=True)
class _Outcome:
    residual: float
    tolerance: float
    passed: Optional[bool] = None
    data: Mapping[str, Any] = field(default_factory=dict)


class ScenarioRunner:
    """Executes the checks of one scenario in declaration order."""

    def __init__(self, scenario: Scenario, options: Optional[RunOptions] = None):
        self.scenario = scenario
        self.options = options or RunOptions()
        base = replace(DEFAULT_TOLERANCES, **scenario.output.tolerances)
        if self.options.grid is not None:
            base = replace(base, default_grid=self.options.grid)
        if self.options.steps is not None:
            base = replace(base, default_steps=self.options.steps)
        self.tolerances = base.scaled(self.options.tolerance_scale)
        self._geometries: Dict[str, EquivariantGeometry] = {}
        self._artifacts: Dict[str, str] = {}
        self._handlers: Dict[str, Callable[[EquivariantGeometry, CheckSpec], _Outcome]] = {
            "character": self._character,
            "closedness": self._closedness,
            "axiom1": self._axiom1,
            "axiom2": self._axiom2,
            "equivariant-holonomy": self._equivariant_holonomy,
            "super-holonomy": self._super_holonomy,
            "infinitesimal": self._infinitesimal,
            "borel-taylor": self._borel_taylor,
            "chern-number": self._chern_number,
            "invariance": self._invariance,
            "ode-hygiene": self._ode_hygiene,
        }

    @property
    def output_dir(self) -> Optional[Path]:
        if self.options.out is not None:
            return Path(self.options.out)
        if self.scenario.output.directory:
            return Path(self.scenario.output.directory)
        return None

    def geometry(self, label: str) -> EquivariantGeometry:
        if label not in self._geometries:
            self._geometries[label] = build_geometry(
                self.scenario.geometries[label], ("geometries", label), self.tolerances
            )
        return self._geometries[label]

    def run(self) -> RunReport:
        report = RunReport(self.scenario.name)
        logger.info("running scenario %s (%d checks)", self.scenario.name, len(self.scenario.checks))
        for spec in self.scenario.checks:
            report.results.append(self.run_check(spec))
        report.artifacts = dict(sorted(self._artifacts.items()))
        logger.info(
            "scenario %s: %d passed, %d failed",
            self.scenario.name,
            sum(r.passed for r in report.results),
            sum(not r.passed for r in report.results),
        )
        return report

    def run_check(self, spec: CheckSpec) -> CheckResult:
        geom = self.geometry(spec.geometry)
        started = time.perf_counter()
        try:
            outcome = self._handlers[spec.kind](geom, spec)
        except (SchemaError, RegistryError):
            raise
        except (SuperholError, FloatingPointError, np.linalg.LinAlgError) as exc:
            elapsed = time.perf_counter() - started
            logger.warning("check %s failed with %s: %s", spec.name, type(exc).__name__, exc)
            residual = getattr(exc, "residual", None)
            return CheckResult(spec.name, spec.kind, "fail", residual, None, elapsed, f"{type(exc).__name__}: {exc}")
        elapsed = time.perf_counter() - started
        passed = outcome.residual < outcome.tolerance if outcome.passed is None else outcome.passed
        result = CheckResult(
            spec.name,
            spec.kind,
            "pass" if passed else "fail",
            float(outcome.residual),
            float(outcome.tolerance),
            elapsed,
            data=dict(outcome.data),
        )
        logger.info(
            "%s %s: residual %.3e (tolerance %.1e) in %.3fs",
            result.status.upper(),
            spec.name,
            result.residual,
            result.tolerance,
            elapsed,
        )
        return result

    # -- parameter access ---------------------------------------------------

    def _group_element(self, geom: EquivariantGeometry, spec: CheckSpec, key: str) -> np.ndarray:
        return parse_group_element(geom.group, spec.params.get(key), spec.path + (key,))

    def _algebra(self, geom: EquivariantGeometry, spec: CheckSpec, key: str) -> np.ndarray:
        return parse_algebra_element(geom.group, spec.params.get(key), spec.path + (key,))

    def _point(self, geom: EquivariantGeometry, spec: CheckSpec, key: str = "point") -> np.ndarray:
        if key not in spec.params:
            if geom.dim:
                raise SchemaError.at(spec.path + (key,), "required parameter is missing")
            return np.zeros(0)
        return _vector(spec.params[key], spec.path + (key,), geom.dim)

    def _int(self, spec: CheckSpec, key: str, default: int) -> int:
        if key not in spec.params:
            return default
        return _positive_int(spec.params[key], spec.path + (key,))

    def _eps_list(self, spec: CheckSpec, default: Sequence[float]) -> List[float]:
        raw = spec.params.get("eps", list(default))
        values = _vector(raw if isinstance(raw, list) else [raw], spec.path + ("eps",))
        if not values.size or np.any(values < 0):
            raise SchemaError.at(spec.path + ("eps",), "expected non-negative values")
        return values.tolist()

    def _artifact(self, name: str, writer: Callable[[Path], Path]) -> None:
        directory = self.output_dir
        if directory is None or Path(name).suffix[1:] not in self.scenario.output.formats:
            return
        path = writer(directory / self.scenario.name / name)
        self._artifacts[name] = str(path.relative_to(directory))

    # -- checks -------------------------------------------------------------

    def _character(self, geom: EquivariantGeometry, spec: CheckSpec) -> _Outcome:
        count = self._int(spec, "samples", 20)
        rng = np.random.default_rng(self.options.seed + spec.index)
        samples = rng.uniform(-math.pi, math.pi, size=(count, 2))
        direction = spec.params.get("direction")
        if direction is not None:
            direction = _vector(direction, spec.path + ("direction",), geom.group.dim)
        rows = chern.character_table(geom, [tuple(s) for s in samples], direction, self._point(geom, spec))
        self._artifact(f"{spec.name}.csv", lambda path: chern.write_character_csv(path, rows))
        return _Outcome(max(row.error for row in rows), geom.tolerances.character, data={"samples": count})

    def _entry(self, geom: EquivariantGeometry, spec: CheckSpec, g: np.ndarray, X: np.ndarray) -> chern.BouquetEntry:
        stratum = parse_stratum(geom, g, spec.params.get("stratum"), spec.path + ("stratum",))
        return chern.chern_character(geom, g, X, stratum, self.options.normalization)

    def _closedness(self, geom: EquivariantGeometry, spec: CheckSpec) -> _Outcome:
        entry = self._entry(geom, spec, self._group_element(geom, spec, "g"), self._algebra(geom, spec, "X"))
        grid = self._int(spec, "grid", geom.tolerances.default_grid)
        if self.options.grid is not None:
            grid = self.options.grid
        report = chern.closedness_report(entry, grid)
        self._artifact(
            f"{spec.name}.csv",
            lambda path: chern.write_form_csv(path, entry, entry.stratum.sub_chart.interior_grid(min(grid, 9))),
        )
        return _Outcome(report.residual, report.tolerance, data={"points": report.points_checked, "worst_point": list(report.worst_point)})

    def _axiom1(self, geom: EquivariantGeometry, spec: CheckSpec) -> _Outcome:
        g = self._group_element(geom, spec, "g")
        h = self._group_element(geom, spec, "h")
        stratum = parse_stratum(geom, g, spec.params.get("stratum"), spec.path + ("stratum",))
        conjugate = None
        if "conjugate_stratum" in spec.params:
            hgh = h @ g @ geom.group.inverse(h)
            conjugate = parse_stratum(geom, hgh, spec.params["conjugate_stratum"], spec.path + ("conjugate_stratum",))
        report = chern.bouquet_axiom1(geom, h, g, self._algebra(geom, spec, "X"), stratum, conjugate)
        return _Outcome(report.residual, report.tolerance, data={"points": report.points_checked})

    def _axiom2(self, geom: EquivariantGeometry, spec: CheckSpec) -> _Outcome:
        g = self._group_element(geom, spec, "g")
        X, Y = self._algebra(geom, spec, "X"), self._algebra(geom, spec, "Y")
        stratum = parse_stratum(geom, g, spec.params.get("stratum"), spec.path + ("stratum",))
        residuals = {}
        for eps in sorted(self._eps_list(spec, (1e-2, 1e-3)), reverse=True):
            residuals[eps] = chern.bouquet_axiom2(geom, g, X, Y, eps, stratum).residual
        tolerance = geom.tolerances.axiom
        passing = [eps for eps, r in residuals.items() if r < tolerance]
        return _Outcome(
            max(residuals.values()),
            tolerance,
            data={"largest_passing_eps": max(passing) if passing else None, "residuals": {f"{e:g}": r for e, r in residuals.items()}},
        )

    def _equivariant_holonomy(self, geom: EquivariantGeometry, spec: CheckSpec) -> _Outcome:
        x = self._point(geom, spec)
        a, h = self._algebra(geom, spec, "a"), self._group_element(geom, spec, "h")
        problem = transport.TransportProblem.constant_loop(geom, x, a, h)
        ode = transport.equivariant_holonomy_ode(problem, self._int(spec, "steps", geom.tolerances.default_steps))
        closed = to_grassmann(transport.super_holonomy_constant(geom, x, a, h), ode.num_generators)
        residual = (ode - closed).max_norm() / max(1.0, closed.max_norm())
        self._artifact(f"{spec.name}.json", lambda path: _write_json(path, from_grassmann(ode).to_json()))
        return _Outcome(residual, geom.tolerances.holonomy, data={"trace": _complex_json(np.trace(ode.body))})

    def _super_holonomy(self, geom: EquivariantGeometry, spec: CheckSpec) -> _Outcome:
        points = spec.params.get("points")
        if not isinstance(points, list) or not points:
            raise SchemaError.at(spec.path + ("points",), "expected a non-empty list of points")
        worst = 0.0
        steps = self._int(spec, "steps", geom.tolerances.default_steps)
        unit = chern.chern_character(geom, geom.group.identity(), None, None, self.options.normalization)
        for i, raw in enumerate(points):
            x = _vector(raw, spec.path + ("points", i), geom.dim)
            problem = transport.TransportProblem.constant_loop(geom, x)
            holonomy = transport.integrate_parallel(problem, steps)
            expected = transport.super_holonomy_constant(geom, x)
            relative = (holonomy - to_grassmann(expected)).max_norm() / max(1.0, expected.max_norm())
            if self.options.normalization is Normalization.RAW:
                trace_gap = (from_grassmann(GrassmannMatrix(holonomy.trace().coefficients[:, None, None])) - unit(x)).max_norm()
                relative = max(relative, trace_gap)
            worst = max(worst, relative)
        return _Outcome(worst, geom.tolerances.holonomy, data={"points": len(points)})

    def _infinitesimal(self, geom: EquivariantGeometry, spec: CheckSpec) -> _Outcome:
        report = transport.infinitesimal_holonomy(
            geom,
            self._point(geom, spec),
            self._algebra(geom, spec, "a"),
            self._group_element(geom, spec, "h"),
            self._eps_list(spec, (1e-2, 5e-3)),
            self._int(spec, "steps", geom.tolerances.default_steps),
        )
        return _Outcome(report.deviation, geom.tolerances.closure, data={"eps": list(report.eps)})

    def _borel_taylor(self, geom: EquivariantGeometry, spec: CheckSpec) -> _Outcome:
        eps = _number(spec.params.get("eps", 1e-2), spec.path + ("eps",))
        report = chern.borel_taylor_report(
            geom, self._algebra(geom, spec, "X"), self._point(geom, spec), self._int(spec, "order", 3), eps
        )
        return _Outcome(
            report.deviation,
            geom.tolerances.closure,
            data={"derivatives": [_complex_json(d) for d in report.derivatives]},
        )

    def _chern_number(self, geom: EquivariantGeometry, spec: CheckSpec) -> _Outcome:
        grid = self._int(spec, "grid", geom.tolerances.default_grid)
        value = chern.chern_number(geom, grid)
        expected = spec.params.get("expected", geom.parameters.get("charge"))
        if expected is None:
            raise SchemaError.at(spec.path + ("expected",), "no expected value and the geometry has no charge")
        expected = _number(expected, spec.path + ("expected",))
        residual = abs(value - expected) / max(1.0, abs(expected))
        return _Outcome(residual, geom.tolerances.chern_relative, data={"value": float(value.real), "expected": expected, "grid": grid})

    def _invariance(self, geom: EquivariantGeometry, spec: CheckSpec) -> _Outcome:
        report = check_invariance(geom, self._group_element(geom, spec, "g"))
        return _Outcome(report.max_residual, report.tolerance, data={"points": report.points_checked})

    def _ode_hygiene(self, geom: EquivariantGeometry, spec: CheckSpec) -> _Outcome:
        if "points" in spec.params:
            raw = spec.params["points"]
            if not isinstance(raw, list) or len(raw) < 2:
                raise SchemaError.at(spec.path + ("points",), "expected at least two points")
            nodes = [_vector(p, spec.path + ("points", i), geom.dim) for i, p in enumerate(raw)]
            path = transport.SuperPath.polyline(nodes)
        else:
            center = self._point(geom, spec, "center")
            radius = _number(spec.params.get("radius", 0.5), spec.path + ("radius",))
            path = transport.SuperPath.circle(center, radius)
        min_order = _number(spec.params.get("min_order", 3.7), spec.path + ("min_order",))
        problem = transport.TransportProblem(geom, path)
        flow = transport.flow_residual(problem, self._int(spec, "steps", 64))
        order = transport.convergence_order(problem)
        passed = flow < geom.tolerances.flow and order >= min_order
        return _Outcome(flow, geom.tolerances.flow, passed=passed, data={"order": order if math.isfinite(order) else None})


def _write_json(path: Path, payload: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return path


def run_scenario(scenario: Scenario, options: Optional[RunOptions] = None) -> RunReport:
    return ScenarioRunner(scenario, options).run()
