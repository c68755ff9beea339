"""
Chart-based model of a G-manifold with an equivariant vector bundle.

An ``EquivariantGeometry`` bundles a chart of M, a matrix group G, the action
mu: G x M -> M with its fiber cocycle c(g, p), and a local connection form A on
the trivialized bundle. Everything downstream (transport, chern) only talks to
the callbacks collected here.

Sign conventions: ``fundamental_vector_field`` returns X_M(p) = d/dt mu(e^{tX}, p)
at t = 0; the moment is mu(X) = d/dt c(e^{tX}, p) + A(X_M) and the Cartan
differential is d + iota_{X_M}.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .config import DEFAULT_TOLERANCES, Tolerances
from .exceptions import DimensionError, DomainError, ValidationError
from .forms import FormValue, TangentVector, contract, pullback_linear, wedge

logger = logging.getLogger(__name__)

Point = np.ndarray
FormField = Callable[[np.ndarray], FormValue]


def _as_point(point: Sequence[float]) -> np.ndarray:
    return np.asarray(point, dtype=float).reshape(-1)


# ---------------------------------------------------------------------------
# Charts


@dataclass(frozen=True)
class Chart:
    """Axis-aligned box in R^n; ``domain=()`` is the one-point chart."""

    domain: Tuple[Tuple[float, float], ...]
    grid_resolution: int = 64
    label: str = "chart"
    orientation: int = 1

    def __post_init__(self) -> None:
        domain = tuple((float(lo), float(hi)) for lo, hi in self.domain)
        object.__setattr__(self, "domain", domain)
        for lo, hi in domain:
            if not hi > lo:
                raise DimensionError(f"chart {self.label!r} has an empty axis [{lo}, {hi}]")
        if self.grid_resolution < 2:
            raise DimensionError("grid resolution must be at least 2")
        if self.orientation not in (1, -1):
            raise DimensionError("orientation must be +1 or -1")

    @classmethod
    def box(cls, radius: float, dim: int = 2, **kwargs) -> "Chart":
        return cls(tuple((-radius, radius) for _ in range(dim)), **kwargs)

    @classmethod
    def point(cls, label: str = "pt") -> "Chart":
        return cls((), label=label)

    @property
    def dim(self) -> int:
        return len(self.domain)

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.domain], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.domain], dtype=float)

    def contains(self, point: Sequence[float], margin: float = 0.0) -> bool:
        p = _as_point(point)
        if p.size != self.dim:
            return False
        return bool(np.all(p >= self.lower + margin) and np.all(p <= self.upper - margin))

    def require_interior(self, point: Sequence[float], margin: float = 0.0) -> np.ndarray:
        p = _as_point(point)
        if p.size != self.dim:
            raise DimensionError(f"point of dimension {p.size} on the {self.dim}-dimensional chart {self.label!r}")
        if not self.contains(p, margin):
            raise DomainError(
                f"point {p.tolist()} is not interior to chart {self.label!r} by margin {margin:g}"
            )
        return p

    def axes(self, resolution: Optional[int] = None) -> List[np.ndarray]:
        count = resolution or self.grid_resolution
        return [np.linspace(lo, hi, count) for lo, hi in self.domain]

    def grid(self, resolution: Optional[int] = None) -> np.ndarray:
        """All grid points as an array of shape (N, dim)."""
        if self.dim == 0:
            return np.zeros((1, 0))
        mesh = np.meshgrid(*self.axes(resolution), indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    def interior_grid(self, resolution: Optional[int] = None) -> np.ndarray:
        """Grid points without the boundary layer."""
        if self.dim == 0:
            return np.zeros((1, 0))
        mesh = np.meshgrid(*(axis[1:-1] for axis in self.axes(resolution)), indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    def sample(self, rng: np.random.Generator, count: int, margin: float = 0.0) -> np.ndarray:
        if self.dim == 0:
            return np.zeros((count, 0))
        return rng.uniform(self.lower + margin, self.upper - margin, size=(count, self.dim))


# ---------------------------------------------------------------------------
# Matrix groups


@dataclass(frozen=True, eq=False)
class GroupModel:
    """Matrix group with a real basis of its Lie algebra."""

    name: str
    basis: Tuple[np.ndarray, ...]
    exp_map: Optional[Callable[[np.ndarray], np.ndarray]] = None
    special_elements: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        basis = tuple(np.atleast_2d(np.asarray(b, dtype=complex)) for b in self.basis)
        if not basis:
            raise DimensionError(f"group {self.name!r} needs at least one Lie algebra generator")
        if len({b.shape for b in basis}) != 1:
            raise DimensionError(f"basis matrices of {self.name!r} differ in size")
        object.__setattr__(self, "basis", basis)

    @property
    def matrix_size(self) -> int:
        return self.basis[0].shape[0]

    @property
    def dim(self) -> int:
        return len(self.basis)

    def identity(self) -> np.ndarray:
        return np.eye(self.matrix_size, dtype=complex)

    def element(self, coords: Sequence[float]) -> np.ndarray:
        """Lie algebra element sum_i coords[i] * basis[i]."""
        coords = np.asarray(coords, dtype=float).reshape(-1)
        if coords.size != self.dim:
            raise DimensionError(f"{self.name} expects {self.dim} Lie algebra coordinates, got {coords.size}")
        return np.tensordot(coords, np.stack(self.basis), axes=1)

    def coords(self, X: np.ndarray) -> np.ndarray:
        """Real least-squares coordinates of X in the basis."""
        stacked = np.stack([b.reshape(-1) for b in self.basis], axis=-1)
        system = np.concatenate([stacked.real, stacked.imag])
        target = np.asarray(X, dtype=complex).reshape(-1)
        rhs = np.concatenate([target.real, target.imag])
        solution, *_ = np.linalg.lstsq(system, rhs, rcond=None)
        return solution

    def algebra_residual(self, X: np.ndarray) -> float:
        return float(np.max(np.abs(np.asarray(X) - self.element(self.coords(X)))))

    def exp(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=complex))
        if self.exp_map is not None:
            return np.asarray(self.exp_map(X), dtype=complex)
        return linalg.expm(X)

    def inverse(self, g: np.ndarray) -> np.ndarray:
        return np.linalg.inv(np.asarray(g, dtype=complex))

    def bracket(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return X @ Y - Y @ X

    def adjoint(self, g: np.ndarray, X: np.ndarray) -> np.ndarray:
        """Ad_g X = g X g^{-1}."""
        g = np.asarray(g, dtype=complex)
        return g @ np.asarray(X, dtype=complex) @ self.inverse(g)

    def centralizer_residual(self, g: np.ndarray, X: np.ndarray) -> float:
        return float(np.max(np.abs(self.adjoint(g, X) - X)))

    def centralizer_basis(self, g: np.ndarray, tol: float = 1e-8) -> List[np.ndarray]:
        """Basis elements X with |Ad_g X - X| < tol."""
        return [b for b in self.basis if self.centralizer_residual(g, b) < tol]

    def special(self, name: str) -> np.ndarray:
        try:
            return np.asarray(self.special_elements[name], dtype=complex)
        except KeyError:
            raise ValidationError(f"group {self.name!r} has no element named {name!r}") from None


def check_centralizer(group: GroupModel, g: np.ndarray, X: np.ndarray, tol: float = 1e-8) -> float:
    residual = group.centralizer_residual(g, X)
    if residual >= tol:
        raise ValidationError(
            f"X is not in the centralizer of g in {group.name}: |Ad_g X - X| = {residual:.3e}",
            residual=residual,
        )
    return residual


# ---------------------------------------------------------------------------
# Action, connection and strata


@dataclass(frozen=True, eq=False)
class ActionModel:
    """mu(g, p) and its fiber cocycle c(g, p).

    The optional callbacks are analytic versions of quantities otherwise
    obtained by central differences: ``cocycle_generator(X, p)`` is
    d/dt c(e^{tX}, p), ``vector_field(X, p)`` is X_M(p) and
    ``differential(g, p)`` is the Jacobian of mu(g, .) at p.
    """

    act: Callable[[np.ndarray, np.ndarray], np.ndarray]
    cocycle: Callable[[np.ndarray, np.ndarray], np.ndarray]
    cocycle_generator: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    vector_field: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    differential: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None


@dataclass(frozen=True, eq=False)
class ConnectionModel:
    connection_form: FormField
    curvature_analytic: Optional[FormField] = None
    # top coefficient F_12 over an (N, 2) array of points, shape (N, d, d)
    curvature_density: Optional[Callable[[np.ndarray], np.ndarray]] = None


@dataclass(frozen=True, eq=False)
class FixedStratum:
    """A chart of (a component of) the fixed-point set of ``group_element``."""

    group_element: np.ndarray
    sub_chart: Chart
    embedding: Callable[[np.ndarray], np.ndarray]
    label: str = "stratum"
    locate: Optional[Callable[[np.ndarray], np.ndarray]] = None
    embedding_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @property
    def dim(self) -> int:
        return self.sub_chart.dim

    def embed(self, q: Sequence[float]) -> np.ndarray:
        return _as_point(self.embedding(_as_point(q)))

    def jacobian(self, q: Sequence[float], step: float = 1e-5) -> np.ndarray:
        """Differential of the embedding at q, shape (n, k)."""
        q = _as_point(q)
        if self.embedding_jacobian is not None:
            J = np.asarray(self.embedding_jacobian(q), dtype=float)
            return J if J.ndim == 2 else J.reshape(-1, 1)
        return jacobian(self.embed, q, step).real

    def find(self, point: Sequence[float]) -> np.ndarray:
        """Stratum coordinates of an ambient point."""
        if self.locate is None:
            raise ValidationError(f"stratum {self.label!r} cannot locate ambient points")
        return _as_point(self.locate(_as_point(point)))

    def with_element(self, g: np.ndarray) -> "FixedStratum":
        return FixedStratum(
            np.asarray(g, dtype=complex),
            self.sub_chart,
            self.embedding,
            self.label,
            self.locate,
            self.embedding_jacobian,
        )


@dataclass(frozen=True, eq=False)
class EquivariantGeometry:
    """(M, G, V, mu^V, nabla) in one chart."""

    name: str
    chart: Chart
    group: GroupModel
    action: ActionModel
    connection: ConnectionModel
    fiber_rank: int
    tolerances: Tolerances = DEFAULT_TOLERANCES
    description: str = ""
    parameters: Mapping[str, object] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.chart.dim

    def act(self, g: np.ndarray, point: Sequence[float]) -> np.ndarray:
        return _as_point(self.action.act(np.asarray(g, dtype=complex), _as_point(point)))

    def cocycle(self, g: np.ndarray, point: Sequence[float]) -> np.ndarray:
        value = self.action.cocycle(np.asarray(g, dtype=complex), _as_point(point))
        return np.atleast_2d(np.asarray(value, dtype=complex))

    def connection_form(self, point: Sequence[float]) -> FormValue:
        return self.connection.connection_form(_as_point(point))

    def action_differential(self, g: np.ndarray, point: Sequence[float], step: Optional[float] = None) -> np.ndarray:
        """Jacobian of mu(g, .) at ``point``, shape (n, n)."""
        p = _as_point(point)
        if self.action.differential is not None:
            return np.asarray(self.action.differential(np.asarray(g, dtype=complex), p), dtype=float).reshape(p.size, p.size)
        return jacobian(lambda x: self.act(g, x), p, step or self.tolerances.fd_step).real


# ---------------------------------------------------------------------------
# Finite differences


def _partials(func: Callable[[np.ndarray], np.ndarray], point: np.ndarray, step: float, richardson: bool) -> List[np.ndarray]:
    partials = []
    for direction in np.eye(point.size):
        forward = np.asarray(func(point + step * direction))
        backward = np.asarray(func(point - step * direction))
        derivative = (forward - backward) / (2.0 * step)
        if richardson:
            wide = (np.asarray(func(point + 2 * step * direction)) - np.asarray(func(point - 2 * step * direction))) / (4.0 * step)
            derivative = (4.0 * derivative - wide) / 3.0
        partials.append(derivative)
    return partials


def jacobian(
    func: Callable[[np.ndarray], np.ndarray],
    point: Sequence[float],
    step: float = 1e-5,
    richardson: bool = False,
) -> np.ndarray:
    """Central-difference Jacobian; the last axis indexes the input coordinate.

    ``richardson=True`` combines steps h and 2h into a fourth-order estimate.
    """
    p = _as_point(point)
    partials = _partials(func, p, step, richardson)
    if not partials:
        value = np.asarray(func(p))
        return np.zeros(value.shape + (0,), dtype=value.dtype)
    return np.stack(partials, axis=-1)


def _coordinate_form(n: int, j: int, d: int) -> FormValue:
    return FormValue.from_terms(n, {1 << j: np.eye(d)}, d=d)


def exterior_derivative(
    form_field: FormField,
    point: Sequence[float],
    step: float = 1e-4,
    chart: Optional[Chart] = None,
) -> FormValue:
    """d(omega) at ``point`` from central differences of every coefficient."""
    p = chart.require_interior(point, margin=step) if chart is not None else _as_point(point)
    base = form_field(p)
    n, d = base.base_dim, base.fiber_rank
    if n != p.size:
        raise DimensionError(f"field lives on R^{n} but was evaluated at a point of R^{p.size}")
    result = FormValue.zero(n, d)
    for j, partial in enumerate(_partials(lambda x: form_field(x).coefficients, p, step, False)):
        result = result + wedge(_coordinate_form(n, j, d), FormValue(partial))
    return result


def curvature(
    connection: ConnectionModel,
    point: Sequence[float],
    step: float = 1e-4,
    chart: Optional[Chart] = None,
) -> FormValue:
    """F = dA + A ^ A, or the analytic curvature when one is supplied."""
    p = chart.require_interior(point) if chart is not None else _as_point(point)
    if connection.curvature_analytic is not None:
        return connection.curvature_analytic(p)
    a = connection.connection_form(p)
    return exterior_derivative(connection.connection_form, p, step, chart) + wedge(a, a)


def curvature_density(connection: ConnectionModel, points: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """F_12 at every row of ``points`` on a 2-dimensional chart, shape (N, d, d)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != 2:
        raise ValidationError(f"curvature density needs a 2-dimensional chart, got {points.shape[1]}")
    if connection.curvature_density is not None:
        values = np.asarray(connection.curvature_density(points), dtype=complex)
        return values.reshape(len(points), *values.shape[-2:]) if values.ndim >= 2 else values.reshape(-1, 1, 1)
    return np.stack([curvature(connection, p, step).coefficient(0b11) for p in points])


# ---------------------------------------------------------------------------
# Infinitesimal action, moment and equivariant curvature


def fundamental_vector_field(
    geom: EquivariantGeometry,
    X: np.ndarray,
    point: Sequence[float],
    step: Optional[float] = None,
) -> TangentVector:
    """X_M(p) = d/dt mu(e^{tX}, p) at t = 0."""
    p = geom.chart.require_interior(point)
    X = np.atleast_2d(np.asarray(X, dtype=complex))
    if geom.action.vector_field is not None:
        return TangentVector(np.real(geom.action.vector_field(X, p)))
    h = step or geom.tolerances.fd_step
    forward = geom.act(geom.group.exp(h * X), p)
    backward = geom.act(geom.group.exp(-h * X), p)
    return TangentVector(((forward - backward) / (2.0 * h)).real)


def cocycle_generator(
    geom: EquivariantGeometry,
    X: np.ndarray,
    point: Sequence[float],
    step: Optional[float] = None,
) -> np.ndarray:
    """d/dt c(e^{tX}, p) at t = 0."""
    p = _as_point(point)
    X = np.atleast_2d(np.asarray(X, dtype=complex))
    if geom.action.cocycle_generator is not None:
        return np.atleast_2d(np.asarray(geom.action.cocycle_generator(X, p), dtype=complex))
    h = step or geom.tolerances.fd_step
    return (geom.cocycle(geom.group.exp(h * X), p) - geom.cocycle(geom.group.exp(-h * X), p)) / (2.0 * h)


def moment(geom: EquivariantGeometry, X: np.ndarray, point: Sequence[float]) -> np.ndarray:
    """mu(X)(p) = d/dt c(e^{tX}, p) + A(X_M)(p)."""
    p = geom.chart.require_interior(point)
    generator = cocycle_generator(geom, X, p)
    if geom.dim == 0:
        return generator
    velocity = fundamental_vector_field(geom, X, p)
    return generator + contract(velocity, geom.connection_form(p)).coefficient(0)


def equivariant_curvature(geom: EquivariantGeometry, X: np.ndarray, point: Sequence[float]) -> FormValue:
    """F(X) = F + mu(X), an even form."""
    p = geom.chart.require_interior(point)
    F = curvature(geom.connection, p, geom.tolerances.exterior_step)
    return F + FormValue.from_matrix(geom.dim, moment(geom, X, p))


@dataclass(frozen=True)
class InvarianceReport:
    group_element: Tuple[complex, ...]
    max_residual: float
    worst_point: Tuple[float, ...]
    tolerance: float
    points_checked: int

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tolerance


def check_invariance(
    geom: EquivariantGeometry,
    g: np.ndarray,
    points: Optional[np.ndarray] = None,
    tol: Optional[float] = None,
) -> InvarianceReport:
    """Max over ``points`` of |c^{-1} (mu_g^* A) c + c^{-1} dc - A|.

    Points whose image leaves the chart are skipped. Never raises on a failed check.
    """
    g = np.asarray(g, dtype=complex)
    tol = geom.tolerances.closure if tol is None else tol
    if points is None:
        points = geom.chart.interior_grid(8)
    n = geom.dim
    worst, worst_point, checked = 0.0, (), 0
    points = np.atleast_2d(np.asarray(points, dtype=float))
    for p in points.reshape(points.shape[0], n):
        image = geom.act(g, p)
        if not geom.chart.contains(image):
            logger.debug("invariance: image of %s leaves the chart, skipped", p.tolist())
            continue
        c = geom.cocycle(g, p)
        c_inv = np.linalg.inv(c)
        pulled = pullback_linear(geom.connection_form(image), geom.action_differential(g, p))
        transformed = pulled.left_matrix(c_inv).right_matrix(c)
        if n:
            partials = _partials(lambda x: geom.cocycle(g, x), p, geom.tolerances.fd_step, False)
            transformed = transformed + FormValue.one_form([c_inv @ dc for dc in partials])
        residual = (transformed - geom.connection_form(p)).max_norm()
        checked += 1
        if residual >= worst:
            worst, worst_point = residual, tuple(p.tolist())
    report = InvarianceReport(tuple(g.reshape(-1).tolist()), worst, worst_point, tol, checked)
    if not report.passed:
        logger.warning("connection of %s is not invariant: residual %.3e at %s", geom.name, worst, worst_point)
    return report


# ---------------------------------------------------------------------------
# Fixed-point strata


def declare_fixed_stratum(
    geom: EquivariantGeometry,
    g: np.ndarray,
    sub_chart: Chart,
    embedding: Callable[[np.ndarray], np.ndarray],
    label: str = "stratum",
    locate: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    embedding_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    resolution: Optional[int] = None,
) -> FixedStratum:
    """Validate act(g, e(q)) = e(q) on the sub-chart grid and return the stratum."""
    g = np.asarray(g, dtype=complex)
    stratum = FixedStratum(g, sub_chart, embedding, label, locate, embedding_jacobian)
    tol = geom.tolerances.fixed_point
    worst, worst_point = 0.0, None
    for q in sub_chart.grid(resolution or min(sub_chart.grid_resolution, 16)):
        p = stratum.embed(q)
        geom.chart.require_interior(p)
        residual = float(np.max(np.abs(geom.act(g, p) - p), initial=0.0))
        if residual >= worst:
            worst, worst_point = residual, p
    if worst >= tol:
        raise ValidationError(
            f"stratum {label!r} is not fixed by g: |g.p - p| = {worst:.3e} at {worst_point.tolist()}",
            worst_point=worst_point,
            residual=worst,
        )
    logger.debug("declared stratum %s (dim %d) of %s, residual %.2e", label, sub_chart.dim, geom.name, worst)
    return stratum


def identity_stratum(geom: EquivariantGeometry) -> FixedStratum:
    """The whole chart, fixed by the identity."""
    n = geom.dim
    return FixedStratum(
        geom.group.identity(),
        geom.chart,
        lambda q: q,
        f"{geom.chart.label}:all",
        locate=lambda p: p,
        embedding_jacobian=lambda q: np.eye(n),
    )


def point_stratum(geom: EquivariantGeometry, g: np.ndarray, point: Sequence[float], label: str = "") -> FixedStratum:
    """Zero-dimensional stratum at an isolated fixed point of g."""
    p = _as_point(point)
    n = geom.dim
    return declare_fixed_stratum(
        geom,
        g,
        Chart.point(label or f"{geom.chart.label}:{p.tolist()}"),
        lambda q: p,
        label=label or f"{geom.chart.label}:{p.tolist()}",
        locate=lambda x: np.zeros(0),
        embedding_jacobian=lambda q: np.zeros((n, 0)),
    )


def find_fixed_points(
    geom: EquivariantGeometry,
    g: np.ndarray,
    tol: Optional[float] = None,
    resolution: Optional[int] = None,
) -> np.ndarray:
    """Chart grid points p with |act(g, p) - p| < tol."""
    tol = geom.tolerances.fixed_point if tol is None else tol
    grid = geom.chart.grid(resolution)
    fixed = [p for p in grid if float(np.max(np.abs(geom.act(g, p) - p), initial=0.0)) < tol]
    logger.debug("found %d fixed grid points out of %d", len(fixed), len(grid))
    return np.array(fixed, dtype=float).reshape(len(fixed), geom.dim)


def restrict_to_stratum(form: FormValue, stratum: FixedStratum, q: Sequence[float], step: float = 1e-5) -> FormValue:
    """Pull an ambient form at embedding(q) back to stratum coordinates."""
    return pullback_linear(form, stratum.jacobian(q, step))


def stratum_vector(stratum: FixedStratum, q: Sequence[float], velocity: TangentVector, step: float = 1e-5) -> TangentVector:
    """Express an ambient vector tangent to the stratum in sub-chart coordinates."""
    J = stratum.jacobian(q, step)
    if J.shape[1] == 0:
        return TangentVector(())
    solution, *_ = np.linalg.lstsq(J, velocity.as_array(), rcond=None)
    return TangentVector(solution)


# ---------------------------------------------------------------------------
# Fiberwise operations on bundles


def _block_diag(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    d1, d2 = x.shape[-1], y.shape[-1]
    out = np.zeros(x.shape[:-2] + (d1 + d2, d1 + d2), dtype=complex)
    out[..., :d1, :d1] = x
    out[..., d1:, d1:] = y
    return out


def _kron_sum(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """x (x) 1 + 1 (x) y applied maskwise."""
    d1, d2 = x.shape[-1], y.shape[-1]
    if x.ndim == 2:
        return np.kron(x, np.eye(d2)) + np.kron(np.eye(d1), y)
    return np.stack([_kron_sum(a, b) for a, b in zip(x, y)])


def _combine(
    first: EquivariantGeometry,
    second: EquivariantGeometry,
    name: str,
    matrices: Callable[[np.ndarray, np.ndarray], np.ndarray],
    group_action: Callable[[np.ndarray, np.ndarray], np.ndarray],
    fiber_rank: int,
) -> EquivariantGeometry:
    if first.chart != second.chart or first.group.name != second.group.name:
        raise DimensionError("bundles must share chart and group to be combined")

    def cocycle(g, p):
        return group_action(first.cocycle(g, p), second.cocycle(g, p))

    def generator(X, p):
        return matrices(cocycle_generator(first, X, p), cocycle_generator(second, X, p))

    def connection_form(p):
        return FormValue(matrices(first.connection_form(p).coefficients, second.connection_form(p).coefficients))

    def combined_curvature(p):
        return FormValue(
            matrices(
                first.connection.curvature_analytic(p).coefficients,
                second.connection.curvature_analytic(p).coefficients,
            )
        )

    analytic = first.connection.curvature_analytic and second.connection.curvature_analytic
    curvature_analytic = combined_curvature if analytic else None

    return EquivariantGeometry(
        name=name,
        chart=first.chart,
        group=first.group,
        action=ActionModel(
            first.action.act,
            cocycle,
            cocycle_generator=generator,
            vector_field=first.action.vector_field,
            differential=first.action.differential,
        ),
        connection=ConnectionModel(connection_form, curvature_analytic),
        fiber_rank=fiber_rank,
        tolerances=first.tolerances,
    )


def direct_sum(first: EquivariantGeometry, second: EquivariantGeometry) -> EquivariantGeometry:
    """V1 + V2 with block-diagonal cocycle and connection."""
    return _combine(
        first,
        second,
        f"{first.name}+{second.name}",
        _block_diag,
        _block_diag,
        first.fiber_rank + second.fiber_rank,
    )


def tensor_product(first: EquivariantGeometry, second: EquivariantGeometry) -> EquivariantGeometry:
    """V1 (x) V2 with Kronecker cocycle and connection A1 (x) 1 + 1 (x) A2."""
    return _combine(
        first,
        second,
        f"{first.name}*{second.name}",
        _kron_sum,
        np.kron,
        first.fiber_rank * second.fiber_rank,
    )


def describe(geom: EquivariantGeometry) -> Dict[str, object]:
    return {
        "name": geom.name,
        "chart": geom.chart.label,
        "dim": geom.dim,
        "group": geom.group.name,
        "fiber_rank": geom.fiber_rank,
        "parameters": dict(geom.parameters),
    }
