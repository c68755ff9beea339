"""
Equivariant super parallel transport and super holonomy.

A section s = s0 + theta s1 along a super path is determined by its components.
Parallel sections keep s1 = 0, and s0 solves an ordinary linear ODE whose
coefficients live in the Grassmann algebra of the odd path data. The ODE is
integrated for the fundamental solution U with classical RK4; on constant loops
it is cross-checked against the closed form c(h, x) exp(F + mu(a)).

For the constant G-connection theta d(theta) (x) a the base curve is lifted to
y(t) = mu(e^{-ta}, x(t)) and the odd data is pushed forward by the differential
of mu(e^{-ta}, .). The loop closes with the group element h e^{eps a}.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from . import algebra
from .exceptions import DimensionError, DomainError, LoopValidationError, ParityError, StepSizeError, ValidationError
from .forms import FormValue, TangentVector, contract, exp_even, to_grassmann
from .geometry import (
    EquivariantGeometry,
    FixedStratum,
    curvature,
    equivariant_curvature,
    fundamental_vector_field,
    restrict_to_stratum,
)
from .grassmann import GaugeMap, GrassmannElement, GrassmannMatrix, SuperConnectionForm, gauge_transform

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Paths and problems


@dataclass(frozen=True, eq=False)
class SuperPath:
    """t -> (x(t), psi(t)) for t in [0, 1]; psi has one odd component per chart axis."""

    even_path: Callable[[float], np.ndarray]
    odd_path: Callable[[float], Sequence[GrassmannElement]]
    num_generators: int
    constant: bool = False
    velocity: Optional[Callable[[float], np.ndarray]] = None
    time_step: float = 1e-5

    @classmethod
    def constant_at(cls, point: Sequence[float], psi: Optional[Sequence[GrassmannElement]] = None) -> "SuperPath":
        """Constant super path; by default psi^j is the j-th generator (psi <-> dx)."""
        x = np.asarray(point, dtype=float).reshape(-1)
        if psi is None:
            psi = [GrassmannElement.generator(x.size, j) for j in range(x.size)]
        psi = list(psi)
        q = psi[0].num_generators if psi else 0
        return cls(lambda t: x, lambda t: psi, q, constant=True, velocity=lambda t: np.zeros_like(x))

    @classmethod
    def circle(
        cls,
        center: Sequence[float],
        radius: float,
        num_generators: int = 0,
        psi: Optional[Callable[[float], Sequence[GrassmannElement]]] = None,
    ) -> "SuperPath":
        """One counterclockwise turn, with odd data ``psi`` (zero by default)."""
        c = np.asarray(center, dtype=float)
        if psi is None:
            zero = [GrassmannElement.zero(num_generators) for _ in range(2)]
            psi = lambda t: zero  # noqa: E731

        def position(t):
            return c + radius * np.array([math.cos(2 * math.pi * t), math.sin(2 * math.pi * t)])

        def velocity(t):
            return 2 * math.pi * radius * np.array([-math.sin(2 * math.pi * t), math.cos(2 * math.pi * t)])

        return cls(position, psi, num_generators, velocity=velocity)

    @classmethod
    def polyline(cls, points: Sequence[Sequence[float]], num_generators: int = 0) -> "SuperPath":
        """Piecewise linear even path through ``points`` at uniform speed per segment; psi = 0."""
        nodes = np.asarray(points, dtype=float)
        if nodes.ndim != 2 or len(nodes) < 2:
            raise DimensionError("a polyline needs at least two points")
        segments = len(nodes) - 1
        zero = [GrassmannElement.zero(num_generators) for _ in range(nodes.shape[1])]

        def locate(t):
            scaled = min(max(t, 0.0), 1.0) * segments
            index = min(int(scaled), segments - 1)
            return index, scaled - index

        def position(t):
            index, frac = locate(t)
            return nodes[index] + frac * (nodes[index + 1] - nodes[index])

        def velocity(t):
            index, _ = locate(t)
            return segments * (nodes[index + 1] - nodes[index])

        return cls(position, lambda t: zero, num_generators, velocity=velocity)

    def position(self, t: float) -> np.ndarray:
        return np.asarray(self.even_path(t), dtype=float).reshape(-1)

    def odd_data(self, t: float) -> np.ndarray:
        """psi(t) as an array of shape (n, 2**q)."""
        components = list(self.odd_path(t))
        for component in components:
            if component.num_generators != self.num_generators:
                raise DimensionError("odd path components use a different generator count")
            if not component.is_odd():
                raise ParityError("odd path components must be odd")
        if not components:
            return np.zeros((0, 1 << self.num_generators), dtype=complex)
        return np.stack([c.coefficients for c in components])

    def velocity_at(self, t: float) -> np.ndarray:
        if self.velocity is not None:
            return np.asarray(self.velocity(t), dtype=float).reshape(-1)
        h = self.time_step
        return (self.position(t + h) - self.position(t - h)) / (2.0 * h)


@dataclass(frozen=True, eq=False)
class TransportProblem:
    """Path, constant G-connection datum a, closing element h and circumference."""

    geometry: EquivariantGeometry
    path: SuperPath
    a: Optional[np.ndarray] = None
    h: Optional[np.ndarray] = None
    circumference: float = 1.0

    def __post_init__(self) -> None:
        group = self.geometry.group
        m = group.matrix_size
        a = np.zeros((m, m), dtype=complex) if self.a is None else np.atleast_2d(np.asarray(self.a, dtype=complex))
        h = group.identity() if self.h is None else np.atleast_2d(np.asarray(self.h, dtype=complex))
        if a.shape != (m, m) or h.shape != (m, m):
            raise DimensionError(f"a and h must be {m}x{m} matrices for {group.name}")
        if not self.circumference > 0:
            raise ValidationError("circumference must be positive")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "h", h)

    @classmethod
    def constant_loop(
        cls,
        geometry: EquivariantGeometry,
        point: Sequence[float],
        a: Optional[np.ndarray] = None,
        h: Optional[np.ndarray] = None,
        psi: Optional[Sequence[GrassmannElement]] = None,
        circumference: float = 1.0,
    ) -> "TransportProblem":
        return cls(geometry, SuperPath.constant_at(point, psi), a, h, circumference)

    @classmethod
    def from_connection(
        cls,
        geometry: EquivariantGeometry,
        path: SuperPath,
        connection: SuperConnectionForm,
        h: Optional[np.ndarray] = None,
        circumference: float = 1.0,
        tol: float = 1e-12,
    ) -> "TransportProblem":
        """Reduce d(theta) (x) alpha + theta d(theta) (x) a by exp(-theta alpha) first.

        The reduced datum must be a plain Lie algebra element (no nilpotent part).
        """
        reduced = gauge_transform(connection, GaugeMap.odd_reduction(connection.alpha))
        nilpotent = reduced.a.coefficients[1:]
        if algebra.max_norm(nilpotent) > tol:
            raise LoopValidationError(
                "the gauge-reduced connection is not constant: its datum a has a nilpotent part",
                residual=algebra.max_norm(nilpotent),
            )
        logger.debug("reduced connection: |alpha'| = %.2e", reduced.alpha.max_norm())
        return cls(geometry, path, reduced.a.body, h, circumference)

    @property
    def num_generators(self) -> int:
        return self.path.num_generators

    def closing_element(self) -> np.ndarray:
        """h e^{eps a}."""
        return self.h @ self.geometry.group.exp(self.circumference * self.a)


@dataclass(frozen=True, eq=False)
class SectionState:
    """Components of a section at time t, each of shape (2**q, d)."""

    s0: np.ndarray
    s1: np.ndarray
    t: float = 0.0


# ---------------------------------------------------------------------------
# Components of sections


def odd_connection_term(geom: EquivariantGeometry, point: Sequence[float], psi: np.ndarray) -> GrassmannMatrix:
    """A(psi) = sum_j A_j(x) psi^j, an odd Grassmann matrix."""
    form = geom.connection_form(point)
    psi = np.asarray(psi, dtype=complex)
    coefficients = np.zeros((psi.shape[1], geom.fiber_rank, geom.fiber_rank), dtype=complex)
    for j in range(psi.shape[0]):
        coefficients += psi[j][:, None, None] * form.coefficient(1 << j)[None]
    return GrassmannMatrix(coefficients)


def components(section: np.ndarray, connection_term: Optional[GrassmannMatrix] = None, t: float = 0.0) -> SectionState:
    """Split s = v + theta w (theta is generator 0) into s0 = v, s1 = w + A(psi) v."""
    section = np.asarray(section, dtype=complex)
    if section.ndim != 2 or section.shape[0] < 2:
        raise DimensionError("sections have shape (2**(q+1), d) with theta as generator 0")
    if not (algebra.is_homogeneous(section, odd=False) or algebra.is_homogeneous(section, odd=True)):
        raise ParityError("section is not homogeneous")
    s0, w = section[0::2], section[1::2]
    s1 = w if connection_term is None else w + connection_term.apply(s0)
    return SectionState(s0, s1, t)


def reconstruct(state: SectionState, connection_term: Optional[GrassmannMatrix] = None) -> np.ndarray:
    """Inverse of ``components``."""
    w = state.s1 if connection_term is None else state.s1 - connection_term.apply(state.s0)
    section = np.zeros((2 * state.s0.shape[0], state.s0.shape[1]), dtype=complex)
    section[0::2] = state.s0
    section[1::2] = w
    return section


# ---------------------------------------------------------------------------
# The component ODE


@dataclass(frozen=True)
class _Lift:
    point: np.ndarray
    velocity: np.ndarray
    odd: np.ndarray


def _lift(problem: TransportProblem, t: float) -> _Lift:
    geom, path = problem.geometry, problem.path
    s = t / problem.circumference
    x = path.position(s)
    g = geom.group.exp(-t * problem.a)
    y = geom.act(g, x)
    if not geom.chart.contains(y):
        raise DomainError(f"lifted path leaves chart {geom.chart.label!r} at t = {t:.6g}", exit_time=t)
    J = geom.action_differential(g, x)
    velocity = J @ (path.velocity_at(s) / problem.circumference)
    if geom.dim and np.any(problem.a != 0):
        velocity = velocity - fundamental_vector_field(geom, problem.a, y).as_array()
    return _Lift(y, velocity, J @ path.odd_data(s))


def _generator(problem: TransportProblem, t: float) -> np.ndarray:
    """F~(t) - A(y)(y') as a Grassmann matrix coefficient array."""
    geom = problem.geometry
    lift = _lift(problem, t)
    q, d, n = problem.num_generators, geom.fiber_rank, geom.dim
    result = np.zeros((1 << q, d, d), dtype=complex)
    if n == 0:
        return result
    F = curvature(geom.connection, lift.point, geom.tolerances.exterior_step)
    for i in range(n):
        for j in range(i + 1, n):
            block = F.coefficient((1 << i) | (1 << j))
            if np.any(block):
                product = algebra.graded_product(lift.odd[i], lift.odd[j])
                result += product[:, None, None] * block[None]
    A = geom.connection_form(lift.point)
    result[0] -= sum(lift.velocity[j] * A.coefficient(1 << j) for j in range(n))
    return result


def _rk4(
    problem: TransportProblem,
    start: float,
    stop: float,
    steps: int,
    record: bool = False,
) -> Tuple[np.ndarray, List[Tuple[float, np.ndarray]]]:
    """Fundamental solution of dU/dt = M(t) U from ``start`` to ``stop``."""
    if steps < 1:
        raise ValidationError("steps must be at least 1")
    U = algebra.identity(problem.num_generators, problem.geometry.fiber_rank)
    dt = (stop - start) / steps
    trajectory = [(start, U)] if record else []
    product = algebra.graded_product
    M0 = _generator(problem, start)
    for i in range(steps):
        t = start + i * dt
        Mh = _generator(problem, t + 0.5 * dt)
        M1 = _generator(problem, t + dt)
        k1 = product(M0, U)
        k2 = product(Mh, U + 0.5 * dt * k1)
        k3 = product(Mh, U + 0.5 * dt * k2)
        k4 = product(M1, U + dt * k3)
        U = U + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        M0 = M1
        if record:
            trajectory.append((t + dt, U))
    algebra.check_finite(U, "transport solution")
    return U, trajectory


def integrate_parallel(
    problem: TransportProblem,
    steps: Optional[int] = None,
    check_steps: bool = False,
    interval: Optional[Tuple[float, float]] = None,
) -> GrassmannMatrix:
    """Transport V_0 -> V_eps along the lifted path (no closing group action).

    ``check_steps`` repeats the solve with half the step and raises
    ``StepSizeError`` when the result moves by more than the step-halving tolerance.
    """
    tolerances = problem.geometry.tolerances
    steps = steps or tolerances.default_steps
    start, stop = interval or (0.0, problem.circumference)
    U, _ = _rk4(problem, start, stop, steps)
    logger.debug("integrated %s over [%g, %g] with %d steps", problem.geometry.name, start, stop, steps)
    if check_steps:
        refined, _ = _rk4(problem, start, stop, 2 * steps)
        residual = algebra.max_norm(refined - U)
        if residual > tolerances.step_halving:
            raise StepSizeError(f"halving the step changed the transport by {residual:.3e}", residual)
    return GrassmannMatrix(U)


def lifted_endpoint(problem: TransportProblem) -> np.ndarray:
    """y(eps) = mu(e^{-eps a}, x(1))."""
    return _lift(problem, problem.circumference).point


def equivariant_holonomy_ode(
    problem: TransportProblem,
    steps: Optional[int] = None,
    validate: bool = True,
) -> GrassmannMatrix:
    """c(h e^{eps a}, y(eps)) composed with the transport along the lifted path."""
    if validate:
        report = loop_validate(problem)
        if not report.passed:
            raise LoopValidationError("; ".join(report.messages), residual=report.worst_residual)
    transport = integrate_parallel(problem, steps)
    c = problem.geometry.cocycle(problem.closing_element(), lifted_endpoint(problem))
    return GrassmannMatrix.from_body(c, problem.num_generators) * transport


def super_holonomy_constant(
    geom: EquivariantGeometry,
    x: Sequence[float],
    a: Optional[np.ndarray] = None,
    h: Optional[np.ndarray] = None,
    stratum: Optional[FixedStratum] = None,
) -> FormValue:
    """c(h, x) exp(F(x) + mu(a)(x)), optionally restricted to stratum coordinates."""
    problem = TransportProblem.constant_loop(geom, x, a, h)
    report = loop_validate(problem)
    if not report.passed:
        raise LoopValidationError("; ".join(report.messages), worst_point=tuple(np.ravel(x)), residual=report.worst_residual)
    point = np.asarray(x, dtype=float).reshape(-1)
    holonomy = exp_even(equivariant_curvature(geom, problem.a, point), geom.tolerances.exp_tol)
    holonomy = holonomy.left_matrix(geom.cocycle(problem.h, point))
    if stratum is not None:
        holonomy = restrict_to_stratum(holonomy, stratum, stratum.find(point), geom.tolerances.fd_step)
    return holonomy


# ---------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class LoopReport:
    ad_residual: float
    fixed_point_residual: Optional[float]
    closure_residual: Optional[float]
    messages: Tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.messages

    @property
    def worst_residual(self) -> float:
        values = [self.ad_residual, self.fixed_point_residual, self.closure_residual]
        return max(v for v in values if v is not None)


def loop_validate(problem: TransportProblem) -> LoopReport:
    """Check that (h, a, path) defines an equivariant super loop. Never raises."""
    geom, tolerances = problem.geometry, problem.geometry.tolerances
    messages: List[str] = []
    ad_residual = geom.group.centralizer_residual(problem.h, problem.a)
    if ad_residual >= tolerances.centralizer:
        messages.append(f"Ad_h a != a (residual {ad_residual:.3e})")

    fixed_residual = closure_residual = None
    if problem.path.constant:
        x = problem.path.position(0.0)
        fixed_residual = float(np.max(np.abs(geom.act(problem.h, x) - x), initial=0.0))
        if fixed_residual >= tolerances.fixed_point:
            messages.append(f"x = {x.tolist()} is not fixed by h (residual {fixed_residual:.3e})")
    else:
        try:
            end = geom.act(problem.closing_element(), lifted_endpoint(problem))
            closure_residual = float(np.max(np.abs(problem.path.position(0.0) - end), initial=0.0))
        except DomainError as exc:
            closure_residual = math.inf
            messages.append(str(exc))
        else:
            if closure_residual >= tolerances.closure:
                messages.append(f"path does not close under h e^a (residual {closure_residual:.3e})")
    report = LoopReport(ad_residual, fixed_residual, closure_residual, tuple(messages))
    if messages:
        logger.warning("loop validation failed for %s: %s", geom.name, "; ".join(messages))
    return report


@dataclass(frozen=True)
class InfinitesimalReport:
    eps: Tuple[float, ...]
    limit: GrassmannMatrix
    expected: GrassmannMatrix
    deviation: float


def _extrapolate_to_zero(eps: Sequence[float], values: Sequence[np.ndarray]) -> np.ndarray:
    """Lagrange interpolation of values(eps) evaluated at eps = 0."""
    result = np.zeros_like(values[0])
    for i, (ei, vi) in enumerate(zip(eps, values)):
        weight = 1.0
        for j, ej in enumerate(eps):
            if j != i:
                weight *= ej / (ej - ei)
        result = result + weight * vi
    return result


def infinitesimal_holonomy(
    geom: EquivariantGeometry,
    x: Sequence[float],
    a: Optional[np.ndarray] = None,
    h: Optional[np.ndarray] = None,
    eps_list: Sequence[float] = (1e-2, 5e-3),
    steps: Optional[int] = None,
) -> InfinitesimalReport:
    """(c(h, x)^{-1} Hol(eps) - id) / eps extrapolated to eps = 0.

    The limit is compared against the equivariant curvature F(a) at x.
    """
    eps = tuple(float(e) for e in eps_list)
    if not eps or any(e <= 0 for e in eps):
        raise ValidationError("eps_list must contain positive values")
    point = np.asarray(x, dtype=float).reshape(-1)
    quotients = []
    for e in eps:
        problem = TransportProblem.constant_loop(geom, point, a, h, circumference=e)
        holonomy = equivariant_holonomy_ode(problem, steps)
        q = problem.num_generators
        correction = GrassmannMatrix.from_body(np.linalg.inv(geom.cocycle(problem.h, point)), q)
        quotients.append(((correction * holonomy).coefficients - algebra.identity(q, geom.fiber_rank)) / e)
    limit = GrassmannMatrix(_extrapolate_to_zero(eps, quotients))
    a_matrix = problem.a
    expected = to_grassmann(equivariant_curvature(geom, a_matrix, point), limit.num_generators)
    deviation = (limit - expected).max_norm()
    logger.debug("infinitesimal holonomy at %s: deviation %.3e", point.tolist(), deviation)
    return InfinitesimalReport(eps, limit, expected, deviation)


def step_refinement_residual(problem: TransportProblem, steps: Optional[int] = None) -> float:
    """Change of the transport when the step is halved."""
    steps = steps or problem.geometry.tolerances.default_steps
    coarse = integrate_parallel(problem, steps)
    fine = integrate_parallel(problem, 2 * steps)
    return (fine - coarse).max_norm()


def convergence_order(problem: TransportProblem, steps: Sequence[int] = (16, 32, 64)) -> float:
    """Empirical order p from successive differences at three step counts."""
    if len(steps) != 3:
        raise ValidationError("convergence_order needs exactly three step counts")
    solutions = [integrate_parallel(problem, s) for s in steps]
    first = (solutions[0] - solutions[1]).max_norm()
    second = (solutions[1] - solutions[2]).max_norm()
    if second == 0.0 or first == 0.0:
        logger.debug("transport is exact at these step counts; order undefined")
        return math.inf
    return math.log(first / second) / math.log(steps[1] / steps[0])


def flow_residual(problem: TransportProblem, steps: Optional[int] = None) -> float:
    """|U(eps <- 0) - U(eps <- eps/2) U(eps/2 <- 0)|."""
    steps = steps or problem.geometry.tolerances.default_steps
    middle = 0.5 * problem.circumference
    whole = integrate_parallel(problem, steps)
    first = integrate_parallel(problem, max(1, steps // 2), interval=(0.0, middle))
    second = integrate_parallel(problem, max(1, steps // 2), interval=(middle, problem.circumference))
    return (whole - second * first).max_norm()


def _shadow_generator(problem: TransportProblem, lift: _Lift) -> GrassmannMatrix:
    """(1/2) sum_{i,j} F_ij psi^i psi^j - iota_{y'} A, assembled without ``_generator``."""
    geom = problem.geometry
    q, d, n = problem.num_generators, geom.fiber_rank, geom.dim
    if n == 0:
        return GrassmannMatrix.zero(q, d)
    F = curvature(geom.connection, lift.point, geom.tolerances.exterior_step)
    result = np.zeros((1 << q, d, d), dtype=complex)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            block = F.coefficient((1 << i) | (1 << j)) * (1.0 if i < j else -1.0)
            product = algebra.graded_product(lift.odd[i], lift.odd[j])
            result += 0.5 * product[:, None, None] * block[None]
    drift = contract(TangentVector(np.real(lift.velocity)), geom.connection_form(lift.point))
    result[0] -= drift.coefficient(0)
    return GrassmannMatrix(result)


def shadow_odd_component(problem: TransportProblem, vector: Sequence[complex], steps: Optional[int] = None) -> float:
    """Largest component of nabla_D s along the parallel section through ``vector``.

    The section is rebuilt from (U(t) v, 0), so its theta^0 part is s1 against
    the odd connection term at y(t). Its theta part, ds0/dt - M(t) s0, is
    integrated with Simpson's rule over each pair of recorded steps; M(t) is
    assembled here from the curvature and the connection form, not taken from
    the solver.
    """
    geom = problem.geometry
    q, d = problem.num_generators, geom.fiber_rank
    steps = steps or geom.tolerances.default_steps
    steps += steps % 2
    v = np.zeros((1 << q, d), dtype=complex)
    v[0] = np.asarray(vector, dtype=complex).reshape(d)
    _, trajectory = _rk4(problem, 0.0, problem.circumference, steps, record=True)
    times, sections, drifts = [], [], []
    odd_worst = 0.0
    for t, U in trajectory:
        s0 = GrassmannMatrix(U).apply(v)
        lift = _lift(problem, t)
        term = odd_connection_term(geom, lift.point, lift.odd)
        section = reconstruct(SectionState(s0, np.zeros_like(s0), t), term)
        odd_worst = max(odd_worst, algebra.max_norm(components(section, term, t).s1))
        times.append(t)
        sections.append(s0)
        drifts.append(_shadow_generator(problem, lift).apply(s0))
    even_worst = 0.0
    for k in range(0, len(times) - 2, 2):
        panel = slice(k, k + 3)
        integral = integrate.simpson(np.stack(drifts[panel]), x=times[panel], axis=0)
        residual = sections[k + 2] - sections[k] - integral
        even_worst = max(even_worst, algebra.max_norm(residual))
    logger.debug("shadow of nabla_D s: |s1| %.3e, integrated theta part %.3e", odd_worst, even_worst)
    return max(odd_worst, even_worst)
