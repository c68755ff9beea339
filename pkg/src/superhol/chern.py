"""
The bouquet of Chern characters.

For g in G and X in the centralizer of g the petal on the fixed stratum M^g is

    alpha_g(X) = Tr( c(g) exp(F(X)|_{M^g}) ),

an equivariantly closed form for the Cartan differential d + iota_{X_M}.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from .config import Normalization
from .exceptions import NumericError, ValidationError
from .forms import FormValue, contract, exp_even, pullback_linear, trace
from .geometry import (
    Chart,
    EquivariantGeometry,
    FixedStratum,
    check_centralizer,
    curvature_density,
    equivariant_curvature,
    exterior_derivative,
    fundamental_vector_field,
    identity_stratum,
    jacobian,
    moment,
    point_stratum,
    restrict_to_stratum,
    stratum_vector,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BouquetEntry:
    """One petal: the scalar equivariant form alpha_g(X) on a fixed stratum."""

    geometry: EquivariantGeometry
    g: np.ndarray
    X: np.ndarray
    stratum: FixedStratum
    normalization: Normalization = Normalization.RAW

    def form_field(self, q: Sequence[float]) -> FormValue:
        geom = self.geometry
        p = geom.chart.require_interior(self.stratum.embed(q))
        curvature = equivariant_curvature(geom, self.X, p) * self.normalization.curvature_factor
        restricted = restrict_to_stratum(curvature, self.stratum, q, geom.tolerances.fd_step)
        return trace(exp_even(restricted, geom.tolerances.exp_tol).left_matrix(geom.cocycle(self.g, p)))

    __call__ = form_field

    def value(self, q: Sequence[float] = ()) -> complex:
        """Degree-0 coefficient, the whole petal on a point stratum."""
        return self.form_field(q).scalar(0)


def _validate_stratum(geom: EquivariantGeometry, g: np.ndarray, stratum: FixedStratum) -> None:
    tol = geom.tolerances.fixed_point
    for q in stratum.sub_chart.grid(4):
        p = stratum.embed(q)
        residual = float(np.max(np.abs(geom.act(g, p) - p), initial=0.0))
        if residual >= tol:
            raise ValidationError(
                f"stratum {stratum.label!r} is not fixed by g (residual {residual:.3e})",
                worst_point=p,
                residual=residual,
            )


def chern_character(
    geom: EquivariantGeometry,
    g: np.ndarray,
    X: Optional[np.ndarray] = None,
    stratum: Optional[FixedStratum] = None,
    normalization: Union[Normalization, str] = Normalization.RAW,
) -> BouquetEntry:
    """alpha_g(X) = Tr(c(g) exp(F(X)|_{M^g})) on ``stratum``.

    The identity element defaults to the whole chart. With the Chern-integer
    normalization the whole equivariant curvature is scaled by i/(2 pi).
    """
    g = np.atleast_2d(np.asarray(g, dtype=complex))
    m = geom.group.matrix_size
    X = np.zeros((m, m), dtype=complex) if X is None else np.atleast_2d(np.asarray(X, dtype=complex))
    check_centralizer(geom.group, g, X, geom.tolerances.centralizer)
    if stratum is None:
        if not np.allclose(g, geom.group.identity(), rtol=0.0, atol=1e-14):
            raise ValidationError("a fixed stratum must be declared for g != e")
        stratum = identity_stratum(geom)
    _validate_stratum(geom, g, stratum)
    return BouquetEntry(geom, g, X, stratum, Normalization.parse(normalization))


def equivariant_differential(
    geom: EquivariantGeometry,
    form_field: Callable[[np.ndarray], FormValue],
    X: np.ndarray,
    point: Sequence[float],
    stratum: Optional[FixedStratum] = None,
    step: Optional[float] = None,
) -> FormValue:
    """(d + iota_{X_M}) of a field given in stratum coordinates (ambient by default)."""
    stratum = stratum or identity_stratum(geom)
    h = step or geom.tolerances.exterior_step
    q = stratum.sub_chart.require_interior(point, margin=h if stratum.dim else 0.0)
    velocity = fundamental_vector_field(geom, X, stratum.embed(q))
    local_velocity = stratum_vector(stratum, q, velocity, geom.tolerances.fd_step)
    return exterior_derivative(form_field, q, h) + contract(local_velocity, form_field(q))


@dataclass(frozen=True)
class ResidualReport:
    """Max residual over sampled points and where it occurred."""

    name: str
    residual: float
    worst_point: Tuple[float, ...]
    tolerance: float
    points_checked: int

    @property
    def passed(self) -> bool:
        return self.residual < self.tolerance


def closedness_report(entry: BouquetEntry, resolution: Optional[int] = None, points: Optional[np.ndarray] = None) -> ResidualReport:
    """Max coefficient of (d + iota_{X_M}) alpha over interior grid points of the stratum."""
    geom = entry.geometry
    if points is None:
        points = entry.stratum.sub_chart.interior_grid(resolution or geom.tolerances.default_grid)
    worst, worst_point = 0.0, ()
    for q in points:
        residual = equivariant_differential(geom, entry.form_field, entry.X, q, entry.stratum).max_norm()
        if residual >= worst:
            worst, worst_point = residual, tuple(np.ravel(q).tolist())
    report = ResidualReport("closedness", worst, worst_point, geom.tolerances.closedness, len(points))
    logger.debug("closedness on %s: %.3e over %d points", entry.stratum.label, worst, len(points))
    return report


def _sample(stratum: FixedStratum, resolution: int) -> np.ndarray:
    return stratum.sub_chart.interior_grid(resolution) if stratum.dim else stratum.sub_chart.grid()


def bouquet_axiom1(
    geom: EquivariantGeometry,
    h: np.ndarray,
    g: np.ndarray,
    X: np.ndarray,
    stratum: FixedStratum,
    conjugate_stratum: Optional[FixedStratum] = None,
    resolution: int = 8,
) -> ResidualReport:
    """Compare alpha_g(X) with the pullback of alpha_{hgh^-1}(Ad_h X) along mu(h, .).

    Sample points whose image under h leaves the chart are skipped.
    """
    group = geom.group
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    g = np.atleast_2d(np.asarray(g, dtype=complex))
    conjugate = h @ g @ group.inverse(h)
    conjugate_stratum = conjugate_stratum or stratum.with_element(conjugate)
    left = chern_character(geom, g, X, stratum)
    right = chern_character(geom, conjugate, group.adjoint(h, X), conjugate_stratum)

    def transported(u: np.ndarray) -> np.ndarray:
        return conjugate_stratum.find(geom.act(h, stratum.embed(u)))

    worst, worst_point, checked = 0.0, (), 0
    for q in _sample(stratum, resolution):
        image = geom.act(h, stratum.embed(q))
        if not geom.chart.contains(image, geom.tolerances.exterior_step):
            continue
        q_image = transported(q)
        mismatch = float(np.max(np.abs(conjugate_stratum.embed(q_image) - image), initial=0.0))
        if mismatch >= geom.tolerances.fixed_point:
            raise ValidationError(
                f"h does not map {stratum.label!r} onto {conjugate_stratum.label!r}",
                worst_point=image,
                residual=mismatch,
            )
        J = jacobian(transported, q, geom.tolerances.fd_step).real
        pulled = pullback_linear(right.form_field(q_image), J)
        residual = (left.form_field(q) - pulled).max_norm()
        checked += 1
        if residual >= worst:
            worst, worst_point = residual, tuple(np.ravel(q).tolist())
    return ResidualReport("axiom1", worst, worst_point, geom.tolerances.axiom, checked)


def bouquet_axiom2(
    geom: EquivariantGeometry,
    g: np.ndarray,
    X: np.ndarray,
    Y: np.ndarray,
    eps: float,
    stratum: FixedStratum,
    resolution: int = 8,
) -> ResidualReport:
    """Compare alpha_{g e^{eps X}}(Y) with alpha_g(eps X + Y) on the stratum of g e^{eps X}."""
    g = np.atleast_2d(np.asarray(g, dtype=complex))
    X = np.atleast_2d(np.asarray(X, dtype=complex))
    Y = np.atleast_2d(np.asarray(Y, dtype=complex))
    moved = g @ geom.group.exp(eps * X)
    lhs = chern_character(geom, moved, Y, stratum.with_element(moved))
    rhs = chern_character(geom, g, eps * X + Y, stratum.with_element(g))
    worst, worst_point, points = 0.0, (), _sample(stratum, resolution)
    for q in points:
        residual = (lhs.form_field(q) - rhs.form_field(q)).max_norm()
        if residual >= worst:
            worst, worst_point = residual, tuple(np.ravel(q).tolist())
    logger.debug("axiom 2 at eps=%g: %.3e", eps, worst)
    return ResidualReport(f"axiom2(eps={eps:g})", worst, worst_point, geom.tolerances.axiom, len(points))


def integrate_top_form(
    field: Union[BouquetEntry, Callable[[np.ndarray], FormValue]],
    chart: Optional[Chart] = None,
    resolution: Optional[int] = None,
) -> complex:
    """Trapezoid quadrature of the top-degree coefficient, times the chart orientation."""
    if isinstance(field, BouquetEntry):
        chart = chart or field.stratum.sub_chart
    if chart is None:
        raise ValidationError("integrate_top_form needs a chart for plain form fields")
    top = (1 << chart.dim) - 1
    samples = np.array([np.trace(field(p).coefficient(top)) for p in chart.grid(resolution)], dtype=complex)
    return _chart_quadrature(samples, chart, resolution)


def _chart_quadrature(samples: np.ndarray, chart: Chart, resolution: Optional[int]) -> complex:
    if not np.all(np.isfinite(samples)):
        raise NumericError("non-finite samples in top-form quadrature")
    axes = chart.axes(resolution)
    values = samples.reshape(tuple(len(axis) for axis in axes)) if axes else samples.reshape(())
    for axis in reversed(axes):
        values = integrate.trapezoid(values, axis, axis=-1)
    result = complex(values) * chart.orientation
    logger.debug("integrated top form on %s (%d samples): %s", chart.label, samples.size, result)
    return result


def chern_number(
    geom: EquivariantGeometry,
    resolution: Optional[int] = None,
    normalization: Normalization = Normalization.CHERN_INTEGER,
) -> complex:
    """Integral of the top-degree part of Tr exp((i/2pi) F) over the chart.

    On a surface the top part is (i/2pi) Tr F_12, so only the curvature
    density is sampled; other dimensions go through the full petal.
    """
    if geom.dim != 2:
        entry = chern_character(geom, geom.group.identity(), None, None, normalization)
        return integrate_top_form(entry, geom.chart, resolution)
    density = curvature_density(geom.connection, geom.chart.grid(resolution), geom.tolerances.exterior_step)
    samples = normalization.curvature_factor * np.trace(density, axis1=1, axis2=2)
    return _chart_quadrature(samples, geom.chart, resolution)


@dataclass(frozen=True)
class BorelTaylorReport:
    """eps-derivatives of alpha_{e^{eps X}} at a fixed point against Tr(mu(X)^k)."""

    point: Tuple[float, ...]
    derivatives: Tuple[complex, ...]
    expected: Tuple[complex, ...]

    @property
    def deviation(self) -> float:
        return max(abs(a - b) for a, b in zip(self.derivatives, self.expected))


def borel_taylor_report(
    geom: EquivariantGeometry,
    X: np.ndarray,
    point: Sequence[float],
    order: int = 3,
    eps: float = 1e-2,
) -> BorelTaylorReport:
    """Taylor coefficients at the identity of eps -> alpha_{e^{eps X}}(0) at a zero of X_M."""
    X = np.atleast_2d(np.asarray(X, dtype=complex))
    p = np.asarray(point, dtype=float).reshape(-1)
    zero = np.zeros_like(X)

    def petal(e: float) -> complex:
        g = geom.group.exp(e * X)
        return chern_character(geom, g, zero, point_stratum(geom, g, p)).value()

    nodes = np.arange(-order, order + 1, dtype=float)
    values = np.array([petal(eps * u) for u in nodes])
    degree = 2 * order
    real = np.polyfit(nodes, values.real, degree)[::-1]
    imag = np.polyfit(nodes, values.imag, degree)[::-1]
    derivatives = tuple(
        complex(real[k] + 1j * imag[k]) * math.factorial(k) / eps**k for k in range(order + 1)
    )
    mu = moment(geom, X, p)
    expected = tuple(complex(np.trace(np.linalg.matrix_power(mu, k))) for k in range(order + 1))
    return BorelTaylorReport(tuple(p.tolist()), derivatives, expected)


@dataclass(frozen=True)
class CharacterRow:
    phi: float
    xi: float
    value: complex
    expected: complex

    @property
    def error(self) -> float:
        return abs(self.value - self.expected)


def character_table(
    geom: EquivariantGeometry,
    samples: Iterable[Tuple[float, float]],
    direction: Optional[Sequence[float]] = None,
    point: Sequence[float] = (),
) -> List[CharacterRow]:
    """alpha_g(X) at a fixed point for g = exp(phi B), X = xi B against Tr(c(g e^X))."""
    group = geom.group
    coords = np.eye(group.dim)[0] if direction is None else np.asarray(direction, dtype=float)
    B = group.element(coords)
    p = np.asarray(point, dtype=float).reshape(-1)
    rows = []
    for phi, xi in samples:
        g = group.exp(phi * B)
        entry = chern_character(geom, g, xi * B, point_stratum(geom, g, p))
        expected = complex(np.trace(geom.cocycle(group.exp((phi + xi) * B), p)))
        rows.append(CharacterRow(float(phi), float(xi), entry.value(), expected))
    return rows


def write_form_csv(path: Union[str, Path], entry: BouquetEntry, points: np.ndarray) -> Path:
    """One row per (point, nonzero mask): stratum coordinates, mask, re, im."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    k = entry.stratum.dim
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([f"q{i + 1}" for i in range(k)] + ["mask", "re", "im"])
        for q in points:
            form = entry.form_field(q)
            for mask, matrix in enumerate(form.coefficients):
                value = complex(matrix[0, 0])
                if value != 0:
                    writer.writerow([f"{c:.12g}" for c in np.ravel(q)] + [mask, f"{value.real:.17g}", f"{value.imag:.17g}"])
    return path


def write_character_csv(path: Union[str, Path], rows: Sequence[CharacterRow]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["phi", "xi", "re", "im", "expected_re", "expected_im"])
        for row in rows:
            writer.writerow(
                [f"{row.phi:.17g}", f"{row.xi:.17g}", f"{row.value.real:.17g}", f"{row.value.imag:.17g}",
                 f"{row.expected.real:.17g}", f"{row.expected.imag:.17g}"]
            )
    return path
