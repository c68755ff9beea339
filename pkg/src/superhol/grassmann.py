"""
Finite Grassmann algebras and functions on R^{1|1}.

The odd parameters of families (the test supermanifold S) are modelled by a
block of Grassmann generators. Elements are immutable; all arithmetic returns
new objects.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, Mapping, Optional, Sequence, Union

import numpy as np

from . import algebra
from .exceptions import ConsistencyError, DimensionError, ParityError, SchemaError

logger = logging.getLogger(__name__)

Scalar = Union[int, float, complex]

DEFAULT_TIME_STEP = 1e-5


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class GrassmannElement:
    """Element of Lambda_q (x) C with dense ``2**q`` coefficient storage."""

    __slots__ = ("_coefficients",)
    __hash__ = None  # type: ignore[assignment]

    def __init__(self, coefficients: Sequence[Scalar]):
        array = np.array(coefficients, dtype=complex)
        if array.ndim != 1:
            raise DimensionError("Grassmann coefficients must be one-dimensional")
        algebra.check_generators(algebra.generator_count(array))
        algebra.check_finite(array)
        self._coefficients = _frozen(array)

    @classmethod
    def zero(cls, q: int) -> "GrassmannElement":
        return cls(np.zeros(1 << q, dtype=complex))

    @classmethod
    def scalar(cls, q: int, value: Scalar) -> "GrassmannElement":
        return cls(algebra.identity(q) * value)

    @classmethod
    def one(cls, q: int) -> "GrassmannElement":
        return cls.scalar(q, 1.0)

    @classmethod
    def generator(cls, q: int, index: int) -> "GrassmannElement":
        if not 0 <= index < q:
            raise DimensionError(f"generator {index} outside 0..{q - 1}")
        return cls.from_terms(q, {1 << index: 1.0})

    @classmethod
    def from_terms(cls, q: int, terms: Mapping[int, Scalar]) -> "GrassmannElement":
        array = np.zeros(1 << q, dtype=complex)
        for mask, value in terms.items():
            if not 0 <= mask < (1 << q):
                raise DimensionError(f"mask {mask} outside {q} generators")
            array[mask] = value
        return cls(array)

    @property
    def num_generators(self) -> int:
        return algebra.generator_count(self._coefficients)

    @property
    def coefficients(self) -> np.ndarray:
        return self._coefficients

    @property
    def body(self) -> complex:
        return complex(self._coefficients[0])

    def is_even(self) -> bool:
        return algebra.is_homogeneous(self._coefficients, odd=False)

    def is_odd(self) -> bool:
        return algebra.is_homogeneous(self._coefficients, odd=True)

    def grade(self, degree: int) -> "GrassmannElement":
        keep = algebra.grade_mask(self.num_generators, degree)
        return GrassmannElement(np.where(keep, self._coefficients, 0))

    def _check(self, other: "GrassmannElement") -> None:
        if other.num_generators != self.num_generators:
            raise DimensionError(
                f"generator counts differ: {self.num_generators} vs {other.num_generators}"
            )

    def __add__(self, other: "GrassmannElement") -> "GrassmannElement":
        self._check(other)
        return GrassmannElement(self._coefficients + other._coefficients)

    def __sub__(self, other: "GrassmannElement") -> "GrassmannElement":
        self._check(other)
        return GrassmannElement(self._coefficients - other._coefficients)

    def __neg__(self) -> "GrassmannElement":
        return GrassmannElement(-self._coefficients)

    def __mul__(self, other: Union["GrassmannElement", Scalar]) -> "GrassmannElement":
        if isinstance(other, GrassmannElement):
            return grassmann_mul(self, other)
        return GrassmannElement(self._coefficients * other)

    def __rmul__(self, other: Scalar) -> "GrassmannElement":
        return GrassmannElement(self._coefficients * other)

    def __truediv__(self, other: Scalar) -> "GrassmannElement":
        return GrassmannElement(self._coefficients / other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GrassmannElement):
            return NotImplemented
        return self.num_generators == other.num_generators and bool(
            np.array_equal(self._coefficients, other._coefficients)
        )

    def allclose(self, other: "GrassmannElement", atol: float = 1e-12) -> bool:
        self._check(other)
        return algebra.max_norm(self._coefficients - other._coefficients) <= atol

    def to_json(self) -> Dict[str, Any]:
        terms = [
            {"mask": int(mask), "re": float(value.real), "im": float(value.imag)}
            for mask, value in enumerate(self._coefficients)
            if value != 0
        ]
        return {"q": self.num_generators, "terms": terms}

    @classmethod
    def from_json(cls, payload: Mapping[str, Any]) -> "GrassmannElement":
        try:
            q = int(payload["q"])
            terms = {
                int(term["mask"]): complex(float(term["re"]), float(term.get("im", 0.0)))
                for term in payload["terms"]
            }
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed Grassmann element: {exc}") from exc
        return cls.from_terms(q, terms)

    def __repr__(self) -> str:
        parts = [
            f"{value:.6g}*{_monomial_name(mask)}"
            for mask, value in enumerate(self._coefficients)
            if value != 0
        ]
        return f"GrassmannElement(q={self.num_generators}, {' + '.join(parts) or '0'})"


def _monomial_name(mask: int) -> str:
    if mask == 0:
        return "1"
    return "".join(f"e{j}" for j in range(mask.bit_length()) if mask >> j & 1)


def grassmann_mul(x: GrassmannElement, y: GrassmannElement) -> GrassmannElement:
    """Koszul-signed product of two Grassmann elements."""
    x._check(y)
    return GrassmannElement(algebra.graded_product(x.coefficients, y.coefficients))


def random_element(
    rng: np.random.Generator,
    q: int,
    parity: Optional[str] = None,
    integer: bool = False,
    scale: float = 1.0,
) -> GrassmannElement:
    """Random element; ``integer=True`` draws small integers so products stay exact."""
    size = 1 << q
    if integer:
        values = rng.integers(-3, 4, size=size) + 1j * rng.integers(-3, 4, size=size)
    else:
        values = scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))
    if parity is not None:
        values = np.where(algebra.parity_mask(q, odd=(parity == "odd")), values, 0)
    return GrassmannElement(values)


class GrassmannMatrix:
    """Element of Lambda_q (x) End(C^m): Grassmann-coefficient square matrices."""

    __slots__ = ("_coefficients",)
    __hash__ = None  # type: ignore[assignment]

    def __init__(self, coefficients: np.ndarray):
        array = np.array(coefficients, dtype=complex)
        if array.ndim != 3 or array.shape[1] != array.shape[2]:
            raise DimensionError("expected coefficients of shape (2**q, m, m)")
        algebra.check_generators(algebra.generator_count(array))
        algebra.check_finite(array)
        self._coefficients = _frozen(array)

    @classmethod
    def zero(cls, q: int, m: int) -> "GrassmannMatrix":
        return cls(np.zeros((1 << q, m, m), dtype=complex))

    @classmethod
    def identity(cls, q: int, m: int) -> "GrassmannMatrix":
        return cls(algebra.identity(q, m))

    @classmethod
    def from_body(cls, matrix: np.ndarray, q: int) -> "GrassmannMatrix":
        matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
        array = np.zeros((1 << q,) + matrix.shape, dtype=complex)
        array[0] = matrix
        return cls(array)

    @classmethod
    def from_element(cls, element: GrassmannElement, matrix: np.ndarray) -> "GrassmannMatrix":
        """The pure tensor ``element (x) matrix``."""
        matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
        return cls(element.coefficients[:, None, None] * matrix[None, :, :])

    @property
    def num_generators(self) -> int:
        return algebra.generator_count(self._coefficients)

    @property
    def size(self) -> int:
        return self._coefficients.shape[1]

    @property
    def coefficients(self) -> np.ndarray:
        return self._coefficients

    @property
    def body(self) -> np.ndarray:
        return self._coefficients[0]

    def is_even(self) -> bool:
        return algebra.is_homogeneous(self._coefficients, odd=False)

    def is_odd(self) -> bool:
        return algebra.is_homogeneous(self._coefficients, odd=True)

    def _check(self, other: "GrassmannMatrix") -> None:
        if self._coefficients.shape != other._coefficients.shape:
            raise DimensionError(
                f"shape mismatch {self._coefficients.shape} vs {other._coefficients.shape}"
            )

    def __add__(self, other: "GrassmannMatrix") -> "GrassmannMatrix":
        self._check(other)
        return GrassmannMatrix(self._coefficients + other._coefficients)

    def __sub__(self, other: "GrassmannMatrix") -> "GrassmannMatrix":
        self._check(other)
        return GrassmannMatrix(self._coefficients - other._coefficients)

    def __neg__(self) -> "GrassmannMatrix":
        return GrassmannMatrix(-self._coefficients)

    def __mul__(self, other: Union["GrassmannMatrix", Scalar]) -> "GrassmannMatrix":
        if isinstance(other, GrassmannMatrix):
            self._check(other)
            return GrassmannMatrix(
                algebra.graded_product(self._coefficients, other._coefficients)
            )
        return GrassmannMatrix(self._coefficients * other)

    def __rmul__(self, other: Scalar) -> "GrassmannMatrix":
        return GrassmannMatrix(self._coefficients * other)

    def __truediv__(self, other: Scalar) -> "GrassmannMatrix":
        return GrassmannMatrix(self._coefficients / other)

    def trace(self) -> GrassmannElement:
        return GrassmannElement(np.trace(self._coefficients, axis1=1, axis2=2))

    def exp(self, tol: float = 1e-12) -> "GrassmannMatrix":
        return GrassmannMatrix(algebra.graded_exp(self._coefficients, tol))

    def allclose(self, other: "GrassmannMatrix", atol: float = 1e-12) -> bool:
        self._check(other)
        return algebra.max_norm(self._coefficients - other._coefficients) <= atol

    def max_norm(self) -> float:
        return algebra.max_norm(self._coefficients)

    def apply(self, vector: np.ndarray) -> np.ndarray:
        """Act on a Grassmann-coefficient vector of shape (2**q, m)."""
        vector = np.asarray(vector, dtype=complex)
        padded = np.zeros(self._coefficients.shape, dtype=complex)
        padded[:, :, 0] = vector
        product = algebra.graded_product(self._coefficients, padded)
        return product[:, :, 0]

    def __repr__(self) -> str:
        return f"GrassmannMatrix(q={self.num_generators}, m={self.size})"


# ---------------------------------------------------------------------------
# The super Lie group E^{1|1}


@dataclass(frozen=True)
class SuperPoint11:
    """An S-point (t, theta) of R^{1|1}: t even, theta odd."""

    t: GrassmannElement
    theta: GrassmannElement

    def __post_init__(self) -> None:
        if self.t.num_generators != self.theta.num_generators:
            raise DimensionError("t and theta use different generator counts")
        if not self.t.is_even():
            raise ParityError("the time coordinate t must be even")
        if not self.theta.is_odd():
            raise ParityError("the odd coordinate theta must be odd")

    @classmethod
    def identity(cls, q: int) -> "SuperPoint11":
        return cls(GrassmannElement.zero(q), GrassmannElement.zero(q))

    def inverse(self) -> "SuperPoint11":
        return SuperPoint11(-self.t, -self.theta)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SuperPoint11):
            return NotImplemented
        return self.t == other.t and self.theta == other.theta


def e11_compose(p: SuperPoint11, q: SuperPoint11) -> SuperPoint11:
    """Group law (t, theta)(s, eta) = (t + s + theta*eta, theta + eta)."""
    if p.t.num_generators != q.t.num_generators:
        raise DimensionError("super points use different generator counts")
    return SuperPoint11(p.t + q.t + p.theta * q.theta, p.theta + q.theta)


# ---------------------------------------------------------------------------
# Functions on R^{1|1} and the odd vector field D


@dataclass(frozen=True)
class SuperValue:
    """The value f0 + theta*f1 of a function on R^{1|1} at a fixed time."""

    even: GrassmannElement
    odd: GrassmannElement

    def allclose(self, other: "SuperValue", atol: float = 1e-12) -> bool:
        return self.even.allclose(other.even, atol) and self.odd.allclose(other.odd, atol)

    def max_difference(self, other: "SuperValue") -> float:
        return max(
            algebra.max_norm(self.even.coefficients - other.even.coefficients),
            algebra.max_norm(self.odd.coefficients - other.odd.coefficients),
        )


GrassmannCurve = Callable[[float], GrassmannElement]


def _central_difference(curve: GrassmannCurve, step: float) -> GrassmannCurve:
    def derivative(t: float) -> GrassmannElement:
        return (curve(t + step) - curve(t - step)) / (2.0 * step)

    return derivative


@dataclass(frozen=True)
class SuperFunction:
    """f(t, theta) = f0(t) + theta f1(t) with Grassmann-valued components.

    ``odd=False`` (the default) is an even function: f0 even, f1 odd. An odd
    function such as theta itself has f0 odd and f1 even. Time derivatives use
    the analytic callbacks when supplied and central differences otherwise.
    """

    even_part: GrassmannCurve
    odd_part: GrassmannCurve
    odd: bool = False
    even_derivative: Optional[GrassmannCurve] = None
    odd_derivative: Optional[GrassmannCurve] = None
    time_step: float = DEFAULT_TIME_STEP

    def value(self, t: float) -> SuperValue:
        f0, f1 = self.even_part(t), self.odd_part(t)
        if not algebra.is_homogeneous(f0.coefficients, odd=self.odd):
            raise ParityError(f"f0({t}) has the wrong parity")
        if not algebra.is_homogeneous(f1.coefficients, odd=not self.odd):
            raise ParityError(f"f1({t}) has the wrong parity")
        return SuperValue(f0, f1)

    def _derivative_of(self, curve: GrassmannCurve, analytic: Optional[GrassmannCurve]):
        return analytic if analytic is not None else _central_difference(curve, self.time_step)

    def time_derivative(self) -> "SuperFunction":
        """The function d/dt f."""
        return SuperFunction(
            even_part=self._derivative_of(self.even_part, self.even_derivative),
            odd_part=self._derivative_of(self.odd_part, self.odd_derivative),
            odd=self.odd,
            time_step=self.time_step,
        )

    def D(self) -> "SuperFunction":
        """D = d/dtheta + theta d/dt, so D(f0 + theta f1) = f1 + theta f0'."""
        return SuperFunction(
            even_part=self.odd_part,
            odd_part=self._derivative_of(self.even_part, self.even_derivative),
            odd=not self.odd,
            even_derivative=self.odd_derivative,
            time_step=self.time_step,
        )


def apply_D(f: SuperFunction, t: float) -> SuperValue:
    """Value of Df at time t."""
    return f.D().value(t)


def pullback_ev(
    f_base: Callable[[np.ndarray], float],
    df_base: Callable[[np.ndarray], np.ndarray],
    point: Sequence[float],
    psi: Sequence[GrassmannElement],
    step: float = DEFAULT_TIME_STEP,
    tol: float = 1e-6,
    sample_points: Sequence[Sequence[float]] = (),
) -> SuperValue:
    """ev^*(f) = f + theta df(psi) at ``point`` with odd tangent datum ``psi``.

    ``df_base`` is checked against central differences of ``f_base`` at
    ``point`` and at every extra sample point.
    """
    x = np.asarray(point, dtype=float)
    if len(psi) != x.size:
        raise DimensionError(f"odd tangent datum has {len(psi)} components, chart has {x.size}")
    q = psi[0].num_generators if psi else 0
    for component in psi:
        if not component.is_odd():
            raise ParityError("odd tangent components must be odd")

    for sample in [x, *(np.asarray(s, dtype=float) for s in sample_points)]:
        supplied = np.asarray(df_base(sample), dtype=complex).reshape(-1)
        numeric = np.array(
            [
                (f_base(sample + step * e) - f_base(sample - step * e)) / (2.0 * step)
                for e in np.eye(x.size)
            ],
            dtype=complex,
        )
        deviation = float(np.max(np.abs(supplied - numeric))) if x.size else 0.0
        if deviation > tol * max(1.0, float(np.max(np.abs(numeric), initial=0.0))):
            raise ConsistencyError(
                f"differential deviates from finite differences by {deviation:.3e} at {sample.tolist()}"
            )

    gradient = np.asarray(df_base(x), dtype=complex).reshape(-1)
    odd_part = GrassmannElement.zero(q)
    for coefficient, component in zip(gradient, psi):
        odd_part = odd_part + coefficient * component
    return SuperValue(GrassmannElement.scalar(q, complex(f_base(x))), odd_part)


# ---------------------------------------------------------------------------
# Connections on R^{0|1} and gauge transformations
#
# A connection d(theta) (x) alpha + theta d(theta) (x) a is stored by its
# d(theta)-coefficient alpha + theta a. Gauge data lives in Lambda_{q+1} whose
# generator 0 is theta; the family generators are shifted up by one.


def embed_theta(x: GrassmannMatrix) -> GrassmannMatrix:
    """Lambda_q -> Lambda_{q+1}, freeing generator 0 for theta."""
    source = x.coefficients
    target = np.zeros((source.shape[0] * 2,) + source.shape[1:], dtype=complex)
    target[0::2] = source
    return GrassmannMatrix(target)


def theta_times(x: GrassmannMatrix) -> GrassmannMatrix:
    """Left multiplication by theta (generator 0) in Lambda_{q+1}."""
    source = x.coefficients
    target = np.zeros_like(source)
    target[1::2] = source[0::2]
    return GrassmannMatrix(target)


def theta_derivative(x: GrassmannMatrix) -> GrassmannMatrix:
    """Left derivative along theta; theta is leftmost so no sign appears."""
    source = x.coefficients
    target = np.zeros_like(source)
    target[0::2] = source[1::2]
    return GrassmannMatrix(target)


def split_theta(x: GrassmannMatrix):
    """Write x = x0 + theta x1 and return (x0, x1) in Lambda_q."""
    source = x.coefficients
    return GrassmannMatrix(source[0::2]), GrassmannMatrix(source[1::2])


@dataclass(frozen=True)
class SuperConnectionForm:
    """A = d(theta) (x) alpha + theta d(theta) (x) a with alpha odd and a even."""

    alpha: GrassmannMatrix
    a: GrassmannMatrix

    def __post_init__(self) -> None:
        if self.alpha.coefficients.shape != self.a.coefficients.shape:
            raise DimensionError("alpha and a must share generators and matrix size")
        if not self.alpha.is_odd():
            raise ParityError("alpha must be odd")
        if not self.a.is_even():
            raise ParityError("a must be even")

    @classmethod
    def constant(cls, a: GrassmannMatrix) -> "SuperConnectionForm":
        """The constant G-connection theta d(theta) (x) a."""
        return cls(GrassmannMatrix.zero(a.num_generators, a.size), a)

    @property
    def num_generators(self) -> int:
        return self.a.num_generators

    def coefficient(self) -> GrassmannMatrix:
        """alpha + theta a in Lambda_{q+1}."""
        return embed_theta(self.alpha) + theta_times(embed_theta(self.a))

    def allclose(self, other: "SuperConnectionForm", atol: float = 1e-12) -> bool:
        return self.alpha.allclose(other.alpha, atol) and self.a.allclose(other.a, atol)


@dataclass(frozen=True)
class GaugeMap:
    """A map R^{0|1} x S -> G given with its inverse, both in Lambda_{q+1}."""

    value: GrassmannMatrix
    inverse: GrassmannMatrix

    @classmethod
    def from_exponent(cls, exponent: GrassmannMatrix, tol: float = 1e-12) -> "GaugeMap":
        if not exponent.is_even():
            raise ParityError("gauge exponents must be even (e.g. -theta*alpha or an even Lie element)")
        return cls(exponent.exp(tol), (-exponent).exp(tol))

    @classmethod
    def identity(cls, q: int, m: int) -> "GaugeMap":
        unit = GrassmannMatrix.identity(q + 1, m)
        return cls(unit, unit)

    @classmethod
    def odd_reduction(cls, alpha: GrassmannMatrix) -> "GaugeMap":
        """exp(-theta alpha), the map that removes the d(theta) (x) alpha term."""
        if not alpha.is_odd():
            raise ParityError("alpha must be odd")
        return cls.from_exponent(-theta_times(embed_theta(alpha)))

    @property
    def num_generators(self) -> int:
        """Family generators, excluding theta."""
        return self.value.num_generators - 1

    def compose(self, other: "GaugeMap") -> "GaugeMap":
        """The pointwise product self * other."""
        return GaugeMap(self.value * other.value, other.inverse * self.inverse)


def gauge_transform(connection: SuperConnectionForm, gauge: GaugeMap) -> SuperConnectionForm:
    """A -> g^{-1} A g + g^{-1} d g on the d(theta)-coefficient.

    This is a right action: transforming by g and then g' equals transforming
    by ``g.compose(g')``.
    """
    if gauge.num_generators != connection.num_generators:
        raise DimensionError("gauge map and connection use different generator counts")
    if gauge.value.size != connection.a.size:
        raise DimensionError("gauge map and connection use different matrix sizes")
    coefficient = connection.coefficient()
    transformed = (
        gauge.inverse * coefficient * gauge.value
        + gauge.inverse * theta_derivative(gauge.value)
    )
    alpha, a = split_theta(transformed)
    logger.debug("gauge transform: |alpha'| = %.3e", alpha.max_norm())
    return SuperConnectionForm(alpha, a)
