"""
Pointwise exterior algebra Lambda(R^n)* (x) End(C^d).

A ``FormValue`` is the value of an endomorphism-valued differential form at one
chart point: ``2**n`` complex d x d matrices indexed by the covector subset
bitmask (bit j is dx^{j+1}, subsets in ascending order).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence

import numpy as np

from . import algebra
from .exceptions import DimensionError, NumericError, ParityError, SchemaError
from .grassmann import GrassmannMatrix

logger = logging.getLogger(__name__)

MAX_BASE_DIM = 6


class FormValue:
    """Immutable element of Lambda(R^n)* (x) End(C^d)."""

    __slots__ = ("_coefficients",)
    __hash__ = None  # type: ignore[assignment]

    def __init__(self, coefficients: np.ndarray):
        array = np.array(coefficients, dtype=complex)
        if array.ndim != 3 or array.shape[1] != array.shape[2]:
            raise DimensionError("form coefficients must have shape (2**n, d, d)")
        n = algebra.generator_count(array)
        if n > MAX_BASE_DIM:
            raise DimensionError(f"base dimension {n} exceeds {MAX_BASE_DIM}")
        if not np.all(np.isfinite(array)):
            raise NumericError("non-finite form coefficients")
        array.setflags(write=False)
        self._coefficients = array

    # -- construction -------------------------------------------------------

    @classmethod
    def zero(cls, n: int, d: int = 1) -> "FormValue":
        return cls(np.zeros((1 << n, d, d), dtype=complex))

    @classmethod
    def identity(cls, n: int, d: int = 1) -> "FormValue":
        return cls(algebra.identity(n, d))

    @classmethod
    def from_matrix(cls, n: int, matrix: np.ndarray) -> "FormValue":
        """Degree-0 form with the given fiber matrix."""
        matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
        array = np.zeros((1 << n,) + matrix.shape, dtype=complex)
        array[0] = matrix
        return cls(array)

    @classmethod
    def from_terms(cls, n: int, terms: Mapping[int, Any], d: Optional[int] = None) -> "FormValue":
        """Build from ``{mask: matrix or scalar}``."""
        if d is None:
            d = max((np.atleast_2d(v).shape[0] for v in terms.values()), default=1)
        array = np.zeros((1 << n, d, d), dtype=complex)
        for mask, value in terms.items():
            if not 0 <= mask < (1 << n):
                raise DimensionError(f"mask {mask} outside base dimension {n}")
            value = np.asarray(value, dtype=complex)
            array[mask] = value * np.eye(d) if value.ndim == 0 else value
        return cls(array)

    @classmethod
    def one_form(cls, components: Sequence[np.ndarray]) -> "FormValue":
        """sum_j components[j] dx^{j+1}."""
        n = len(components)
        return cls.from_terms(n, {1 << j: c for j, c in enumerate(components)})

    # -- accessors ----------------------------------------------------------

    @property
    def base_dim(self) -> int:
        return algebra.generator_count(self._coefficients)

    @property
    def fiber_rank(self) -> int:
        return self._coefficients.shape[1]

    @property
    def coefficients(self) -> np.ndarray:
        return self._coefficients

    def coefficient(self, mask: int) -> np.ndarray:
        return self._coefficients[mask]

    def scalar(self, mask: int = 0) -> complex:
        if self.fiber_rank != 1:
            raise DimensionError("scalar() needs fiber rank 1")
        return complex(self._coefficients[mask, 0, 0])

    def max_norm(self) -> float:
        return algebra.max_norm(self._coefficients)

    def is_even(self) -> bool:
        return algebra.is_homogeneous(self._coefficients, odd=False)

    def is_odd(self) -> bool:
        return algebra.is_homogeneous(self._coefficients, odd=True)

    def degrees_present(self) -> set:
        nonzero = np.any(self._coefficients != 0, axis=(1, 2))
        return {int(deg) for deg in algebra.degrees(self.base_dim)[nonzero]}

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other: "FormValue") -> None:
        if self._coefficients.shape != other._coefficients.shape:
            raise DimensionError(
                f"forms differ in (n, d): ({self.base_dim}, {self.fiber_rank}) vs "
                f"({other.base_dim}, {other.fiber_rank})"
            )

    def __add__(self, other: "FormValue") -> "FormValue":
        self._check(other)
        return FormValue(self._coefficients + other._coefficients)

    def __sub__(self, other: "FormValue") -> "FormValue":
        self._check(other)
        return FormValue(self._coefficients - other._coefficients)

    def __neg__(self) -> "FormValue":
        return FormValue(-self._coefficients)

    def __mul__(self, other: Any) -> "FormValue":
        if isinstance(other, FormValue):
            return wedge(self, other)
        return FormValue(self._coefficients * other)

    def __rmul__(self, other: Any) -> "FormValue":
        return FormValue(other * self._coefficients)

    def __truediv__(self, other: Any) -> "FormValue":
        return FormValue(self._coefficients / other)

    def left_matrix(self, matrix: np.ndarray) -> "FormValue":
        """Multiply every coefficient on the left by a fiber matrix."""
        return FormValue(np.matmul(np.asarray(matrix, dtype=complex), self._coefficients))

    def right_matrix(self, matrix: np.ndarray) -> "FormValue":
        return FormValue(np.matmul(self._coefficients, np.asarray(matrix, dtype=complex)))

    def allclose(self, other: "FormValue", atol: float = 1e-12) -> bool:
        self._check(other)
        return (self - other).max_norm() <= atol

    def __repr__(self) -> str:
        return f"FormValue(n={self.base_dim}, d={self.fiber_rank}, degrees={sorted(self.degrees_present())})"

    # -- serialization ------------------------------------------------------

    def to_json(self) -> Dict[str, Any]:
        coeffs = []
        for mask, matrix in enumerate(self._coefficients):
            if np.any(matrix != 0):
                coeffs.append(
                    {
                        "mask": mask,
                        "matrix": [
                            [{"re": float(v.real), "im": float(v.imag)} for v in row]
                            for row in matrix
                        ],
                    }
                )
        return {"n": self.base_dim, "d": self.fiber_rank, "coeffs": coeffs}

    @classmethod
    def from_json(cls, payload: Mapping[str, Any]) -> "FormValue":
        try:
            n, d = int(payload["n"]), int(payload["d"])
            array = np.zeros((1 << n, d, d), dtype=complex)
            for entry in payload["coeffs"]:
                array[int(entry["mask"])] = [
                    [complex(float(v["re"]), float(v.get("im", 0.0))) for v in row]
                    for row in entry["matrix"]
                ]
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise SchemaError(f"malformed form value: {exc}") from exc
        return cls(array)


@dataclass(frozen=True)
class TangentVector:
    """Chart-coordinate velocity."""

    components: tuple

    def __init__(self, components: Iterable[float]):
        values = tuple(float(c) for c in components)
        if not all(np.isfinite(values)):
            raise NumericError("tangent vector has non-finite entries")
        object.__setattr__(self, "components", values)

    @property
    def dim(self) -> int:
        return len(self.components)

    def as_array(self) -> np.ndarray:
        return np.array(self.components, dtype=float)

    def __add__(self, other: "TangentVector") -> "TangentVector":
        return TangentVector(self.as_array() + other.as_array())

    def __mul__(self, factor: float) -> "TangentVector":
        return TangentVector(self.as_array() * factor)

    __rmul__ = __mul__


def wedge(x: FormValue, y: FormValue) -> FormValue:
    """Wedge product; fiber matrices multiply in the order x then y."""
    x._check(y)
    return FormValue(algebra.graded_product(x.coefficients, y.coefficients))


def contract(v: TangentVector, x: FormValue) -> FormValue:
    """Interior product: iota_v(dx^I) = sum_j (-1)^{pos(j, I)} v_j dx^{I - j}."""
    n = x.base_dim
    if v.dim != n:
        raise DimensionError(f"vector of dimension {v.dim} on a {n}-dimensional chart")
    source = x.coefficients
    result = np.zeros_like(source)
    for mask in range(1 << n):
        if not np.any(source[mask]):
            continue
        position = 0
        for j in range(n):
            if mask >> j & 1:
                sign = -1.0 if position % 2 else 1.0
                result[mask ^ (1 << j)] += sign * v.components[j] * source[mask]
                position += 1
    return FormValue(result)


def trace(x: FormValue) -> FormValue:
    """Fiberwise matrix trace; the result has fiber rank 1."""
    traced = np.trace(x.coefficients, axis1=1, axis2=2)
    return FormValue(traced[:, None, None])


def grade_project(x: FormValue, degree: int) -> FormValue:
    if not 0 <= degree <= x.base_dim:
        raise DimensionError(f"degree {degree} outside 0..{x.base_dim}")
    keep = algebra.grade_mask(x.base_dim, degree)
    return FormValue(np.where(keep[:, None, None], x.coefficients, 0))


def even_part(x: FormValue) -> FormValue:
    keep = algebra.parity_mask(x.base_dim, odd=False)
    return FormValue(np.where(keep[:, None, None], x.coefficients, 0))


def odd_part(x: FormValue) -> FormValue:
    keep = algebra.parity_mask(x.base_dim, odd=True)
    return FormValue(np.where(keep[:, None, None], x.coefficients, 0))


def exp_even(x: FormValue, tol: float = 1e-12) -> FormValue:
    """Exponential in Lambda(R^n)* (x) End(C^d) of an even form."""
    if not x.is_even():
        raise ParityError("exp_even needs a form without odd-degree components")
    return FormValue(algebra.graded_exp(x.coefficients, tol))


def pullback_linear(x: FormValue, jacobian: np.ndarray) -> FormValue:
    """Pullback along a linear map with matrix ``jacobian`` (ambient n x source k).

    dx^I pulls back to sum_K det(J[I, K]) du^K.
    """
    jacobian = np.asarray(jacobian, dtype=float)
    n = x.base_dim
    if jacobian.ndim != 2 or jacobian.shape[0] != n:
        raise DimensionError(f"Jacobian of shape {jacobian.shape} cannot pull back a form on R^{n}")
    k = jacobian.shape[1]
    source = x.coefficients
    result = np.zeros((1 << k, x.fiber_rank, x.fiber_rank), dtype=complex)
    result[0] = source[0]
    for degree in range(1, min(n, k) + 1):
        for rows in combinations(range(n), degree):
            mask_in = sum(1 << r for r in rows)
            if not np.any(source[mask_in]):
                continue
            for cols in combinations(range(k), degree):
                minor = np.linalg.det(jacobian[np.ix_(rows, cols)])
                if minor != 0.0:
                    result[sum(1 << c for c in cols)] += minor * source[mask_in]
    return FormValue(result)


def to_grassmann(x: FormValue, q: Optional[int] = None) -> GrassmannMatrix:
    """Replace dx^{j+1} by the Grassmann generator psi^j (optionally in a larger algebra)."""
    n = x.base_dim
    q = n if q is None else q
    if q < n:
        raise DimensionError(f"need at least {n} generators, got {q}")
    array = np.zeros((1 << q, x.fiber_rank, x.fiber_rank), dtype=complex)
    array[: 1 << n] = x.coefficients
    return GrassmannMatrix(array)


def from_grassmann(m: GrassmannMatrix) -> FormValue:
    """Inverse of ``to_grassmann`` for q = n."""
    return FormValue(m.coefficients)
