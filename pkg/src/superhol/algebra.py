"""
Graded algebra kernel.

Grassmann elements, Grassmann-coefficient matrices and pointwise differential
forms are all elements of Lambda(k) (x) End(C^d), stored densely as complex arrays
of shape ``(2**k,)`` (scalars) or ``(2**k, d, d)`` (matrices). Index ``mask``
stands for the ordered monomial of the generators whose bits are set.
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache
from typing import Tuple

import numpy as np

from .exceptions import DimensionError, NumericError, ParityError

logger = logging.getLogger(__name__)

MAX_GENERATORS = 8


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def koszul_sign(left: int, right: int) -> int:
    """Sign of reordering ``left * right`` into ascending order; 0 if they share a generator."""
    if left & right:
        return 0
    swaps = 0
    rest = right
    while rest:
        low = rest & -rest
        j = low.bit_length() - 1
        swaps += popcount(left >> (j + 1))
        rest ^= low
    return -1 if swaps % 2 else 1


def check_generators(k: int) -> None:
    if not 0 <= k <= MAX_GENERATORS:
        raise DimensionError(f"generator count {k} outside [0, {MAX_GENERATORS}]")


@lru_cache(maxsize=None)
def degrees(k: int) -> np.ndarray:
    check_generators(k)
    return np.array([popcount(mask) for mask in range(1 << k)], dtype=int)


@lru_cache(maxsize=None)
def product_table(k: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Disjoint mask pairs (left, right), their union and Koszul sign."""
    check_generators(k)
    left, right, out, sign = [], [], [], []
    for a in range(1 << k):
        for b in range(1 << k):
            s = koszul_sign(a, b)
            if s:
                left.append(a)
                right.append(b)
                out.append(a | b)
                sign.append(s)
    logger.debug("built product table for %d generators (%d terms)", k, len(out))
    return (
        np.array(left, dtype=int),
        np.array(right, dtype=int),
        np.array(out, dtype=int),
        np.array(sign, dtype=float),
    )


def generator_count(coefficients: np.ndarray) -> int:
    size = coefficients.shape[0]
    k = size.bit_length() - 1
    if size != 1 << k:
        raise DimensionError(f"coefficient length {size} is not a power of two")
    return k


def graded_product(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Product in Lambda(k) (x) End(C^d); matrices multiply in the given order."""
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {y.shape}")
    k = generator_count(x)
    left, right, out, sign = product_table(k)
    if x.ndim == 1:
        terms = sign * x[left] * y[right]
    else:
        terms = sign[:, None, None] * np.matmul(x[left], y[right])
    result = np.zeros_like(x, dtype=complex)
    np.add.at(result, out, terms)
    return result


def identity(k: int, d: int = 0) -> np.ndarray:
    """Unit element; ``d == 0`` gives the scalar (1-D) layout."""
    check_generators(k)
    if d == 0:
        unit = np.zeros(1 << k, dtype=complex)
        unit[0] = 1.0
        return unit
    unit = np.zeros((1 << k, d, d), dtype=complex)
    unit[0] = np.eye(d)
    return unit


def grade_mask(k: int, degree: int) -> np.ndarray:
    return degrees(k) == degree


def parity_mask(k: int, odd: bool) -> np.ndarray:
    return (degrees(k) % 2) == (1 if odd else 0)


def is_homogeneous(x: np.ndarray, odd: bool) -> bool:
    """True when every coefficient of the opposite parity is exactly zero."""
    k = generator_count(x)
    wrong = parity_mask(k, not odd)
    return not np.any(x[wrong] != 0)


def max_norm(x: np.ndarray) -> float:
    if x.size == 0:
        return 0.0
    return float(np.max(np.abs(x)))


def check_finite(x: np.ndarray, what: str = "coefficients") -> None:
    if not np.all(np.isfinite(x)):
        raise NumericError(f"non-finite {what}")


def graded_exp(x: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Exponential of an even element by scaling and squaring.

    Nilpotent inputs (zero body) and scalar inputs are summed exactly: the
    nilpotent series stops after ``k // 2`` terms.
    """
    check_finite(x)
    if not is_homogeneous(x, odd=False):
        raise ParityError("exponential needs an even element")
    k = generator_count(x)
    scalar = x.ndim == 1
    d = 0 if scalar else x.shape[1]
    unit = identity(k, d)
    body = x[0]

    if max_norm(body) == 0.0:
        return _nilpotent_series(x, unit, k)
    if scalar or d == 1:
        # commuting body: exp(m + N) = exp(m) * sum N^j / j!
        nilpotent = x.copy()
        nilpotent[0] = 0.0
        return np.exp(body) * _nilpotent_series(nilpotent, unit, k)

    norm = max_norm(x) * x.shape[1]
    squarings = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    scaled = x / float(1 << squarings)
    series_tol = tol * 1e-4 / float(1 << squarings)

    result = unit.copy()
    term = unit.copy()
    for j in range(1, 200):
        term = graded_product(term, scaled) / j
        result = result + term
        if max_norm(term) <= series_tol * max_norm(result):
            break
    for _ in range(squarings):
        result = graded_product(result, result)
    logger.debug("graded_exp: %d squarings, %d series terms", squarings, j)
    check_finite(result, "exponential")
    return result


def _nilpotent_series(nilpotent: np.ndarray, unit: np.ndarray, k: int) -> np.ndarray:
    result = unit.copy()
    term = unit.copy()
    for j in range(1, k // 2 + 1):
        term = graded_product(term, nilpotent) / j
        result = result + term
    return result
