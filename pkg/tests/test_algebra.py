import sys
import unittest
from pathlib import Path

# Add src to path so we can import our modules
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg

from superhol import algebra
from superhol.config import DEFAULT_TOLERANCES, Normalization, Tolerances
from superhol.exceptions import DimensionError, NumericError, ParityError, SchemaError


def small_integer_array(k):
    """Strategy for exact scalar elements of Lambda(k) with small integer coefficients."""
    return st.lists(st.integers(-4, 4), min_size=1 << k, max_size=1 << k).map(
        lambda values: np.array(values, dtype=complex)
    )


class TestKoszulSigns(unittest.TestCase):
    """Test cases for mask products and their signs."""

    def test_ordered_product_is_positive(self):
        """Test e0 * e1 needs no reordering."""
        self.assertEqual(algebra.koszul_sign(0b01, 0b10), 1)

    def test_reversed_product_is_negative(self):
        """Test e1 * e0 = -e0 e1."""
        self.assertEqual(algebra.koszul_sign(0b10, 0b01), -1)

    def test_repeated_generator_vanishes(self):
        """Test a shared generator kills the product."""
        self.assertEqual(algebra.koszul_sign(0b011, 0b010), 0)

    def test_three_generator_sign(self):
        """Test (e1 e2) * e0 = e0 e1 e2 after two swaps."""
        self.assertEqual(algebra.koszul_sign(0b110, 0b001), 1)
        self.assertEqual(algebra.koszul_sign(0b100, 0b011), 1)
        self.assertEqual(algebra.koszul_sign(0b010, 0b101), -1)


class TestGradedProduct(unittest.TestCase):
    """Test cases for the dense graded product."""

    def setUp(self):
        """Set up test fixtures before each test method."""
        self.k = 3
        self.e = [np.eye(1 << self.k, dtype=complex)[1 << j] for j in range(self.k)]

    def test_generators_anticommute(self):
        """Test e_i e_j = -e_j e_i and e_i^2 = 0."""
        for i in range(self.k):
            self.assertEqual(algebra.max_norm(algebra.graded_product(self.e[i], self.e[i])), 0.0)
            for j in range(self.k):
                if i != j:
                    np.testing.assert_array_equal(
                        algebra.graded_product(self.e[i], self.e[j]),
                        -algebra.graded_product(self.e[j], self.e[i]),
                    )

    @given(small_integer_array(3), small_integer_array(3), small_integer_array(3))
    @settings(max_examples=60, deadline=None)
    def test_associativity_is_exact(self, x, y, z):
        """Test (xy)z = x(yz) exactly for integer coefficients."""
        left = algebra.graded_product(algebra.graded_product(x, y), z)
        right = algebra.graded_product(x, algebra.graded_product(y, z))
        np.testing.assert_array_equal(left, right)

    def test_matrix_coefficients_multiply_in_order(self):
        """Test body matrices multiply as x then y."""
        a = np.array([[0, 1], [0, 0]], dtype=complex)
        b = np.array([[0, 0], [1, 0]], dtype=complex)
        x = algebra.identity(1, 2) * 0
        y = algebra.identity(1, 2) * 0
        x[0], y[0] = a, b
        np.testing.assert_array_equal(algebra.graded_product(x, y)[0], a @ b)

    def test_shape_mismatch(self):
        """Test multiplying elements of different algebras fails."""
        with self.assertRaises(DimensionError):
            algebra.graded_product(np.zeros(4), np.zeros(8))

    def test_length_must_be_power_of_two(self):
        """Test coefficient arrays of length 3 are rejected."""
        with self.assertRaises(DimensionError):
            algebra.generator_count(np.zeros(3))

    def test_too_many_generators(self):
        """Test the generator ceiling."""
        with self.assertRaises(DimensionError):
            algebra.check_generators(algebra.MAX_GENERATORS + 1)


class TestGradedExp(unittest.TestCase):
    """Test cases for the exponential of even elements."""

    def test_nilpotent_series_is_exact(self):
        """Test exp(e0 e1) = 1 + e0 e1."""
        x = np.zeros(4, dtype=complex)
        x[0b11] = 2.5
        expected = algebra.identity(2)
        expected[0b11] = 2.5
        np.testing.assert_array_equal(algebra.graded_exp(x), expected)

    def test_scalar_body_factors_out(self):
        """Test exp(b + N) = e^b (1 + N) for a scalar body."""
        x = np.zeros(4, dtype=complex)
        x[0], x[0b11] = 0.7j, 1.0
        result = algebra.graded_exp(x)
        self.assertAlmostEqual(result[0], np.exp(0.7j), places=14)
        self.assertAlmostEqual(result[0b11], np.exp(0.7j), places=14)

    def test_matrix_body_matches_expm(self):
        """Test scaling and squaring against scipy on a plain matrix."""
        rng = np.random.default_rng(7)
        m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        result = algebra.graded_exp(m[None] * 2.0)[0]
        np.testing.assert_allclose(result, linalg.expm(2.0 * m), rtol=1e-10)

    def test_matrix_body_with_nilpotent_part(self):
        """Test exp(M + e0e1 N) against the derivative formula for commuting M, N."""
        M = np.diag([0.3j, -1.1])
        N = np.diag([2.0, 0.5j])
        x = np.zeros((4, 2, 2), dtype=complex)
        x[0], x[0b11] = M, N
        result = algebra.graded_exp(x)
        np.testing.assert_allclose(result[0], linalg.expm(M), atol=1e-13)
        np.testing.assert_allclose(result[0b11], linalg.expm(M) @ N, atol=1e-13)

    def test_odd_input_rejected(self):
        """Test exp of an odd element fails."""
        x = np.zeros(4, dtype=complex)
        x[0b01] = 1.0
        with self.assertRaises(ParityError):
            algebra.graded_exp(x)

    def test_non_finite_input_rejected(self):
        """Test NaN coefficients fail loudly."""
        x = np.zeros(4, dtype=complex)
        x[0] = np.nan
        with self.assertRaises(NumericError):
            algebra.graded_exp(x)


class TestConfig(unittest.TestCase):
    """Test cases for tolerances, normalization and error locations."""

    def test_scaled_keeps_step_sizes(self):
        """Test --tolerance-scale moves thresholds only."""
        scaled = DEFAULT_TOLERANCES.scaled(10.0)
        self.assertEqual(scaled.fd_step, DEFAULT_TOLERANCES.fd_step)
        self.assertEqual(scaled.exterior_step, DEFAULT_TOLERANCES.exterior_step)
        self.assertAlmostEqual(scaled.axiom, 1e-6)
        self.assertAlmostEqual(scaled.closedness, 1e-5)

    def test_scale_must_be_positive(self):
        """Test a zero scale is rejected."""
        with self.assertRaises(ValueError):
            Tolerances().scaled(0.0)

    def test_normalization_parse(self):
        """Test CLI spellings of the normalization."""
        self.assertIs(Normalization.parse("raw"), Normalization.RAW)
        self.assertIs(Normalization.parse("chern"), Normalization.CHERN_INTEGER)
        self.assertAlmostEqual(Normalization.CHERN_INTEGER.curvature_factor, 1j / (2 * np.pi))
        with self.assertRaises(ValueError):
            Normalization.parse("bogus")

    def test_schema_error_pointer(self):
        """Test JSON-pointer escaping of error locations."""
        error = SchemaError.at(("checks", 3, "a/b"), "bad")
        self.assertEqual(error.location, "/checks/3/a~1b")
        self.assertIn("bad", str(error))


if __name__ == "__main__":
    unittest.main()
