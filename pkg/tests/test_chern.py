import csv
import dataclasses
import sys
import tempfile
import time
import unittest
from pathlib import Path

# Add src to path so we can import our modules
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

import numpy as np
import pytest

from superhol.chern import (
    bouquet_axiom1,
    bouquet_axiom2,
    borel_taylor_report,
    character_table,
    chern_character,
    chern_number,
    closedness_report,
    equivariant_differential,
    integrate_top_form,
    write_character_csv,
    write_form_csv,
)
from superhol.config import Normalization
from superhol.exceptions import NumericError, ValidationError
from superhol.families import build_geometry
from superhol.forms import FormValue, trace
from superhol.geometry import (
    Chart,
    ConnectionModel,
    curvature_density,
    direct_sum,
    identity_stratum,
    point_stratum,
    tensor_product,
)
from superhol.transport import super_holonomy_constant


class TestCharacters(unittest.TestCase):
    """Test cases for the bouquet on a point."""

    def setUp(self):
        """Set up test fixtures before each test method."""
        self.geom = build_geometry({"family": "point-representation", "weights": [1, 2, -3]})
        self.rng = np.random.default_rng(2024)

    def test_character_of_weights(self):
        """Test alpha_g(X) = sum_k e^{i n_k (phi + xi)}."""
        samples = self.rng.uniform(-np.pi, np.pi, size=(20, 2))
        rows = character_table(self.geom, samples)
        self.assertEqual(len(rows), 20)
        for row in rows:
            expected = sum(np.exp(1j * n * (row.phi + row.xi)) for n in (1, 2, -3))
            self.assertLess(abs(row.value - expected), 1e-12)
            self.assertLess(row.error, 1e-12)

    def test_su2_character(self):
        """Test the diagonal SU(2) character is 2 cos(phi + xi)."""
        geom = build_geometry({"family": "point-representation", "group": "SU(2)"})
        rows = character_table(geom, [(0.7, 0.3), (-1.1, 0.2)], direction=[0, 0, 1])
        for row in rows:
            self.assertAlmostEqual(row.value, 2 * np.cos(row.phi + row.xi), places=12)

    def test_direct_sum_is_additive(self):
        """Test characters add over direct sums."""
        first = build_geometry({"family": "point-representation", "weights": [1, 4]})
        second = build_geometry({"family": "point-representation", "weights": [-2]})
        g = first.group.exp(first.group.element([0.6]))
        X = first.group.element([0.25])

        def value(geom):
            return chern_character(geom, g, X, point_stratum(geom, g, [])).value()

        self.assertAlmostEqual(value(direct_sum(first, second)), value(first) + value(second), places=9)
        self.assertAlmostEqual(value(tensor_product(first, second)), value(first) * value(second), places=9)

    def test_borel_taylor_coefficients(self):
        """Test eps-derivatives at the identity are Tr(mu(X)^k)."""
        report = borel_taylor_report(self.geom, self.geom.group.element([0.3]), [], order=3)
        self.assertEqual(len(report.derivatives), 4)
        self.assertAlmostEqual(report.expected[0], 3.0)
        self.assertAlmostEqual(report.expected[2], -(0.3**2) * 14)
        self.assertLess(report.deviation, 1e-5)


class TestPetalsOnCharts(unittest.TestCase):
    """Test cases for petals of geometries with a chart."""

    def setUp(self):
        """Set up test fixtures before each test method."""
        self.plane = build_geometry({"family": "weighted-plane", "weight": 2, "field": 1.0})
        self.e = self.plane.group.identity()
        self.X = self.plane.group.element([0.5])

    def test_identity_petal_is_holonomy_trace(self):
        """Test alpha_e(0) is the trace of the constant-loop holonomy."""
        point = [0.4, -0.3]
        entry = chern_character(self.plane, self.e)
        self.assertTrue(entry(point).allclose(trace(super_holonomy_constant(self.plane, point)), atol=1e-10))

    def test_petal_formula(self):
        """Test alpha_e(X) = e^{mu}(1 + F) on the weighted plane."""
        point = np.array([0.4, -0.3])
        mu = 0.5j * 2 * 0.5 * float(point @ point)
        form = chern_character(self.plane, self.e, self.X)(point)
        self.assertAlmostEqual(form.scalar(0), np.exp(mu), places=12)
        self.assertAlmostEqual(form.scalar(0b11), 1j * np.exp(mu), places=12)

    def test_bundle_operations_on_forms(self):
        """Test sums and products of plane bundles at the form level."""
        other = build_geometry({"family": "weighted-plane", "weight": 2, "field": 2.0})
        point = [0.2, 0.7]

        def petal(geom):
            return chern_character(geom, self.e, self.X)(point)

        self.assertTrue(petal(direct_sum(self.plane, other)).allclose(petal(self.plane) + petal(other), atol=1e-9))
        self.assertTrue(petal(tensor_product(self.plane, other)).allclose(petal(self.plane) * petal(other), atol=1e-9))

    def test_closedness(self):
        """Test (d + iota_{X_M}) alpha vanishes on a coarse grid."""
        report = closedness_report(chern_character(self.plane, self.e, self.X), resolution=16)
        self.assertTrue(report.passed, report)
        self.assertEqual(report.points_checked, 14 * 14)

    @pytest.mark.slow
    def test_closedness_fine_grids(self):
        """Test closedness at grid 64 for the plane and the monopole."""
        monopole = build_geometry({"family": "monopole", "charge": 2, "lift": 1, "radius": 2.5})
        entries = (
            chern_character(self.plane, self.e, self.X),
            chern_character(monopole, monopole.group.identity(), monopole.group.element([0.5])),
        )
        for entry in entries:
            self.assertLess(closedness_report(entry, resolution=64).residual, 1e-6)

    def test_wrong_sign_of_x_is_not_closed(self):
        """Test the Cartan differential sees a petal built with -X."""
        flipped = chern_character(self.plane, self.e, -self.X)
        residual = equivariant_differential(self.plane, flipped.form_field, self.X, [0.5, 0.5]).max_norm()
        self.assertGreater(residual, 1e-3)


class TestBouquetAxioms(unittest.TestCase):
    """Test cases for conjugation equivariance and eps-compatibility."""

    def test_conjugation_on_the_plane(self):
        """Test alpha_e(X) is invariant under rotation of the plane."""
        geom = build_geometry({"family": "weighted-plane", "weight": 2, "field": 1.0})
        h = geom.group.exp(geom.group.element([1.2]))
        report = bouquet_axiom1(geom, h, geom.group.identity(), geom.group.element([0.5]), identity_stratum(geom))
        self.assertGreater(report.points_checked, 0)
        self.assertLess(report.residual, 1e-7)

    def test_weyl_conjugation(self):
        """Test the Weyl element relates the petals of g and g^{-1}."""
        geom = build_geometry({"family": "point-representation", "group": "SU(2)"})
        g = geom.group.exp(geom.group.element([0, 0, 0.7]))
        report = bouquet_axiom1(
            geom, geom.group.special("weyl"), g, geom.group.element([0, 0, 0.3]), point_stratum(geom, g, [])
        )
        self.assertEqual(report.points_checked, 1)
        self.assertLess(report.residual, 1e-7)

    def test_trivial_conjugation(self):
        """Test h = e gives a zero residual."""
        geom = build_geometry({"family": "point-representation", "weights": [1, 2, -3]})
        g = geom.group.exp(geom.group.element([0.7]))
        report = bouquet_axiom1(geom, geom.group.identity(), g, geom.group.element([0.3]), point_stratum(geom, g, []))
        self.assertLess(report.residual, 1e-14)

    def test_eps_compatibility_on_a_point(self):
        """Test alpha_{g e^{eps X}}(Y) = alpha_g(eps X + Y)."""
        geom = build_geometry({"family": "point-representation", "weights": [1, 2, -3]})
        g = geom.group.exp(geom.group.element([0.7]))
        X, Y = geom.group.element([0.4]), geom.group.element([0.3])
        for eps in (0.0, 1e-2, 1e-3):
            report = bouquet_axiom2(geom, g, X, Y, eps, point_stratum(geom, g, []))
            self.assertLess(report.residual, 1e-7, eps)

    def test_eps_compatibility_at_the_poles(self):
        """Test the axiom at the fixed points of a monopole rotation."""
        for side in ("south", "north"):
            geom = build_geometry({"family": "monopole", "charge": 1, "lift": 1, "chart": side})
            g = geom.group.exp(geom.group.element([0.9]))
            stratum = point_stratum(geom, g, [0.0, 0.0])
            for eps in (1e-2, 1e-3):
                report = bouquet_axiom2(geom, g, geom.group.element([0.4]), geom.group.element([0.2]), eps, stratum)
                self.assertLess(report.residual, 1e-7, (side, eps))


class TestChernCharacterErrors(unittest.TestCase):
    """Test cases for invalid petals."""

    def setUp(self):
        """Set up test fixtures before each test method."""
        self.plane = build_geometry({"family": "weighted-plane"})
        self.g = self.plane.group.exp(self.plane.group.element([0.8]))

    def test_stratum_required_away_from_identity(self):
        """Test g != e needs a declared stratum."""
        with self.assertRaises(ValidationError):
            chern_character(self.plane, self.g)

    def test_stratum_must_be_fixed(self):
        """Test the whole plane is not fixed by a rotation."""
        with self.assertRaises(ValidationError):
            chern_character(self.plane, self.g, stratum=identity_stratum(self.plane).with_element(self.g))

    def test_x_must_centralize_g(self):
        """Test X outside the centralizer is refused."""
        geom = build_geometry({"family": "point-representation", "group": "SU(2)"})
        g = geom.group.exp(geom.group.element([0, 0, 0.7]))
        with self.assertRaises(ValidationError):
            chern_character(geom, g, geom.group.element([1, 0, 0]), point_stratum(geom, g, []))


class TestIntegration(unittest.TestCase):
    """Test cases for integrating top-degree forms."""

    def test_constant_forms(self):
        """Test the area of a box and the zero form."""
        chart = Chart.box(1.0)
        area = integrate_top_form(lambda p: FormValue.from_terms(2, {0b11: 1.0}, d=1), chart, 21)
        self.assertAlmostEqual(area, 4.0, places=12)
        self.assertEqual(integrate_top_form(lambda p: FormValue.zero(2), chart, 5), 0.0)

    def test_orientation(self):
        """Test a negatively oriented chart flips the sign."""
        chart = Chart.box(1.0, orientation=-1)
        self.assertAlmostEqual(integrate_top_form(lambda p: FormValue.from_terms(2, {0b11: 1.0}, d=1), chart, 5), -4.0)

    def test_plain_fields_need_a_chart(self):
        """Test a bare callable without a chart is refused."""
        with self.assertRaises(ValidationError):
            integrate_top_form(lambda p: FormValue.zero(2))

    def test_non_finite_samples(self):
        """Test blow-ups inside the chart raise NumericError."""

        def singular(p):
            return FormValue.from_terms(2, {0b11: 1.0 / (p @ p)}, d=1)

        with np.errstate(divide="ignore"), self.assertRaises(NumericError):
            integrate_top_form(singular, Chart.box(1.0), 5)

    def test_chern_number_quick(self):
        """Test a coarse grid already lands near the charge."""
        geom = build_geometry({"family": "monopole", "charge": 1, "grid": 101})
        self.assertLess(abs(chern_number(geom) - 1.0), 2e-2)

    def test_chern_numbers(self):
        """Test n = 1, 2, 3 within 1e-3 relative at grid 400 on both charts, each well inside 30 s."""
        for n in (1, 2, 3):
            for side in ("south", "north"):
                geom = build_geometry({"family": "monopole", "charge": n, "chart": side, "radius": 40.0})
                started = time.perf_counter()
                value = chern_number(geom, 400)
                self.assertLess(time.perf_counter() - started, 30.0, (n, side))
                self.assertLess(abs(value - n), 1e-3 * n, (n, side))

    def test_curvature_density_matches_pointwise_curvature(self):
        """Test the batched density agrees with the analytic curvature point by point."""
        geom = build_geometry({"family": "monopole", "charge": 2, "chart": "north", "grid": 9})
        grid = geom.chart.grid()
        pointwise = ConnectionModel(geom.connection.connection_form, geom.connection.curvature_analytic)
        np.testing.assert_allclose(
            curvature_density(geom.connection, grid), curvature_density(pointwise, grid), atol=1e-14
        )

    def test_chern_number_without_density_callback(self):
        """Test a connection with no batched density falls back to pointwise curvature."""
        geom = build_geometry({"family": "monopole", "charge": 1, "grid": 41})
        stripped = dataclasses.replace(
            geom, connection=ConnectionModel(geom.connection.connection_form, geom.connection.curvature_analytic)
        )
        self.assertAlmostEqual(chern_number(stripped), chern_number(geom), places=12)

    def test_raw_normalization_scale(self):
        """Test the raw integral is -2 pi i times the Chern number."""
        geom = build_geometry({"family": "monopole", "charge": 1, "grid": 101})
        raw = integrate_top_form(chern_character(geom, geom.group.identity(), normalization=Normalization.RAW))
        self.assertAlmostEqual(raw / chern_number(geom), -2j * np.pi, places=10)


class TestArtifacts(unittest.TestCase):
    """Test cases for CSV output."""

    def setUp(self):
        """Set up test fixtures before each test method."""
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_form_csv(self):
        """Test one row per point and nonzero mask."""
        plane = build_geometry({"family": "weighted-plane"})
        entry = chern_character(plane, plane.group.identity())
        path = write_form_csv(Path(self.tmp.name) / "petal" / "form.csv", entry, np.array([[0.0, 0.0], [0.5, 0.5]]))
        with path.open(newline="") as handle:
            rows = list(csv.reader(handle))
        self.assertEqual(rows[0], ["q1", "q2", "mask", "re", "im"])
        self.assertEqual(len(rows), 5)
        self.assertEqual([row[2] for row in rows[1:]], ["0", "3", "0", "3"])
        self.assertEqual(float(rows[2][4]), 1.0)

    def test_character_csv(self):
        """Test the character table layout."""
        geom = build_geometry({"family": "point-representation", "weights": [1]})
        rows = character_table(geom, [(0.5, 0.25)])
        path = write_character_csv(Path(self.tmp.name) / "chars.csv", rows)
        with path.open(newline="") as handle:
            table = list(csv.reader(handle))
        self.assertEqual(table[0][:2], ["phi", "xi"])
        self.assertAlmostEqual(float(table[1][2]), np.cos(0.75), places=15)


if __name__ == "__main__":
    unittest.main()
