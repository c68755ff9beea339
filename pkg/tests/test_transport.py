import sys
import unittest
from pathlib import Path
from unittest import mock

# Add src to path so we can import our modules
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

import numpy as np
from scipy.integrate import solve_ivp

from superhol import algebra, transport
from superhol.chern import chern_character
from superhol.exceptions import DomainError, LoopValidationError, ParityError, StepSizeError
from superhol.families import build_geometry
from superhol.forms import exp_even, from_grassmann, to_grassmann, trace
from superhol.geometry import curvature, equivariant_curvature
from superhol.grassmann import GaugeMap, GrassmannElement, GrassmannMatrix, SuperConnectionForm, gauge_transform
from superhol.transport import (
    SectionState,
    SuperPath,
    TransportProblem,
    components,
    convergence_order,
    equivariant_holonomy_ode,
    flow_residual,
    infinitesimal_holonomy,
    integrate_parallel,
    loop_validate,
    reconstruct,
    shadow_odd_component,
    super_holonomy_constant,
)


def relative_error(actual, expected):
    return (actual - expected).max_norm() / expected.max_norm()


class TestConstantLoops(unittest.TestCase):
    """Test cases for super holonomy around constant loops."""

    def setUp(self):
        """Set up test fixtures before each test method."""
        self.plane = build_geometry({"family": "weighted-plane", "weight": 2, "field": 1.0})
        self.monopole = build_geometry({"family": "monopole", "charge": 1, "lift": 1, "radius": 2.5})

    def test_holonomy_is_chern_character(self):
        """Test the transport around a constant loop is exp(F) with psi <-> dx."""
        for geom, point in ((self.plane, [0.0, 0.0]), (self.plane, [0.4, 0.1]), (self.monopole, [0.3, -0.2])):
            problem = TransportProblem.constant_loop(geom, point)
            holonomy = integrate_parallel(problem, 512)
            expected = to_grassmann(exp_even(curvature(geom.connection, point)))
            self.assertLess(relative_error(holonomy, expected), 1e-8)
            character = chern_character(geom, geom.group.identity()).form_field(point)
            self.assertTrue(trace(from_grassmann(holonomy)).allclose(character, atol=1e-10))

    def test_closed_formula_on_a_point(self):
        """Test g = e, a = 0 on a point gives the identity."""
        point = build_geometry({"family": "point-representation", "weights": [1, 2]})
        holonomy = super_holonomy_constant(point, [])
        self.assertTrue(holonomy.allclose(exp_even(equivariant_curvature(point, np.zeros((1, 1)), [])), atol=0.0))
        self.assertEqual(holonomy.fiber_rank, 2)

    def test_theorem_at_the_poles(self):
        """Test the ODE holonomy at both poles against c(h, x) exp(F + mu(a))."""
        for side in ("south", "north"):
            geom = build_geometry({"family": "monopole", "charge": 1, "lift": 1, "chart": side})
            h = geom.group.exp(geom.group.element([0.9]))
            a = geom.group.element([0.4])
            holonomy = equivariant_holonomy_ode(TransportProblem.constant_loop(geom, [0.0, 0.0], a, h))
            expected = to_grassmann(super_holonomy_constant(geom, [0.0, 0.0], a, h))
            self.assertLess((holonomy - expected).max_norm(), 1e-7, side)

    def test_theorem_off_the_fixed_set_of_a(self):
        """Test a generic point with h = e, where the lifted loop rotates."""
        a = self.plane.group.element([0.5])
        point = [0.3, 0.2]
        holonomy = equivariant_holonomy_ode(TransportProblem.constant_loop(self.plane, point, a))
        expected = to_grassmann(super_holonomy_constant(self.plane, point, a))
        self.assertLess((holonomy - expected).max_norm(), 1e-7)

    def test_point_weights(self):
        """Test a point representation: the holonomy is rho(h e^a)."""
        geom = build_geometry({"family": "point-representation", "weights": [1, 2, -3]})
        h = geom.group.exp(geom.group.element([0.7]))
        a = geom.group.element([0.3])
        holonomy = equivariant_holonomy_ode(TransportProblem.constant_loop(geom, [], a, h))
        np.testing.assert_allclose(holonomy.body, np.diag(np.exp(1j * np.array([1, 2, -3]))), atol=1e-12)


class TestLoopValidation(unittest.TestCase):
    """Test cases for rejecting data that is not a super loop."""

    def setUp(self):
        """Set up test fixtures before each test method."""
        self.plane = build_geometry({"family": "weighted-plane"})
        self.h = self.plane.group.exp(self.plane.group.element([0.8]))

    def test_point_not_fixed(self):
        """Test h must fix a constant loop's point."""
        problem = TransportProblem.constant_loop(self.plane, [0.3, 0.2], h=self.h)
        with self.assertLogs("superhol.transport", level="WARNING"):
            report = loop_validate(problem)
        self.assertFalse(report.passed)
        self.assertIsNotNone(report.fixed_point_residual)
        with self.assertRaises(LoopValidationError):
            equivariant_holonomy_ode(problem)

    def test_a_must_commute_with_h(self):
        """Test Ad_h a = a is enforced for SU(2)."""
        geom = build_geometry({"family": "point-representation", "group": "SU(2)"})
        h = geom.group.exp(geom.group.element([0, 0, 0.7]))
        with self.assertRaises(LoopValidationError) as ctx:
            super_holonomy_constant(geom, [], geom.group.element([1.0, 0, 0]), h)
        self.assertGreater(ctx.exception.residual, 1e-3)

    def test_open_path_reported(self):
        """Test a path that does not close under h e^a."""
        path = SuperPath.polyline([[0.0, 0.0], [0.5, 0.0]])
        report = loop_validate(TransportProblem(self.plane, path))
        self.assertFalse(report.passed)
        self.assertAlmostEqual(report.closure_residual, 0.5)


class TestGaugeReducedProblems(unittest.TestCase):
    """Test cases for building problems from super connection forms."""

    def setUp(self):
        """Set up test fixtures before each test method."""
        self.geom = build_geometry({"family": "point-representation", "weights": [1]})
        odd = GrassmannElement.from_terms(2, {0b01: 0.3, 0b10: -0.7j})
        self.alpha = GrassmannMatrix.from_element(odd, np.array([[1j]]))

    def test_abelian_reduction(self):
        """Test the d(theta) term is gauged away and a survives."""
        a = GrassmannMatrix.from_body(np.array([[0.4j]]), 2)
        problem = TransportProblem.from_connection(self.geom, SuperPath.constant_at([]), SuperConnectionForm(self.alpha, a))
        np.testing.assert_allclose(problem.a, [[0.4j]])

    def test_nilpotent_datum_rejected(self):
        """Test an a with a nilpotent part is not a constant G-connection."""
        a = GrassmannMatrix.from_element(GrassmannElement.from_terms(2, {0: 0.4j, 0b11: 1.0}), np.eye(1))
        with self.assertRaises(LoopValidationError):
            TransportProblem.from_connection(self.geom, SuperPath.constant_at([]), SuperConnectionForm(self.alpha, a))

    def test_holonomy_trace_is_gauge_invariant(self):
        """Test Tr of the equivariant holonomy survives a constant SU(2) gauge change."""
        geom = build_geometry({"family": "point-representation", "group": "SU(2)"})
        group = geom.group
        odd = GrassmannElement.from_terms(2, {0b01: 0.3, 0b10: -0.7j})
        alpha = GrassmannMatrix.from_element(odd, group.element([0.2, -0.1, 0.4]))
        X = group.element([0.5, 0.3, -0.2])
        a = GrassmannMatrix.from_body(X, 2)
        h = group.exp(1.3 * X)
        connection = SuperConnectionForm(alpha, a)
        gauge = GaugeMap.from_exponent(GrassmannMatrix.from_body(group.element([0.7, -0.4, 0.9]), 3))
        g = gauge.value.body
        path = SuperPath.constant_at([])

        before = TransportProblem.from_connection(geom, path, connection, h=h)
        after = TransportProblem.from_connection(geom, path, gauge_transform(connection, gauge), h=np.linalg.inv(g) @ h @ g)
        self.assertGreater(np.max(np.abs(after.a - before.a)), 1e-3)
        np.testing.assert_allclose(
            equivariant_holonomy_ode(after).trace().coefficients,
            equivariant_holonomy_ode(before).trace().coefficients,
            atol=1e-8,
        )


class TestTransportAlongPaths(unittest.TestCase):
    """Test cases for transport along non-constant paths."""

    def setUp(self):
        """Set up test fixtures before each test method."""
        self.plane = build_geometry({"family": "weighted-plane", "weight": 2, "field": 1.0})

    def test_circle_flux(self):
        """Test transport around a centred circle is exp(-i k pi r^2)."""
        problem = TransportProblem(self.plane, SuperPath.circle([0.0, 0.0], 0.5))
        holonomy = integrate_parallel(problem, 512)
        self.assertAlmostEqual(complex(holonomy.body[0, 0]), np.exp(-1j * np.pi * 0.25), places=12)

    def test_against_scipy_solver(self):
        """Test RK4 agrees with solve_ivp on an off-centre monopole circle."""
        geom = build_geometry({"family": "monopole", "charge": 2, "radius": 3.0})
        path = SuperPath.circle([0.4, -0.3], 0.8)

        def rhs(t, u):
            form = geom.connection_form(path.position(t))
            v = path.velocity_at(t)
            return -(v[0] * form.scalar(0b01) + v[1] * form.scalar(0b10)) * u

        oracle = solve_ivp(rhs, (0.0, 1.0), np.array([1.0 + 0.0j]), method="DOP853", rtol=1e-12, atol=1e-14)
        holonomy = integrate_parallel(TransportProblem(geom, path), 1024)
        self.assertAlmostEqual(complex(holonomy.body[0, 0]), complex(oracle.y[0, -1]), places=8)

    def test_step_halving_detects_stiffness(self):
        """Test a too-coarse step raises StepSizeError."""
        strong = build_geometry({"family": "weighted-plane", "field": 50.0})
        problem = TransportProblem(strong, SuperPath.circle([0.0, 0.0], 0.5))
        with self.assertRaises(StepSizeError) as ctx:
            integrate_parallel(problem, 2, check_steps=True)
        self.assertGreater(ctx.exception.residual, 1e-6)

    def test_leaving_the_chart(self):
        """Test the exit time is reported when the path leaves the chart."""
        problem = TransportProblem(self.plane, SuperPath.polyline([[0.0, 0.0], [3.0, 0.0]]))
        with self.assertRaises(DomainError) as ctx:
            integrate_parallel(problem, 8)
        self.assertGreater(ctx.exception.exit_time, 2.0 / 3.0)
        self.assertLessEqual(ctx.exception.exit_time, 0.75)

    def test_infinitesimal_loops(self):
        """Test (Hol(eps) - id)/eps tends to the equivariant curvature."""
        report = infinitesimal_holonomy(self.plane, [0.3, 0.2], self.plane.group.element([0.5]), eps_list=(1e-2, 5e-3))
        self.assertLess(report.deviation, 1e-6)
        self.assertEqual(report.eps, (1e-2, 5e-3))

    def test_flow_property_and_order(self):
        """Test composition over half intervals and fourth-order convergence."""
        problem = TransportProblem(self.plane, SuperPath.polyline([[-1.5, 1.5], [1.5, -0.5]]))
        self.assertLess(flow_residual(problem, 64), 1e-9)
        self.assertGreaterEqual(convergence_order(problem), 3.7)

    def test_parallel_sections_have_no_odd_component(self):
        """Test nabla_D s stays zero along a parallel section."""
        problem = TransportProblem.constant_loop(self.plane, [0.3, 0.2], self.plane.group.element([0.5]))
        self.assertLess(shadow_odd_component(problem, [1.0], 64), 1e-9)

    def test_shadow_along_a_moving_path(self):
        """Test nabla_D s stays zero when the base point moves."""
        problem = TransportProblem(self.plane, SuperPath.polyline([[-1.5, 1.5], [1.5, -0.5]]))
        self.assertLess(shadow_odd_component(problem, [1.0], 256), 1e-9)

    def test_shadow_detects_a_wrong_generator(self):
        """Test a solver with a shifted generator leaves a visible nabla_D s."""
        problem = TransportProblem.constant_loop(self.plane, [0.3, 0.2], self.plane.group.element([0.5]))
        original = transport._generator

        def shifted(problem, t):
            M = original(problem, t).copy()
            M[0] += 0.5 * np.eye(M.shape[1])
            return M

        with mock.patch.object(transport, "_generator", side_effect=shifted):
            self.assertGreater(shadow_odd_component(problem, [1.0], 64), 1e-3)

    def test_shadow_detects_a_wrong_trajectory(self):
        """Test an arbitrary even trajectory is not mistaken for a parallel section."""
        problem = TransportProblem.constant_loop(self.plane, [0.3, 0.2], self.plane.group.element([0.5]))
        q = problem.num_generators
        rng = np.random.default_rng(11)
        even = algebra.parity_mask(q, odd=False)

        def scrambled(problem, start, stop, steps, record=False):
            times = np.linspace(start, stop, steps + 1)
            trajectory = []
            for t in times:
                U = np.zeros((1 << q, 1, 1), dtype=complex)
                U[even] = 100.0 * rng.standard_normal((int(even.sum()), 1, 1))
                trajectory.append((float(t), U))
            return trajectory[-1][1], trajectory

        with mock.patch.object(transport, "_rk4", side_effect=scrambled):
            self.assertGreater(shadow_odd_component(problem, [1.0], 64), 1.0)


class TestComponents(unittest.TestCase):
    """Test cases for splitting sections into components."""

    def test_split_and_rebuild(self):
        """Test components and reconstruct are inverse."""
        rng = np.random.default_rng(5)
        section = np.zeros((8, 1), dtype=complex)
        section[[0, 3, 5, 6]] = rng.standard_normal((4, 1))
        state = components(section)
        self.assertIsInstance(state, SectionState)
        np.testing.assert_array_equal(reconstruct(state), section)

    def test_inhomogeneous_section(self):
        """Test mixed parity sections are refused."""
        section = np.zeros((4, 1), dtype=complex)
        section[0] = section[1] = 1.0
        with self.assertRaises(ParityError):
            components(section)


if __name__ == "__main__":
    unittest.main()
