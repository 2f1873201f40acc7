from math import pi, sqrt
from unittest import TestCase
from unittest.mock import patch

import numpy as np
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from .. import angular, constraints, geometry, oracle
from ..exceptions import DomainError, NonIntegrableError


def _random_datum(seed, n_v=16, l_max=0.5, t_max=1.0):
    rng = np.random.default_rng(seed)
    v = np.linspace(0.0, 2 * t_max, n_v + 1)
    n = angular.mode_indices(1, angular.doubled(l_max))[0].size
    smooth = np.cos(np.outer(v, rng.uniform(0.5, 2.0, n)))
    a = smooth * (rng.normal(size=n) + 1j * rng.normal(size=n))
    b = smooth[::-1] * (rng.normal(size=n) + 1j * rng.normal(size=n))
    return constraints.NullDatum(
        v, angular.SpectralField(1, angular.doubled(l_max), a),
        angular.SpectralField(-1, angular.doubled(l_max), b))


class NullDatumTest(TestCase):
    def setUp(self):
        self.v = np.linspace(0.0, 2.0, 9)
        self.psi1 = angular.zero_field(0.5, 0.5, (9,))
        self.psi4 = angular.zero_field(-0.5, 0.5, (9,))

    def test_properties(self):
        d = constraints.NullDatum(self.v, self.psi1, self.psi4)
        self.assertEqual((d.h, d.v_max, d.two_l_max), (0.25, 2.0, 1))

    def test_rejected_grids_and_fields(self):
        bad_v = self.v.copy()
        bad_v[3] += 0.01
        cases = [
            (self.v + 0.1, self.psi1, self.psi4),
            (bad_v, self.psi1, self.psi4),
            (self.v, self.psi4, self.psi1),
            (self.v[:4], angular.zero_field(0.5, 0.5, (4,)),
             angular.zero_field(-0.5, 0.5, (4,))),
            (self.v, angular.zero_field(0.5, 0.5, (8,)), self.psi4),
            (self.v, angular.zero_field(0.5, 1.5, (9,)), self.psi4),
        ]
        for i, args in enumerate(cases):
            with self.subTest(case=i):
                with self.assertRaises(ValueError):
                    constraints.NullDatum(*args)

    def test_sum_requires_the_same_grid(self):
        d = constraints.zero_datum(1.0, 8, 0.5)
        with self.assertRaises(ValueError):
            d + constraints.zero_datum(1.0, 16, 0.5)


class PotentialTest(TestCase):
    def test_polynomial_in_t_and_r_squared(self):
        potential = constraints.Potential(((1.0, 2.0), (3.0, 0.0)))
        self.assertAlmostEqual(float(potential.value(0.5, 2.0)), 1 + 8 + 1.5)
        self.assertFalse(potential.is_static)
        self.assertFalse(potential.is_zero)
        self.assertTrue(constraints.ZERO_POTENTIAL.is_zero)
        self.assertTrue(constraints.Potential(((0.0, 1.0),)).is_static)


class SolveConstraintsTest(TestCase):
    def setUp(self):
        self.model = geometry.build_metric()

    def test_constant_spinor_is_reproduced(self):
        solution = oracle.ConstantSpinor((1.0, 0.5j, 0.2, -0.3))
        restriction = oracle.restrict_to_cone(solution, 1.0, 1.0, 32, l_max=1.5)
        sol = constraints.solve_constraints(restriction.datum, self.model)
        assert_allclose(sol.psi2.coefficients, restriction.psi2.coefficients,
                        atol=1e-11)
        assert_allclose(sol.psi3.coefficients, restriction.psi3.coefficients,
                        atol=1e-11)
        modes = solution.l_half_modes()
        assert_allclose(sol.vertex_psi2.coefficients[:2], modes[1], atol=1e-11)
        assert_allclose(sol.vertex_psi3.coefficients[:2], modes[2], atol=1e-11)
        psi2, psi3 = constraints.vertex_limits(sol)
        assert_allclose(psi2.coefficients, sol.vertex_psi2.coefficients,
                        atol=1e-11)
        assert_allclose(psi3.coefficients, sol.vertex_psi3.coefficients,
                        atol=1e-11)

    def test_spherical_wave(self):
        wave = oracle.SphericalWave(energy=3.0, two_l=1, two_m=1)
        errors = []
        for n_v in (64, 128):
            restriction = oracle.restrict_to_cone(wave, 1.0, 1.0, n_v, l_max=0.5)
            sol = constraints.solve_constraints(restriction.datum, self.model)
            errors.append(np.max(np.abs(sol.psi2.coefficients
                                        - restriction.psi2.coefficients)))
        self.assertLess(errors[1], 1e-5)
        self.assertGreater(np.log2(errors[0] / errors[1]), 3.0)

    def test_massless_components_decouple(self):
        d = _random_datum(7)
        datum = constraints.NullDatum(d.v, d.psi1, d.psi4.scale(0.0))
        sol = constraints.solve_constraints(datum, self.model)
        self.assertEqual(np.max(np.abs(sol.psi3.coefficients)), 0.0)
        self.assertEqual(np.max(np.abs(sol.vertex_psi3.coefficients)), 0.0)
        self.assertGreater(np.max(np.abs(sol.psi2.coefficients)), 0.0)
        massive = constraints.NullDatum(d.v, d.psi1, d.psi4.scale(0.0), mass=1.0)
        sol = constraints.solve_constraints(massive, self.model)
        self.assertGreater(np.max(np.abs(sol.psi3.coefficients)), 1e-3)

    def test_zero_datum(self):
        sol = constraints.solve_constraints(constraints.zero_datum(1.0, 8, 1.5),
                                            self.model)
        for f in sol.components:
            assert_allclose(f.coefficients, 0.0)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2 ** 16), st.integers(0, 2 ** 16),
           st.complex_numbers(max_magnitude=3, allow_nan=False,
                              allow_infinity=False))
    def test_linear(self, first, second, z):
        a, b = _random_datum(first), _random_datum(second)
        combined = constraints.solve_constraints(a.scaled(z) + b, self.model)
        sol_a = constraints.solve_constraints(a, self.model)
        sol_b = constraints.solve_constraints(b, self.model)
        for c, x, y in zip(combined.components, sol_a.components,
                           sol_b.components):
            assert_allclose(c.coefficients, z * x.coefficients + y.coefficients,
                            atol=1e-10)

    def test_curved_background_converges(self):
        model = geometry.build_metric(geometry.STATIC_SPHERICAL, 1.0,
                                      a=[1.0, 1.0])
        coarse = constraints.solve_constraints(_random_datum(3, n_v=32), model)
        fine = constraints.solve_constraints(_random_datum(3, n_v=64), model)
        gap = np.max(np.abs(fine.psi2.coefficients[::2]
                            - coarse.psi2.coefficients))
        self.assertLess(gap, 1e-4)
        self.assertTrue(np.all(np.isfinite(coarse.vertex_psi3.coefficients)))

    def test_bracket_without_a_vertex_limit(self):
        d = constraints.zero_datum(1.0, 8, 0.5)
        for value in (1e3, np.nan):
            with patch('lightcone_dirac.geometry.regularized_bracket',
                       return_value=np.array([value])):
                with self.assertRaises(NonIntegrableError):
                    constraints.solve_constraints(d, self.model)

    def test_cone_beyond_the_model(self):
        model = geometry.build_metric(t_max=1.0, r_max=1.0)
        with self.assertRaises(DomainError):
            constraints.solve_constraints(constraints.zero_datum(1.5, 8, 0.5),
                                          model)


class MatchingTest(TestCase):
    def setUp(self):
        self.model = geometry.build_metric()

    def test_exact_solution_matches(self):
        solution = oracle.ConstantSpinor((1.0, 0.5j, 0.2, -0.3))
        d = oracle.restrict_to_cone(solution, 1.0, 1.0, 16, l_max=1.5).datum
        sol = constraints.solve_constraints(d, self.model)
        self.assertLess(constraints.matching_residual(d, sol, model=self.model),
                        1e-10)
        cs = geometry.conjugate_structure(self.model, [0.4, 2.0], [0.1, 3.0])
        self.assertLess(constraints.matching_residual(d, sol, cs), 1e-10)

    def test_higher_modes_at_the_vertex_do_not_match(self):
        v = np.linspace(0.0, 2.0, 17)
        psi1 = angular.make_field(0.5, [(1.5, 0.5, 1.0)], 1.5, v.shape)
        d = constraints.NullDatum(v, psi1, angular.zero_field(-0.5, 1.5, v.shape))
        sol = constraints.solve_constraints(d, self.model)
        self.assertGreater(
            constraints.matching_residual(d, sol, model=self.model), 1e-2)

    def test_needs_directions(self):
        d = constraints.zero_datum(1.0, 8, 0.5)
        sol = constraints.solve_constraints(d, self.model)
        with self.assertRaises(ValueError):
            constraints.matching_residual(d, sol)


class ConeFluxTest(TestCase):
    def setUp(self):
        self.model = geometry.build_metric()
        self.datum = oracle.restrict_to_cone(oracle.ConstantSpinor(), 1.0, 1.0,
                                             64, l_max=0.5).datum

    def test_constant_spinor(self):
        # (N/2)·r²·2π integrated over v ∈ [0, 2T] with N = √2, r = v/2
        for t_max in (None, 1.0, 0.5):
            with self.subTest(t_max=t_max):
                big_t = 1.0 if t_max is None else t_max
                self.assertAlmostEqual(
                    constraints.cone_flux(self.datum, self.model, t_max),
                    2 * pi * sqrt(2) * big_t ** 3 / 3, places=10)

    def test_end_must_be_a_node(self):
        with self.assertRaises(DomainError):
            constraints.cone_flux(self.datum, self.model, 0.3)

    def test_norm_dominates_the_flux(self):
        sol = constraints.solve_constraints(self.datum, self.model)
        norm = constraints.h_cone_norm(self.datum, self.model, 1.0, sol)
        self.assertGreaterEqual(norm ** 2,
                                constraints.cone_flux(self.datum, self.model, 1.0))
        self.assertAlmostEqual(norm, constraints.h_cone_norm(self.datum,
                                                             self.model, 1.0))


class TangentialOperatorTest(TestCase):
    def setUp(self):
        self.model = geometry.build_metric()
        self.datum = oracle.restrict_to_cone(
            oracle.ConstantSpinor((1.0, 0.0, 0.0, 1.0)), 1.0, 1.0, 32,
            l_max=0.5).datum
        self.sol = constraints.solve_constraints(self.datum, self.model)

    def test_derivative_along_the_generators_vanishes(self):
        first, second = constraints.apply_L('l', self.datum, self.sol,
                                            self.model)
        assert_allclose(first.coefficients, 0.0, atol=1e-10)
        assert_allclose(second.coefficients, 0.0, atol=1e-10)

    def test_spins(self):
        spins = {tag: tuple(f.two_s for f in constraints.apply_L(
            tag, self.datum, self.sol, self.model)) for tag in constraints.TAGS}
        self.assertEqual(spins, {'l': (1, -1), 'n': (1, -1), 'm': (3, 1),
                                 'mbar': (-1, -3)})

    def test_constant_spinor_is_annihilated_by_every_operator(self):
        datum = oracle.restrict_to_cone(
            oracle.ConstantSpinor((1.0, 0.5j, 0.2, -0.3)), 1.0, 1.0, 32,
            l_max=0.5).datum
        sol = constraints.solve_constraints(datum, self.model)
        for tag in constraints.TAGS:
            with self.subTest(tag=tag):
                for f in constraints.apply_L(tag, datum, sol, self.model):
                    assert_allclose(f.coefficients, 0.0, atol=1e-9)

    def _wave_errors(self, n_v):
        """Largest gap to the exact derivatives of a massive wave, v ≥ 1/4."""
        wave = oracle.SphericalWave(energy=3.0, mass=1.0, two_l=1, two_m=1)
        datum = oracle.restrict_to_cone(wave, 1.0, 1.0, n_v, l_max=0.5).datum
        sol = constraints.solve_constraints(datum, self.model)
        r = datum.v / 2
        keep = datum.v >= 0.25
        values = wave.mode_coefficients(r, r, 1)
        d_t, d_r = wave.mode_derivatives(r, r, 1)
        root2 = sqrt(2)
        safe_r = np.where(r > 0, r, 1.0)[:, np.newaxis]
        expected = {
            'l': ((d_t[0] + d_r[0]) / root2, (d_t[3] + d_r[3]) / root2),
            'n': ((d_t[0] - d_r[0]) / root2, (d_t[3] - d_r[3]) / root2),
            # ð on l = ½ multiplies by 1 at spin −½ and ð′ by −1 at spin +½
            'm': (None, (values[2] - values[3]) / (root2 * safe_r)),
            'mbar': ((values[0] - values[1]) / (root2 * safe_r), None),
        }
        errors = {}
        for tag in constraints.TAGS:
            gaps = []
            for f, exact in zip(constraints.apply_L(tag, datum, sol, self.model),
                                expected[tag]):
                # spin ±3/2 parts have no l = ½ modes to compare with
                gap = f.coefficients if exact is None else \
                    angular.truncate(f, 1).coefficients - exact
                gaps.append(np.max(np.abs(gap[keep])))
            errors[tag] = max(gaps)
        return errors

    def test_operators_converge_to_the_exact_derivatives(self):
        coarse = self._wave_errors(64)
        fine = self._wave_errors(128)
        for tag in constraints.TAGS:
            with self.subTest(tag=tag):
                self.assertLess(fine[tag], 1e-3)
                if coarse[tag] > 1e-10:
                    self.assertGreater(coarse[tag] / fine[tag], 3.0)

    def test_rejections(self):
        with self.assertRaises(ValueError):
            constraints.apply_L('k', self.datum, self.sol, self.model)
        other = constraints.zero_datum(1.0, 16, 0.5)
        with self.assertRaises(ValueError):
            constraints.apply_L('l', other, self.sol, self.model)


class SerializationTest(TestCase):
    def test_layout_and_profiles(self):
        d = oracle.restrict_to_cone(oracle.ConstantSpinor(), 1.0, 1.0, 8,
                                    l_max=0.5).datum
        sol = constraints.solve_constraints(d, geometry.build_metric())
        data = constraints.solution_to_dict(sol)
        self.assertEqual(data['modes'], [[1, -1], [1, 1]])
        self.assertEqual(data['psi2']['re'].shape, (9, 2))
        self.assertEqual(len(data['vertex']['psi3']), 2)
        rows = constraints.generator_profiles(sol, 1.0, 0.5)
        self.assertEqual(len(rows), 9)
        self.assertEqual(rows[0][0], 0.0)
        self.assertEqual(len(rows[0]), 5)
