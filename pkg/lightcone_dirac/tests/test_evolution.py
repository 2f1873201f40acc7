from unittest import TestCase
from unittest.mock import patch

import numpy as np
from numpy.testing import assert_allclose

from .. import angular, constraints, evolution, geometry, oracle
from ..exceptions import (CFLViolation, ConstraintViolation, DomainError,
                          ExtensionError, ExtrapolationError)


def _goursat_config(**kwargs):
    params = dict(lambdas=(0.9, 0.95), n_r=32, l_max=0.5,
                  t_final=1.0, record_history=True)
    params.update(kwargs)
    return evolution.EvolutionConfig(**params)


class EvolutionConfigTest(TestCase):
    def test_step_bound(self):
        cfg = evolution.EvolutionConfig(l_max=1.5)
        self.assertEqual(cfg.two_l_max, 3)
        self.assertEqual(cfg.k_max, 2.0)
        self.assertAlmostEqual(cfg.max_step(0.1), 0.8 * 0.2 / 3)

    def test_rejected_settings(self):
        for kwargs in (dict(n_r=33), dict(n_r=4), dict(extension='mirror'),
                       dict(extension_fraction=0.0), dict(taylor_order=0),
                       dict(t_final=-1.0), dict(l_max=0.7)):
            with self.subTest(**kwargs):
                with self.assertRaises(ValueError):
                    evolution.EvolutionConfig(**kwargs)


class SliceStateTest(TestCase):
    def setUp(self):
        self.r = np.linspace(0.0, 1.0, 9)
        self.state = oracle.slice_state(oracle.ConstantSpinor(), 0.0, self.r, 0.5)

    def test_shape_is_checked(self):
        with self.assertRaises(ValueError):
            evolution.SliceState(0.0, self.r, np.zeros((4, 8, 2)), 1)

    def test_components_and_differences(self):
        self.assertEqual(self.state.component(1).two_s, -1)
        self.assertEqual(self.state.h, 0.125)
        other = evolution.SliceState(0.0, self.r,
                                     self.state.modes.copy(), 1)
        other.modes[:, -1] += 1.0
        self.assertEqual(self.state.max_difference(other, radius=0.5), 0.0)
        self.assertEqual(self.state.max_difference(other), 1.0)
        self.assertEqual(self.state.restricted(5).r[-1], 0.5)
        self.assertEqual(len(self.state.to_dict()['components']), 4)


class RadialOperatorTest(TestCase):
    def setUp(self):
        self.model = geometry.build_metric(t_max=2.0)
        self.r = np.linspace(0.0, 1.0, 65)

    def test_constant_spinor_is_stationary(self):
        state = oracle.slice_state(oracle.ConstantSpinor((1.0, 0.5j, 0.2, -0.3)),
                                   0.3, self.r, 1.5)
        cfg = evolution.EvolutionConfig(l_max=1.5)
        rate = evolution.assemble_rhs(state, cfg, self.model)
        assert_allclose(rate.modes, 0.0, atol=1e-11)

    def test_massive_rest_wave_oscillates(self):
        wave = oracle.PlaneWave.at_rest(1.0, [1.0, 0.0])
        state = oracle.slice_state(wave, 0.2, self.r, 0.5)
        cfg = evolution.EvolutionConfig(mass=1.0)
        rate = evolution.assemble_rhs(state, cfg, self.model)
        assert_allclose(rate.modes, -1j * state.modes, atol=1e-11)

    def test_spherical_wave(self):
        wave = oracle.SphericalWave(energy=3.0, two_l=1, two_m=1)
        state = oracle.slice_state(wave, 0.0, self.r, 0.5)
        rate = evolution.assemble_rhs(state, evolution.EvolutionConfig(),
                                      self.model)
        d_t, _ = wave.mode_derivatives(np.zeros_like(self.r), self.r, 1)
        assert_allclose(rate.modes[:, 4:-4], d_t[:, 4:-4], atol=1e-4)

    def test_parity_ghosts(self):
        op = evolution.RadialOperator(self.model, self.r, 3)
        u = op.to_u(oracle.slice_state(oracle.ConstantSpinor(), 0.0, self.r,
                                       1.5).modes)
        extended = op.extend(u)
        self.assertEqual(extended.shape[-1], self.r.size + 6)
        # l = ½ has σ = −1: U₁(−h) = −U₂(h)
        assert_allclose(extended[0, :2, 2], -u[1, :2, 1])
        # cubic extrapolation keeps linear profiles exact
        step = self.r[1]
        assert_allclose(extended[0, :2, -1], u[0, :2, -1] / self.r[-1]
                        * (self.r[-1] + 3 * step))


class CauchyEvolutionTest(TestCase):
    def setUp(self):
        self.model = geometry.build_metric(t_max=2.0)
        self.r = np.linspace(0.0, 2.0, 129)

    def test_manufactured_plane_wave(self):
        base = oracle.PlaneWave.at_rest(1.0, [1.0, 0.0])
        solution = oracle.ManufacturedSolution(base, (1.0, 0.5))
        cfg = evolution.EvolutionConfig(mass=1.0)
        initial = oracle.slice_state(solution, 0.5, self.r, 0.5)
        history = []
        final = evolution.source_evolve(initial,
                                        oracle.source_function(solution, 0.5),
                                        1.0, cfg, self.model, history)
        exact = oracle.slice_state(solution, 1.0, self.r, 0.5)
        radius = evolution.excision_radius(initial, 1.0)
        self.assertEqual(radius, 1.5)
        self.assertLess(final.max_difference(exact, radius), 1e-7)
        self.assertEqual(history[0].t, 0.5)
        self.assertAlmostEqual(history[-1].t, 1.0)
        # the last node leaves the active domain after the first step
        assert_allclose(final.modes[:, -1], history[1].modes[:, -1])

    def test_spherical_wave(self):
        wave = oracle.SphericalWave(energy=3.0, two_l=1, two_m=-1)
        initial = oracle.slice_state(wave, 0.0, self.r, 0.5)
        final = evolution.cauchy_evolve(initial, 0.5, evolution.EvolutionConfig(),
                                        self.model)
        exact = oracle.slice_state(wave, 0.5, self.r, 0.5)
        self.assertLess(final.max_difference(exact, 1.4), 1e-4)

    def test_rejections(self):
        initial = oracle.slice_state(oracle.ConstantSpinor(), 0.5, self.r, 0.5)
        with self.assertRaises(CFLViolation):
            evolution.cauchy_evolve(initial, 1.0,
                                    evolution.EvolutionConfig(cfl=1.5),
                                    self.model)
        with self.assertRaises(DomainError):
            evolution.cauchy_evolve(initial, 0.2, evolution.EvolutionConfig(),
                                    self.model)
        with self.assertRaises(DomainError):
            evolution.cauchy_evolve(initial, 2.5, evolution.EvolutionConfig(),
                                    self.model)


class ExtendDatumTest(TestCase):
    def setUp(self):
        v = np.linspace(0.0, 2.0, 17)
        self.datum = constraints.NullDatum(
            v, angular.make_field(0.5, [(0.5, 0.5, 1.0 + v)], 0.5, v.shape),
            angular.zero_field(-0.5, 0.5, v.shape))
        self.v = np.linspace(0.0, 3.0, 25)

    def test_inside_values_are_interpolated(self):
        for rule in evolution.EXTENSIONS:
            out = evolution.extend_datum(self.datum, 1.0, self.v, rule)
            inside = self.v <= 2.0
            assert_allclose(out.psi1.coefficients[inside, 1], 1.0 + self.v[inside],
                            atol=1e-12)

    def test_hold(self):
        out = evolution.extend_datum(self.datum, 1.0, self.v, 'hold')
        assert_allclose(out.psi1.coefficients[self.v > 2.0, 1], 3.0)

    def test_blend_continues_the_slope_then_holds(self):
        out = evolution.extend_datum(self.datum, 1.0, self.v, 'blend', 0.25)
        values = out.psi1.coefficients[:, 1]
        delta = self.v[self.v > 2.0] - 2.0
        s = np.clip(delta / 0.5, 0.0, 1.0)
        chi = 1 - 10 * s ** 3 + 15 * s ** 4 - 6 * s ** 5
        assert_allclose(values[self.v > 2.0], 3.0 + delta * chi, atol=1e-10)
        assert_allclose(values[self.v >= 2.5], 3.0, atol=1e-10)

    def test_rejections(self):
        with self.assertRaises(ExtensionError):
            evolution.extend_datum(self.datum, 1.5, self.v)
        with self.assertRaises(ExtensionError):
            evolution.extend_datum(self.datum, 1.0, self.v, 'reflect')
        broken = self.datum.psi1.coefficients.copy()
        broken[3] = np.nan
        datum = constraints.NullDatum(
            self.datum.v, angular.SpectralField(1, 1, broken),
            self.datum.psi4)
        with self.assertRaises(ExtensionError):
            evolution.extend_datum(datum, 1.0, self.v)


class ExtrapolationTest(TestCase):
    def test_extrapolate_linear_dependence(self):
        values = {0.9: np.array([1.0 + 0.1 * 3]), 0.95: np.array([1.0 + 0.05 * 3])}
        assert_allclose(evolution.extrapolate(values), [1.0])

    def test_extrapolate_uses_the_two_closest_openings(self):
        values = {0.8: np.array([9.0]), 0.9: np.array([1.3]),
                  0.95: np.array([1.15])}
        assert_allclose(evolution.extrapolate(values), [1.0])

    def test_observed_order(self):
        values = {lam: np.array([(1 - lam) ** 2]) for lam in (0.8, 0.9, 0.95)}
        self.assertAlmostEqual(evolution.observed_order(values), 2.0)
        self.assertIsNone(evolution.observed_order(
            {0.9: np.zeros(1), 0.95: np.zeros(1)}))
        self.assertIsNone(evolution.observed_order(
            {lam: np.ones(1) for lam in (0.8, 0.9, 0.95)}))

    def test_check_order(self):
        cfg = evolution.EvolutionConfig()
        self.assertIsNone(evolution.check_order(None, cfg))
        self.assertTrue(evolution.check_order(1.2, cfg))
        with self.assertLogs('lightcone_dirac.evolution', level='WARNING'):
            self.assertFalse(evolution.check_order(2.0, cfg))
        self.assertTrue(evolution.check_order(
            2.0, evolution.EvolutionConfig(order_tolerance=1.5)))
        with self.assertRaises(ExtrapolationError):
            evolution.check_order(
                2.0, evolution.EvolutionConfig(strict_constraints=True))
        with self.assertRaises(ValueError):
            evolution.EvolutionConfig(order_tolerance=0.0)


class GoursatTest(TestCase):
    def setUp(self):
        self.model = geometry.build_metric()
        self.solution = oracle.ConstantSpinor((1.0, 0.5j, 0.2, -0.3))
        self.datum = oracle.restrict_to_cone(self.solution, 1.0, 1.0, 64,
                                             l_max=0.5).datum

    def test_constant_spinor_is_exact(self):
        cfg = _goursat_config()
        result = evolution.goursat_solve(self.datum, cfg, self.model)
        exact = oracle.slice_state(self.solution, 1.0, result.state.r, 0.5)
        self.assertEqual(result.state.r.size, 33)
        self.assertLess(result.state.max_difference(exact), 1e-10)
        for lam, state in result.per_lambda.items():
            self.assertLess(state.max_difference(exact), 1e-10, msg=lam)
            self.assertLess(result.residuals[lam], 1e-10)
        self.assertIsNone(result.order)

    def test_single_cone(self):
        cfg = _goursat_config()
        data = evolution.induced_cone_data(self.datum, 0.9, cfg, self.model)
        history = []
        state = evolution.lambda_cone_solve(data, cfg, self.model, history)
        exact = oracle.slice_state(self.solution, 1.0, state.r, 0.5)
        self.assertEqual(state.r.size, 33)
        self.assertLess(state.max_difference(exact), 1e-10)
        self.assertEqual(history[0].t, 0.0)
        self.assertAlmostEqual(history[-1].t, 1.0)
        self.assertEqual(history[-1].r.size, data.x.size)

    def test_trace_returns_the_datum(self):
        result = evolution.goursat_solve(self.datum, _goursat_config(),
                                         self.model)
        trace = result.trace(64)
        assert_allclose(trace.psi1.coefficients, self.datum.psi1.coefficients,
                        atol=1e-10)
        assert_allclose(trace.psi4.coefficients, self.datum.psi4.coefficients,
                        atol=1e-10)
        result.histories.clear()
        with self.assertRaises(ExtrapolationError):
            result.trace(64)

    def test_extension_matters_less_as_the_cones_close(self):
        wave = oracle.SphericalWave(energy=3.0, two_l=1, two_m=1)
        datum = oracle.restrict_to_cone(wave, 1.0, 1.0, 64, l_max=0.5).datum
        results = {rule: evolution.goursat_solve(
            datum, _goursat_config(lambdas=(0.8, 0.9), extension=rule,
                                   record_history=False), self.model)
            for rule in evolution.EXTENSIONS}
        gaps = [results['hold'].per_lambda[lam].max_difference(
            results['blend'].per_lambda[lam]) for lam in (0.8, 0.9)]
        self.assertGreater(gaps[0], gaps[1])

        blended = results['blend']
        exact = oracle.slice_state(wave, 1.0, blended.state.r, 0.5)
        self.assertLess(blended.state.max_difference(exact),
                        blended.per_lambda[0.9].max_difference(exact))

    def test_second_order_dependence_fails_the_order_check(self):
        def solve(data, cfg, model, history=None):
            modes = np.full((4, 33, 2), (1 - data.opening) ** 2, dtype=complex)
            return evolution.SliceState(1.0, np.linspace(0.0, 1.0, 33), modes, 1)

        cfg = _goursat_config(lambdas=(0.8, 0.9, 0.95), record_history=False)
        with patch('lightcone_dirac.evolution.lambda_cone_solve',
                   side_effect=solve):
            with self.assertLogs('lightcone_dirac.evolution', level='WARNING'):
                result = evolution.goursat_solve(self.datum, cfg, self.model)
            self.assertAlmostEqual(result.order, 2.0)
            self.assertFalse(result.order_ok)
            strict = _goursat_config(lambdas=(0.8, 0.9, 0.95),
                                     record_history=False,
                                     strict_constraints=True)
            with self.assertRaises(ExtrapolationError):
                evolution.goursat_solve(self.datum, strict, self.model)

    def test_order_check_skipped_when_the_openings_agree(self):
        cfg = _goursat_config(lambdas=(0.8, 0.9, 0.95), record_history=False)
        result = evolution.goursat_solve(self.datum, cfg, self.model)
        self.assertIsNone(result.order)
        self.assertIsNone(result.order_ok)

    def test_massive_plane_wave(self):
        wave = oracle.PlaneWave.at_rest(1.0, (1.0, 0.5j))
        datum = oracle.restrict_to_cone(wave, 1.0, 1.0, 64, l_max=0.5).datum
        self.assertEqual(datum.mass, 1.0)
        cfg = _goursat_config(mass=1.0, lambdas=(0.9, 0.95, 0.975),
                              record_history=False)
        result = evolution.goursat_solve(datum, cfg, self.model)
        exact = oracle.slice_state(wave, 1.0, result.state.r, 0.5)
        error = result.state.max_difference(exact)
        closest = result.per_lambda[0.975].max_difference(exact)
        self.assertLess(error, 0.5 * closest)
        self.assertLess(error, 1e-2 * np.max(np.abs(exact.modes)))

    def test_repeated_solves_are_bitwise_identical(self):
        wave = oracle.SphericalWave(energy=3.0, two_l=1, two_m=1)
        datum = oracle.restrict_to_cone(wave, 1.0, 1.0, 32, l_max=0.5).datum
        cfg = _goursat_config(record_history=False)
        first = evolution.goursat_solve(datum, cfg, self.model)
        second = evolution.goursat_solve(datum, cfg, self.model)
        self.assertTrue(np.array_equal(first.state.modes, second.state.modes))

    def test_rejected_openings(self):
        for lambdas in ((0.9,), (0.95, 0.9), (0.3, 0.9), (0.9, 1.0)):
            with self.subTest(lambdas=lambdas):
                with self.assertRaises(ExtrapolationError):
                    evolution.goursat_solve(
                        self.datum, _goursat_config(lambdas=lambdas), self.model)
        with self.assertRaises(DomainError):
            evolution.goursat_solve(self.datum, _goursat_config(t_final=2.0),
                                    geometry.build_metric(t_max=1.0))


class InducedConeDataTest(TestCase):
    def setUp(self):
        self.model = geometry.build_metric()
        wave = oracle.SphericalWave(energy=3.0, two_l=1, two_m=1)
        self.datum = oracle.restrict_to_cone(wave, 1.0, 1.0, 32, l_max=0.5).datum

    def test_constraint_residual(self):
        cfg = _goursat_config(constraint_tolerance=1e-14)
        with self.assertLogs('lightcone_dirac.evolution', level='WARNING'):
            data = evolution.induced_cone_data(self.datum, 0.9, cfg, self.model)
        self.assertGreater(data.residual, 0.0)
        self.assertEqual(len(data.derivatives), cfg.taylor_order + 1)
        strict = _goursat_config(constraint_tolerance=1e-14,
                                 strict_constraints=True)
        with self.assertRaises(ConstraintViolation):
            evolution.induced_cone_data(self.datum, 0.9, strict, self.model)

    def test_rejections(self):
        with self.assertRaises(ExtrapolationError):
            evolution.induced_cone_data(self.datum, 1.0, _goursat_config(),
                                        self.model)
        with self.assertRaises(ValueError):
            evolution.induced_cone_data(self.datum, 0.9,
                                        _goursat_config(l_max=1.5), self.model)
        moving = constraints.Potential(((0.0,), (1.0,)))
        with self.assertRaises(ValueError):
            evolution.induced_cone_data(
                self.datum, 0.9, _goursat_config(charge=1.0, potential=moving),
                self.model)


class TraceOnConeTest(TestCase):
    def test_rejections(self):
        with self.assertRaises(DomainError):
            evolution.trace_on_cone([], 8)
        r = np.linspace(0.0, 1.0, 9)
        late = oracle.slice_state(oracle.ConstantSpinor(), 0.5, r, 0.5)
        with self.assertRaises(DomainError):
            evolution.trace_on_cone([late], 8)
        early = oracle.slice_state(oracle.ConstantSpinor(), 0.0, r, 0.5)
        with self.assertRaises(DomainError):
            evolution.trace_on_cone(
                [early, evolution.SliceState(0.95, r, early.modes, 1)], 8)
