"""
Command line entry point: one experiment per invocation, driven by a JSON
run configuration. Exit status 0 on success, 2 when a check exceeds its
tolerance, 1 on any other error.
"""
import argparse
import logging
import os
import platform
import sys
import time
from math import pi
from typing import List, Optional, Sequence

import numpy as np
import scipy

from . import (__version__, config as config_module, constraints, diagnostics,
               evolution, geometry, oracle)
from .config import RunConfig
from .exceptions import LightconeError, ToleranceFailure
from .utils import (PrettyPrint, get_template_content, list_templates,
                    write_csv, write_json)

logger = logging.getLogger(__name__)


class Run:
    """Output files, checks and timings collected while an experiment runs."""

    def __init__(self, config: RunConfig, out: str):
        self.config = config
        self.out = out
        self.files: List[str] = []
        self.summary = {}
        self.failures = {}
        self.timings = {}

    def path(self, name: str) -> str:
        return os.path.join(self.out, name)

    def json(self, name: str, data):
        self.files.append(write_json(self.path(name), data))

    def csv(self, name: str, header, rows):
        self.files.append(write_csv(self.path(name), header, rows))

    def check(self, name: str, value: float, tolerance_key: str = None,
              below: bool = True):
        self.summary[name] = value
        limit = self.config.tolerances[tolerance_key or name]
        failed = value > limit if below else value < limit
        if failed:
            self.failures[name] = (value, limit)
            PrettyPrint.print_yellow('{} = {:.3e} (tolerance {:.1e})'
                                     .format(name, value, limit))
        else:
            PrettyPrint.print_green('{} = {:.3e}'.format(name, value))

    def timed(self, name: str, func, *args, **kwargs):
        start = time.perf_counter()
        result = func(*args, **kwargs)
        self.timings[name] = time.perf_counter() - start
        return result


def _max_error(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def _scale(d: constraints.NullDatum) -> float:
    size = max(np.max(np.abs(d.psi1.coefficients)),
               np.max(np.abs(d.psi4.coefficients)))
    return float(size) if size > 0 else 1.0


def _constraint_error(config: RunConfig, model, n_v: int):
    """Cone solution and its sup error against the exact Ψ₂, Ψ₃ (or None)."""
    d = config.datum(model, n_v)
    sol = constraints.solve_constraints(d, model)
    if config.oracle.is_zero:
        return d, sol, None
    exact = oracle.restrict_to_cone(config.oracle.build(), 1.0,
                                    config.t_final, n_v,
                                    config.resolution.l_max, model=model)
    error = max(_max_error(sol.psi2.coefficients, exact.psi2.coefficients),
                _max_error(sol.psi3.coefficients, exact.psi3.coefficients))
    return d, sol, error / _scale(d)


def run_constraints(run: Run, model):
    d, sol, error = run.timed('solve', _constraint_error, run.config, model,
                              run.config.resolution.n_v)
    run.json('cone_solution.json', constraints.solution_to_dict(sol))
    run.csv('generator.csv', ['v', 'psi1', 'psi2', 'psi3', 'psi4'],
            constraints.generator_profiles(sol, pi / 2, 0.0))
    run.summary['cone_flux'] = constraints.cone_flux(d, model,
                                                     run.config.t_final)
    if error is not None:
        run.check('constraint_error', error)
        run.check('matching_residual',
                  constraints.matching_residual(d, sol, model=model) / _scale(d))


def _exact_slice(config: RunConfig, t: float, r, model):
    return oracle.slice_state(config.oracle.build(), t, r,
                              config.resolution.l_max, model)


def run_goursat(run: Run, model):
    config = run.config
    cfg = config.evolution_config(record_history=not config.oracle.is_zero)
    d = config.datum(model)
    result = run.timed('goursat', evolution.goursat_solve, d, cfg, model)
    run.json('sigma_T.json', result.state.to_dict())
    run.summary['constraint_residuals'] = {
        str(lam): value for lam, value in sorted(result.residuals.items())}
    run.summary['observed_order'] = result.order
    run.summary['order_verified'] = result.order_ok
    if result.order is not None:
        run.check('extrapolation_order', abs(result.order - 1.0))
    report = diagnostics.isometry_report(d, result.state, model)
    run.summary['isometry'] = report.to_dict()
    if config.oracle.is_zero:
        return
    exact = _exact_slice(config, config.t_final, result.state.r, model)
    run.summary['solution_error'] = result.state.max_difference(exact) \
        / _scale(d)
    trace = result.trace(config.resolution.n_v)
    run.check('round_trip', max(
        _max_error(trace.psi1.coefficients, d.psi1.coefficients),
        _max_error(trace.psi4.coefficients, d.psi4.coefficients)) / _scale(d))


def run_cauchy(run: Run, model):
    config = run.config
    spec = config.cauchy
    cfg = config.evolution_config()
    r = np.linspace(0.0, spec.extent, config.resolution.n_r + 1)
    if config.oracle.is_zero:
        n_modes = len(constraints.mode_k(cfg.two_l_max))
        initial = evolution.SliceState(
            spec.t_start, r, np.zeros((4, r.size, n_modes)), cfg.two_l_max)
        source = None
    else:
        initial = _exact_slice(config, spec.t_start, r, model)
        source = oracle.source_function(config.oracle.build(),
                                        config.resolution.l_max)
    final = run.timed('cauchy', evolution.source_evolve, initial, source,
                      config.t_final, cfg, model)
    run.json('slice.json', final.to_dict())
    radius = evolution.excision_radius(initial, config.t_final)
    run.summary['excision_radius'] = radius
    run.summary['energy'] = diagnostics.slice_energy(final, model, radius)
    if not config.oracle.is_zero:
        exact = _exact_slice(config, config.t_final, r, model)
        scale = float(np.max(np.abs(exact.modes))) or 1.0
        run.check('cauchy_error', final.max_difference(exact, radius) / scale)


def run_spincoeffs(run: Run, model):
    spec = run.config.spincoeffs
    rows = []
    for values in spec.points:
        p = geometry.SlicePoint(*values)
        coefficients = geometry.spin_coefficients(model, p, spec.tetrad,
                                                  spec.method)
        for name, value in coefficients.as_dict().items():
            rows.append([p.t, p.r, p.theta, p.phi, name, value.real,
                         value.imag])
    run.csv('spin_coefficients.csv',
            ['t', 'r', 'theta', 'phi', 'name', 're', 'im'], rows)
    report = run.timed('asymptotics', diagnostics.asymptotics_fit, model)
    run.summary['asymptotics'] = report.to_dict()
    if report.flagged:
        PrettyPrint.print_yellow('vertex fit residual {:.3e} above {:.1e}'
                                 .format(report.residual,
                                         diagnostics.FIT_TOLERANCE))


def run_oracle_check(run: Run, model):
    config = run.config
    d, sol, error = run.timed('constraints', _constraint_error, config, model,
                              config.resolution.n_v)
    if error is None:
        raise LightconeError('oracle-check needs an exact solution, not the '
                             'zero datum')
    run.check('constraint_error', error)
    run.check('matching_residual',
              constraints.matching_residual(d, sol, model=model) / _scale(d))
    r = np.linspace(0.0, config.t_final, config.resolution.n_r + 1)
    exact = _exact_slice(config, config.t_final, r, model)
    report = diagnostics.isometry_report(d, exact, model)
    run.summary['isometry'] = report.to_dict()
    run.check('isometry_gap', report.gap)
    cfg = config.evolution_config()
    run.summary['h1_ratio'] = diagnostics.equivalence_ratio(d, exact, model, cfg)


def _convergence_level(config: RunConfig, model, level):
    if config.target == 'constraints':
        return _constraint_error(config, model, int(level))[2]
    if config.target == 'isometry':
        n_r = int(level)
        cfg = config.evolution_config(n_r=n_r)
        d = config.datum(model, 2 * n_r)
        return diagnostics.isometry_report(
            d, evolution.goursat_solve(d, cfg, model).state, model).gap
    # a single λ-cone solve at the configured grid
    cfg = config.evolution_config(lambdas=(level,))
    d = config.datum(model)
    data = evolution.induced_cone_data(d, level, cfg, model)
    state = evolution.lambda_cone_solve(data, cfg, model)
    exact = _exact_slice(config, config.t_final, state.r, model)
    return state.max_difference(exact) / _scale(d)


def run_convergence(run: Run, model):
    config = run.config
    if config.oracle.is_zero:
        raise LightconeError('a convergence study needs an exact solution')
    table = diagnostics.ConvergenceTable(config.target)
    levels = config.lambdas if config.target == 'lambda' else config.ladder
    for level in levels:
        error = run.timed('level_{}'.format(level), _convergence_level,
                          config, model, level)
        resolution = 1.0 / (1.0 - level) if config.target == 'lambda' \
            else level
        table.add(resolution, error)
        PrettyPrint.msg_blue('level {}: error {:.3e}'.format(level, error))
    table.to_csv(run.path('convergence.csv'))
    run.files.append(run.path('convergence.csv'))
    run.summary['convergence'] = table.to_dict()
    if config.target == 'lambda':
        run.summary['decreasing'] = all(
            b < a for a, b in zip(table.errors, table.errors[1:]))
        if not run.summary['decreasing']:
            run.failures['lambda_errors'] = (table.errors[-1], table.errors[0])
            PrettyPrint.print_yellow('errors do not decrease as λ → 1')
    elif table.min_order is not None:
        run.check('min_order', table.min_order, below=False)


EXPERIMENTS = {
    'constraints': run_constraints,
    'goursat': run_goursat,
    'cauchy': run_cauchy,
    'spincoeffs': run_spincoeffs,
    'convergence': run_convergence,
    'oracle-check': run_oracle_check,
}


def _manifest(run: Run, status: str) -> dict:
    reproducible = run.config.reproducible
    return {
        'experiment': run.config.experiment,
        'status': status,
        'config': run.config.source,
        'versions': {
            'lightcone_dirac': __version__,
            'numpy': np.__version__,
            'scipy': scipy.__version__,
            'python': platform.python_version(),
        },
        'timings': None if reproducible else run.timings,
        'files': sorted(os.path.relpath(f, run.out) for f in run.files),
        'summary': run.summary,
        'failures': {name: {'value': value, 'limit': limit}
                     for name, (value, limit) in run.failures.items()},
    }


def execute(config: RunConfig, out: str) -> Run:
    """Runs one experiment and writes report.json and manifest.json to `out`."""
    run = Run(config, out)
    PrettyPrint.msg_blue('Running the {} experiment'.format(config.experiment))
    model = config.metric.build()
    EXPERIMENTS[config.experiment](run, model)
    status = 'tolerance_failure' if run.failures else 'ok'
    write_json(run.path('manifest.json'), _manifest(run, status))
    if run.failures:
        raise ToleranceFailure(run.failures)
    PrettyPrint.print_green('Results written to {}'.format(out))
    return run


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='lightcone-dirac',
        description='Characteristic Dirac solver on light-cones.')
    parser.add_argument('--template', metavar='NAME',
                        help='print an example configuration and exit')
    subparsers = parser.add_subparsers(dest='experiment')
    for name in EXPERIMENTS:
        sub = subparsers.add_parser(name)
        sub.add_argument('--config', metavar='PATH',
                         help='JSON run configuration (default: the '
                              '{} template)'.format(name))
        sub.add_argument('--out', metavar='DIR',
                         help='output directory, overrides ${}'
                         .format(config_module.OUTPUT_ENV))
        sub.add_argument('--repro', action='store_true',
                         help='bitwise reproducible outputs, no timings')
        sub.add_argument('--seed-free', action='store_true',
                         help='reserved; runs are deterministic')
        sub.add_argument('--verbose', '-v', action='store_true')
    return parser


def template_name(experiment: str) -> str:
    return '{}.json'.format(experiment.replace('-', '_'))


def _load(args) -> RunConfig:
    if args.config:
        config = config_module.load_config(args.config, args.experiment)
    else:
        name = template_name(args.experiment)
        config = config_module.parse_text(get_template_content(name),
                                          args.experiment, name)
    if args.repro and not config.reproducible:
        data = dict(config.source, reproducible=True)
        config = config_module.parse_config(data)
    return config


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    if args.template:
        name = args.template if args.template.endswith('.json') \
            else template_name(args.template)
        if name not in list_templates():
            PrettyPrint.print_red('unknown template {!r}; available: {}'
                                  .format(args.template,
                                          ', '.join(list_templates())))
            return 1
        print(get_template_content(name), end='')
        return 0
    if not args.experiment:
        parser.print_usage()
        return 1

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format='%(levelname)s %(name)s: %(message)s')
    try:
        config = _load(args)
        execute(config, config_module.output_directory(config, args.out))
    except ToleranceFailure as e:
        PrettyPrint.print_red('Tolerance check failed: {}'.format(e))
        return 2
    except (LightconeError, ValueError) as e:
        PrettyPrint.print_red('Error: {}'.format(e))
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
