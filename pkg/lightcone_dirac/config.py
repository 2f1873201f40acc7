"""
Run configurations: JSON documents validated into frozen dataclasses.

Keys starting with "comment" are dropped at every level. Every violation
is reported as ConfigError with the dotted path of the offending field.
"""
import json
import os
from dataclasses import dataclass, field
from typing import Optional

from . import angular, geometry, oracle
from .constraints import NullDatum, Potential, zero_datum
from .evolution import EXTENSIONS, EvolutionConfig
from .exceptions import ConfigError, LightconeError

EXPERIMENTS = ('constraints', 'goursat', 'cauchy', 'spincoeffs',
               'convergence', 'oracle-check')
CONVERGENCE_TARGETS = ('constraints', 'isometry', 'lambda')
OUTPUT_ENV = 'LIGHTCONE_DIRAC_OUT'

DEFAULT_TOLERANCES = {
    'constraint_error': 1e-6,
    'isometry_gap': 1e-5,
    'matching_residual': 1e-5,
    'round_trip': 5e-4,
    'cauchy_error': 1e-4,
    'min_order': 3.5,
    'extrapolation_order': 0.5,
}


@dataclass(frozen=True)
class MetricSpec:
    kind: str = geometry.MINKOWSKI
    t_max: float = 1.0
    a: tuple = (1.0,)
    b: tuple = (1.0,)
    variable: str = 'r2'

    def build(self) -> geometry.MetricModel:
        return geometry.build_metric(self.kind, self.t_max, self.a, self.b,
                                     self.variable)


@dataclass(frozen=True)
class OracleSpec:
    """An exact solution, or kind 'zero' for the zero datum."""
    kind: str = 'constant_spinor'
    params: dict = field(default_factory=dict, compare=False)

    @property
    def is_zero(self) -> bool:
        return self.kind == 'zero'

    def build(self) -> oracle.ExactSolution:
        return oracle.build_oracle(self.kind, **self.params)


@dataclass(frozen=True)
class PhysicsSpec:
    mass: float = 0.0
    charge: float = 0.0
    potential: Potential = field(default_factory=Potential)


@dataclass(frozen=True)
class Resolution:
    n_v: int = 128
    n_r: int = 64
    l_max: float = 0.5


@dataclass(frozen=True)
class CauchySpec:
    t_start: float = 0.5
    extent: float = 2.0


@dataclass(frozen=True)
class SpinSpec:
    points: tuple = ((0.5, 0.5),)
    tetrad: str = geometry.ADAPTED
    method: str = 'auto'


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    metric: MetricSpec = field(default_factory=MetricSpec)
    oracle: OracleSpec = field(default_factory=OracleSpec)
    physics: PhysicsSpec = field(default_factory=PhysicsSpec)
    resolution: Resolution = field(default_factory=Resolution)
    lambdas: tuple = (0.8, 0.9)
    t_final: float = 1.0
    cfl: float = 0.8
    extension: str = 'blend'
    extension_fraction: float = 0.1
    output: str = 'out'
    reproducible: bool = False
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES),
                             compare=False)
    cauchy: CauchySpec = field(default_factory=CauchySpec)
    spincoeffs: SpinSpec = field(default_factory=SpinSpec)
    target: str = 'constraints'
    ladder: tuple = ()
    source: dict = field(default_factory=dict, compare=False, repr=False)

    def evolution_config(self, n_r: Optional[int] = None,
                         lambdas: Optional[tuple] = None,
                         record_history: bool = False) -> EvolutionConfig:
        return EvolutionConfig(
            mass=self.physics.mass, charge=self.physics.charge,
            potential=self.physics.potential,
            lambdas=tuple(self.lambdas if lambdas is None else lambdas),
            n_r=self.resolution.n_r if n_r is None else n_r,
            l_max=self.resolution.l_max, t_final=self.t_final, cfl=self.cfl,
            extension=self.extension,
            extension_fraction=self.extension_fraction,
            order_tolerance=self.tolerances['extrapolation_order'],
            record_history=record_history)

    def datum(self, model: geometry.MetricModel,
              n_v: Optional[int] = None) -> NullDatum:
        """Null datum on the cone up to v = 2T from the oracle section."""
        n_v = self.resolution.n_v if n_v is None else n_v
        if self.oracle.is_zero:
            return zero_datum(self.t_final, n_v, self.resolution.l_max,
                              self.physics.mass)
        restriction = oracle.restrict_to_cone(
            self.oracle.build(), 1.0, self.t_final, n_v,
            self.resolution.l_max, model=model)
        return restriction.datum


def _strip_comments(value):
    if isinstance(value, dict):
        return {k: _strip_comments(v) for k, v in value.items()
                if not k.startswith('comment')}
    if isinstance(value, list):
        return [_strip_comments(v) for v in value]
    return value


class _Section:
    """Typed reads from one mapping of the document, tracking the key path."""

    def __init__(self, data, path=''):
        if not isinstance(data, dict):
            raise ConfigError(path, 'expected an object')
        self.data = data
        self.path = path
        self.used = set()

    def _at(self, key):
        return '{}.{}'.format(self.path, key) if self.path else key

    def section(self, key) -> '_Section':
        self.used.add(key)
        return _Section(self.data.get(key, {}), self._at(key))

    def raw(self, key, default=None):
        self.used.add(key)
        return self.data.get(key, default)

    def number(self, key, default, low=None, high=None, positive=False,
               integer=False):
        self.used.add(key)
        value = self.data.get(key, default)
        kind = int if integer else (int, float)
        if isinstance(value, bool) or not isinstance(value, kind):
            raise ConfigError(self._at(key), 'expected {}, got {!r}'.format(
                'an integer' if integer else 'a number', value))
        if positive and not value > 0:
            raise ConfigError(self._at(key), 'must be positive, got {}'
                              .format(value))
        if low is not None and value < low:
            raise ConfigError(self._at(key), 'must be at least {}, got {}'
                              .format(low, value))
        if high is not None and value > high:
            raise ConfigError(self._at(key), 'must be at most {}, got {}'
                              .format(high, value))
        return value

    def choice(self, key, default, options):
        self.used.add(key)
        value = self.data.get(key, default)
        if value not in options:
            raise ConfigError(self._at(key), '{!r} is not one of {}'
                              .format(value, ', '.join(options)))
        return value

    def flag(self, key, default=False):
        self.used.add(key)
        value = self.data.get(key, default)
        if not isinstance(value, bool):
            raise ConfigError(self._at(key), 'expected true or false')
        return value

    def numbers(self, key, default):
        self.used.add(key)
        value = self.data.get(key, default)
        if not isinstance(value, (list, tuple)) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool)
                for x in value):
            raise ConfigError(self._at(key), 'expected a list of numbers')
        return tuple(float(x) for x in value)

    def check_unknown(self):
        unknown = sorted(set(self.data) - self.used)
        if unknown:
            raise ConfigError(self._at(unknown[0]), 'unknown field')


def _metric(s: _Section) -> MetricSpec:
    spec = MetricSpec(
        kind=s.choice('kind', geometry.MINKOWSKI, geometry.KINDS),
        t_max=s.number('t_max', 1.0, positive=True),
        a=s.numbers('a', (1.0,)), b=s.numbers('b', (1.0,)),
        variable=s.choice('variable', 'r2', ('r2', 'r')))
    s.check_unknown()
    return spec


def _oracle(s: _Section) -> OracleSpec:
    kinds = ('zero', 'manufactured') + tuple(oracle.ORACLES)
    kind = s.choice('kind', 'constant_spinor', kinds)
    params = {k: v for k, v in s.data.items() if k != 'kind'}
    spec = OracleSpec(kind, params)
    if not spec.is_zero:
        try:
            spec.build()
        except (LightconeError, TypeError, ValueError) as e:
            raise ConfigError(s.path, str(e))
    return spec


def _physics(s: _Section) -> PhysicsSpec:
    mass = s.number('mass', 0.0, low=0.0)
    charge = s.number('charge', 0.0)
    rows = s.raw('potential', [[0.0]])
    if not isinstance(rows, list) or not all(
            isinstance(row, list) and row and all(
                isinstance(x, (int, float)) and not isinstance(x, bool)
                for x in row) for row in rows) or not rows:
        raise ConfigError(s._at('potential'), 'expected a nested list of '
                          'coefficients c[i][j] of tⁱ r²ʲ')
    s.check_unknown()
    potential = Potential(tuple(tuple(float(x) for x in row) for row in rows))
    return PhysicsSpec(mass, charge, potential)


def _resolution(s: _Section) -> Resolution:
    n_v = s.number('n_v', 128, low=8, integer=True)
    n_r = s.number('n_r', 64, low=8, integer=True)
    if n_r % 2:
        raise ConfigError(s._at('n_r'), 'must be even, got {}'.format(n_r))
    l_max = s.number('l_max', 0.5, positive=True)
    try:
        angular.doubled(l_max)
    except ValueError as e:
        raise ConfigError(s._at('l_max'), str(e))
    s.check_unknown()
    return Resolution(n_v, n_r, float(l_max))


def _tolerances(s: _Section) -> dict:
    out = dict(DEFAULT_TOLERANCES)
    for key in s.data:
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(s._at(key), 'unknown tolerance')
        out[key] = float(s.number(key, None, positive=True))
    return out


def _cauchy(s: _Section) -> CauchySpec:
    spec = CauchySpec(t_start=s.number('t_start', 0.5, low=0.0),
                      extent=s.number('extent', 2.0, positive=True))
    s.check_unknown()
    return spec


def _spincoeffs(s: _Section) -> SpinSpec:
    points = s.raw('points', [[0.5, 0.5]])
    if not isinstance(points, list) or not points or not all(
            isinstance(p, list) and 2 <= len(p) <= 4 for p in points):
        raise ConfigError(s._at('points'), 'expected a list of [t, r] or '
                          '[t, r, θ, φ] entries')
    spec = SpinSpec(tuple(tuple(float(x) for x in p) for p in points),
                    s.choice('tetrad', geometry.ADAPTED,
                             (geometry.ADAPTED, geometry.GRADIENT_L)),
                    s.choice('method', 'auto', ('auto', 'closed', 'fd')))
    s.check_unknown()
    return spec


def parse_config(data: dict) -> RunConfig:
    data = _strip_comments(data)
    root = _Section(data)
    experiment = root.choice('experiment', None, EXPERIMENTS)
    metric = _metric(root.section('metric'))
    t_final = root.number('t_final', metric.t_max, positive=True)
    if t_final > metric.t_max:
        raise ConfigError('t_final', 'exceeds metric.t_max = {}'
                          .format(metric.t_max))
    lambdas = root.numbers('lambdas', (0.8, 0.9))
    for i, lam in enumerate(lambdas):
        if not 0 < lam < 1:
            raise ConfigError('lambdas[{}]'.format(i),
                              'must lie in (0, 1), got {}'.format(lam))
    ladder = root.numbers('ladder', ())
    if any(int(n) != n or n < 8 for n in ladder):
        raise ConfigError('ladder', 'entries must be integers ≥ 8')
    config = RunConfig(
        experiment=experiment,
        metric=metric,
        oracle=_oracle(root.section('oracle')),
        physics=_physics(root.section('physics')),
        resolution=_resolution(root.section('resolution')),
        lambdas=lambdas,
        t_final=float(t_final),
        cfl=float(root.number('cfl', 0.8, positive=True, high=1.0)),
        extension=root.choice('extension', 'blend', EXTENSIONS),
        extension_fraction=float(root.number('extension_fraction', 0.1,
                                             positive=True, high=1.0)),
        output=str(root.raw('output', 'out')),
        reproducible=root.flag('reproducible'),
        tolerances=_tolerances(root.section('tolerances')),
        cauchy=_cauchy(root.section('cauchy')),
        spincoeffs=_spincoeffs(root.section('spincoeffs')),
        target=root.choice('target', 'constraints', CONVERGENCE_TARGETS),
        ladder=tuple(int(n) for n in ladder),
        source=data,
    )
    root.check_unknown()
    if not config.oracle.is_zero and \
            config.oracle.build().mass != config.physics.mass:
        raise ConfigError('physics.mass', 'differs from the oracle mass {}'
                          .format(config.oracle.build().mass))
    if experiment == 'convergence':
        _check_ladder(config)
    if _uses_lambda_cones(config) and not config.physics.potential.is_static:
        raise ConfigError('physics.potential', 'λ-cone solves need a '
                          'time-independent potential (a single row c[0])')
    return config


def _uses_lambda_cones(config: RunConfig) -> bool:
    return config.experiment == 'goursat' or (
        config.experiment == 'convergence'
        and config.target in ('isometry', 'lambda'))


def _check_ladder(config: RunConfig):
    ladder = config.lambdas if config.target == 'lambda' else config.ladder
    name = 'lambdas' if config.target == 'lambda' else 'ladder'
    if len(ladder) < 3:
        raise ConfigError(name, 'a convergence study needs at least 3 '
                          'levels, got {}'.format(len(ladder)))
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ConfigError(name, 'levels must increase strictly')


def parse_text(text: str, experiment: Optional[str] = None,
               origin: str = '<config>') -> RunConfig:
    """Parses a JSON document; `experiment` replaces the one it names."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError('', '{}: invalid JSON at line {}: {}'
                          .format(origin, e.lineno, e.msg))
    if not isinstance(data, dict):
        raise ConfigError('', '{}: expected a JSON object'.format(origin))
    if experiment is not None:
        data = dict(data, experiment=experiment)
    return parse_config(data)


def load_config(filename: str, experiment: Optional[str] = None) -> RunConfig:
    try:
        with open(filename, 'r') as fp:
            text = fp.read()
    except OSError as e:
        raise ConfigError('', 'cannot read {}: {}'.format(filename, e.strerror))
    return parse_text(text, experiment, filename)


def output_directory(config: RunConfig, override: Optional[str] = None) -> str:
    """--out beats the environment variable, which beats the config."""
    if override:
        return override
    return os.getenv(OUTPUT_ENV) or config.output
