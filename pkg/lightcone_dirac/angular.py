"""
Half-integer spin-weighted spherical calculus.

Spins, degrees and orders are carried as doubled integers (two_s = 2s,
two_l = 2l, two_m = 2m) so that every index stays exact. The harmonics are

    ₛY_{lm}(θ, φ) = c_s √((2l+1)/4π) e^{imφ} d^l_{m,−s}(θ),
    c_s = (−1)^{s+½},

written in the "standard" frame; the north and south chart frames multiply
by e^{isφ} and e^{−isφ} respectively, which makes the functions single
valued and smooth at the pole each chart contains.

Ladder convention:

    ð  ₛY_{lm} = +√((l−s)(l+s+1)) ₛ₊₁Y_{lm}
    ð′ ₛY_{lm} = −√((l+s)(l−s+1)) ₛ₋₁Y_{lm}

which on pointwise values of the standard frame reads
ð = −(∂θ + i cscθ ∂φ − s cotθ) and ð′ = −(∂θ − i cscθ ∂φ + s cotθ).
"""
from dataclasses import dataclass
from functools import lru_cache
from math import factorial, pi, sqrt
from typing import Iterable, Sequence, Tuple

import numpy as np

DEFAULT_TWO_L_MAX = 9

CHARTS = ('standard', 'north', 'south')


def doubled(value) -> int:
    """2·value as an exact integer; rejects values that are not half-integers."""
    twice = 2 * value
    rounded = int(round(twice))
    if abs(twice - rounded) > 1e-12:
        raise ValueError('{} is not a multiple of 1/2'.format(value))
    return rounded


@lru_cache(maxsize=None)
def mode_indices(two_s: int, two_l_max: int) -> Tuple[np.ndarray, np.ndarray]:
    """Doubled (l, m) of every valid mode, l ascending then m ascending."""
    _check_spin(two_s, two_l_max)
    ls, ms = [], []
    for two_l in range(abs(two_s), two_l_max + 1, 2):
        for two_m in range(-two_l, two_l + 1, 2):
            ls.append(two_l)
            ms.append(two_m)
    two_l_arr = np.array(ls, dtype=int)
    two_m_arr = np.array(ms, dtype=int)
    two_l_arr.setflags(write=False)
    two_m_arr.setflags(write=False)
    return two_l_arr, two_m_arr


def mode_position(two_s: int, two_l_max: int, two_l: int, two_m: int) -> int:
    ls, ms = mode_indices(two_s, two_l_max)
    hits = np.nonzero((ls == two_l) & (ms == two_m))[0]
    if hits.size == 0:
        raise ValueError('invalid mode (l, m) = ({}/2, {}/2) for spin {}/2'
                         .format(two_l, two_m, two_s))
    return int(hits[0])


def _check_spin(two_s: int, two_l_max: int):
    if two_s % 2 == 0:
        raise ValueError('only half-integer spin weights are supported')
    if two_l_max < abs(two_s) or (two_l_max - two_s) % 2:
        raise ValueError('l_max = {}/2 incompatible with spin {}/2'
                         .format(two_l_max, two_s))


@dataclass(frozen=True)
class SpectralField:
    """
    Coefficients of a spin-weighted function in the orthonormal harmonics.
    `coefficients` has the modes on its last axis; leading axes (if any)
    index the nodes of a v- or r-grid.
    """
    two_s: int
    two_l_max: int
    coefficients: np.ndarray

    def __post_init__(self):
        coefficients = np.asarray(self.coefficients, dtype=complex)
        n_modes = mode_indices(self.two_s, self.two_l_max)[0].size
        if coefficients.shape[-1:] != (n_modes,):
            raise ValueError('expected {} modes, got shape {}'.format(
                n_modes, coefficients.shape))
        object.__setattr__(self, 'coefficients', coefficients)

    @property
    def spin(self) -> float:
        return self.two_s / 2

    @property
    def l_max(self) -> float:
        return self.two_l_max / 2

    @property
    def modes(self) -> Tuple[np.ndarray, np.ndarray]:
        return mode_indices(self.two_s, self.two_l_max)

    @property
    def grid_shape(self) -> tuple:
        return self.coefficients.shape[:-1]

    def norm(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self.coefficients) ** 2, axis=-1))

    def coefficient(self, l, m) -> np.ndarray:
        return self.coefficients[..., mode_position(
            self.two_s, self.two_l_max, doubled(l), doubled(m))]

    def scale(self, factor) -> 'SpectralField':
        """Multiply by a scalar or by one value per grid node."""
        factor = np.asarray(factor)
        if factor.ndim:
            factor = factor[..., np.newaxis]
        return SpectralField(self.two_s, self.two_l_max,
                             self.coefficients * factor)

    def node(self, index) -> 'SpectralField':
        return SpectralField(self.two_s, self.two_l_max,
                             self.coefficients[index])

    def _check_compatible(self, other: 'SpectralField'):
        if (self.two_s, self.two_l_max) != (other.two_s, other.two_l_max):
            raise ValueError('incompatible fields: spin {}/2 l_max {}/2 vs '
                             'spin {}/2 l_max {}/2'.format(
                                 self.two_s, self.two_l_max,
                                 other.two_s, other.two_l_max))

    def __add__(self, other: 'SpectralField') -> 'SpectralField':
        self._check_compatible(other)
        return SpectralField(self.two_s, self.two_l_max,
                             self.coefficients + other.coefficients)

    def __sub__(self, other: 'SpectralField') -> 'SpectralField':
        self._check_compatible(other)
        return SpectralField(self.two_s, self.two_l_max,
                             self.coefficients - other.coefficients)

    def __neg__(self) -> 'SpectralField':
        return SpectralField(self.two_s, self.two_l_max, -self.coefficients)

    def __mul__(self, factor) -> 'SpectralField':
        return SpectralField(self.two_s, self.two_l_max,
                             self.coefficients * factor)

    __rmul__ = __mul__


def make_field(s, modes: Iterable[Tuple] = (), l_max=DEFAULT_TWO_L_MAX / 2,
               grid_shape: tuple = ()) -> SpectralField:
    """
    Field of spin `s` with the listed (l, m, coefficient) entries and zeros
    elsewhere. With a grid shape, each coefficient may be a scalar or an
    array of that shape.
    """
    two_s, two_l_max = doubled(s), doubled(l_max)
    n_modes = mode_indices(two_s, two_l_max)[0].size
    coefficients = np.zeros(tuple(grid_shape) + (n_modes,), dtype=complex)
    for l, m, value in modes:
        two_l, two_m = doubled(l), doubled(m)
        if two_l > two_l_max:
            raise ValueError('l = {} exceeds l_max = {}'.format(l, l_max))
        if abs(two_m) > two_l or (two_l - two_m) % 2 or two_l < abs(two_s):
            raise ValueError('invalid mode (l, m) = ({}, {}) for spin {}'
                             .format(l, m, s))
        coefficients[..., mode_position(two_s, two_l_max, two_l, two_m)] = value
    return SpectralField(two_s, two_l_max, coefficients)


def zero_field(s, l_max=DEFAULT_TWO_L_MAX / 2, grid_shape: tuple = ()):
    return make_field(s, (), l_max, grid_shape)


def ladder_factors(two_s: int, two_l_max: int, raising: bool) -> np.ndarray:
    two_l, _ = mode_indices(two_s, two_l_max)
    if raising:
        return np.sqrt((two_l - two_s) * (two_l + two_s + 2)) / 2.0
    return -np.sqrt((two_l + two_s) * (two_l - two_s + 2)) / 2.0


def _shift_spin(f: SpectralField, two_s_out: int, factors: np.ndarray):
    two_l_in, two_m_in = f.modes
    scaled = f.coefficients * factors
    two_l_out, two_m_out = mode_indices(two_s_out, f.two_l_max)
    out = np.zeros(f.grid_shape + (two_l_out.size,), dtype=complex)
    lookup = {(l, m): i for i, (l, m) in enumerate(zip(two_l_in, two_m_in))}
    for j, key in enumerate(zip(two_l_out, two_m_out)):
        out[..., j] = scaled[..., lookup[key]]
    return SpectralField(two_s_out, f.two_l_max, out)


def eth_raise(f: SpectralField) -> SpectralField:
    """ð: spin s → s+1, a_{lm} ↦ +√((l−s)(l+s+1)) a_{lm}."""
    return _shift_spin(f, f.two_s + 2,
                       ladder_factors(f.two_s, f.two_l_max, raising=True))


def eth_lower(f: SpectralField) -> SpectralField:
    """ð′: spin s → s−1, a_{lm} ↦ −√((l+s)(l−s+1)) a_{lm}."""
    return _shift_spin(f, f.two_s - 2,
                       ladder_factors(f.two_s, f.two_l_max, raising=False))


def inner_product(f: SpectralField, g: SpectralField):
    if f.two_s != g.two_s:
        raise ValueError('spin mismatch: {}/2 vs {}/2'.format(f.two_s, g.two_s))
    if f.two_l_max != g.two_l_max:
        common = min(f.two_l_max, g.two_l_max)
        f, g = truncate(f, common), truncate(g, common)
    return np.sum(f.coefficients * np.conj(g.coefficients), axis=-1)


def truncate(f: SpectralField, two_l_max: int) -> SpectralField:
    """Restrict (or zero-pad) a field to another cutoff."""
    two_l_out, two_m_out = mode_indices(f.two_s, two_l_max)
    two_l_in, two_m_in = f.modes
    lookup = {(l, m): i for i, (l, m) in enumerate(zip(two_l_in, two_m_in))}
    out = np.zeros(f.grid_shape + (two_l_out.size,), dtype=complex)
    for j, key in enumerate(zip(two_l_out, two_m_out)):
        if key in lookup:
            out[..., j] = f.coefficients[..., lookup[key]]
    return SpectralField(f.two_s, two_l_max, out)


def wigner_d(two_j: int, two_mp: int, two_m: int, beta) -> np.ndarray:
    """Wigner small-d matrix element d^j_{m′m}(β) by the explicit sum."""
    beta = np.asarray(beta, dtype=float)
    j_plus_m, j_minus_m = (two_j + two_m) // 2, (two_j - two_m) // 2
    j_plus_mp, j_minus_mp = (two_j + two_mp) // 2, (two_j - two_mp) // 2
    mp_minus_m = (two_mp - two_m) // 2
    prefactor = sqrt(factorial(j_plus_mp) * factorial(j_minus_mp)
                     * factorial(j_plus_m) * factorial(j_minus_m))
    cos_half, sin_half = np.cos(beta / 2), np.sin(beta / 2)
    d = np.zeros_like(beta)
    for k in range(max(0, -mp_minus_m), min(j_plus_m, j_minus_mp) + 1):
        sign = -1.0 if (mp_minus_m + k) % 2 else 1.0
        denominator = (factorial(j_plus_m - k) * factorial(k)
                       * factorial(mp_minus_m + k) * factorial(j_minus_mp - k))
        d = d + (sign * prefactor / denominator
                 * cos_half ** (two_j - mp_minus_m - 2 * k)
                 * sin_half ** (mp_minus_m + 2 * k))
    return d


def spin_harmonic(two_s: int, two_l: int, two_m: int, theta, phi,
                  chart: str = 'standard') -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    sign = 1.0 if ((two_s + 1) // 2) % 2 == 0 else -1.0
    norm = sqrt((two_l + 1) / (4 * pi))
    value = (sign * norm * np.exp(0.5j * two_m * phi)
             * wigner_d(two_l, two_m, -two_s, theta))
    return value * _chart_phase(two_s, phi, chart)


def _chart_phase(two_s: int, phi, chart: str):
    if chart == 'standard':
        return 1.0
    if chart == 'north':
        return np.exp(0.5j * two_s * phi)
    if chart == 'south':
        return np.exp(-0.5j * two_s * phi)
    raise ValueError('unknown chart {!r}; expected one of {}'.format(chart, CHARTS))


def _check_chart_domain(theta, chart: str):
    theta = np.asarray(theta, dtype=float)
    at_north = np.isclose(theta, 0.0, atol=1e-14)
    at_south = np.isclose(theta, pi, atol=1e-14)
    if chart in ('standard', 'south') and np.any(at_north):
        raise ValueError('θ = 0 lies outside the {} chart'.format(chart))
    if chart in ('standard', 'north') and np.any(at_south):
        raise ValueError('θ = π lies outside the {} chart'.format(chart))


def evaluate_at(f: SpectralField, theta, phi, chart: str = 'standard'):
    """
    Pointwise value(s) of f at directions (θ, φ). φ is not reduced modulo
    2π: in the standard frame half-integer spin functions change sign
    under φ → φ + 2π.
    """
    _check_chart_domain(theta, chart)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    two_l, two_m = f.modes
    basis = np.stack([spin_harmonic(f.two_s, l, m, theta, phi, chart)
                      for l, m in zip(two_l, two_m)], axis=-1)
    if f.coefficients.ndim == 1:
        return np.sum(basis * f.coefficients, axis=-1)
    # grid axes of f in front of the direction axes
    return np.tensordot(f.coefficients, basis, axes=([-1], [-1]))


@dataclass(frozen=True)
class SphereQuadrature:
    """Gauss–Legendre nodes in cos θ times uniform nodes in φ."""
    n_theta: int
    n_phi: int

    @classmethod
    def for_cutoff(cls, two_l_max: int) -> 'SphereQuadrature':
        return cls(two_l_max + 2, 2 * two_l_max + 4)

    @property
    def grid(self):
        x, w = np.polynomial.legendre.leggauss(self.n_theta)
        theta = np.arccos(x)
        phi = 2 * pi * (np.arange(self.n_phi) + 0.5) / self.n_phi
        weights = np.outer(w, np.full(self.n_phi, 2 * pi / self.n_phi))
        theta_grid, phi_grid = np.meshgrid(theta, phi, indexing='ij')
        return theta_grid, phi_grid, weights

    def integrate(self, samples: np.ndarray) -> np.ndarray:
        _, _, weights = self.grid
        return np.sum(samples * weights, axis=(-2, -1))


@lru_cache(maxsize=64)
def _basis(two_s: int, two_l_max: int, quadrature: SphereQuadrature):
    theta, phi, weights = quadrature.grid
    two_l, two_m = mode_indices(two_s, two_l_max)
    basis = np.stack([spin_harmonic(two_s, l, m, theta, phi)
                      for l, m in zip(two_l, two_m)], axis=0)
    basis.setflags(write=False)
    return basis, weights


def synthesize(f: SpectralField, quadrature: SphereQuadrature) -> np.ndarray:
    """Values of f on the quadrature nodes, grid axes first."""
    basis, _ = _basis(f.two_s, f.two_l_max, quadrature)
    return np.tensordot(f.coefficients, basis, axes=([-1], [0]))


def project(samples: np.ndarray, s, l_max,
            quadrature: SphereQuadrature = None) -> SpectralField:
    """
    Spectral coefficients of sampled values (standard frame) by quadrature;
    the last two axes of `samples` are the (θ, φ) nodes.
    """
    two_s, two_l_max = doubled(s), doubled(l_max)
    if quadrature is None:
        quadrature = SphereQuadrature.for_cutoff(two_l_max)
    basis, weights = _basis(two_s, two_l_max, quadrature)
    weighted = np.asarray(samples) * weights
    coefficients = np.tensordot(weighted, np.conj(basis),
                                axes=([-2, -1], [1, 2]))
    return SpectralField(two_s, two_l_max, coefficients)


def field_to_modes(f: SpectralField) -> list:
    """Mode list [2l, 2m, re, im] of a field without grid axes."""
    if f.coefficients.ndim != 1:
        raise ValueError('only single-node fields serialize to mode lists')
    two_l, two_m = f.modes
    return [[int(l), int(m), float(a.real), float(a.imag)]
            for l, m, a in zip(two_l, two_m, f.coefficients)]


def field_from_modes(s, rows: Sequence[Sequence], l_max) -> SpectralField:
    entries = []
    for row in rows:
        if len(row) != 4:
            raise ValueError('mode rows are [2l, 2m, re, im], got {!r}'.format(row))
        two_l, two_m, re, im = row
        if int(two_l) != two_l or int(two_m) != two_m:
            raise ValueError('2l and 2m must be integers, got {!r}'.format(row))
        entries.append((int(two_l) / 2, int(two_m) / 2, complex(re, im)))
    return make_field(s, entries, l_max)
