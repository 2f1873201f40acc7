"""
Metric models, double-null coordinates, null tetrads and spin coefficients
for static spherically symmetric backgrounds

    g = A(R) dτ² − B(R) dR² − R² dΩ².

After the global rescaling t = k·τ with k = √A(0) the lapse at the vertex is
√2. The radial coordinate r used everywhere is the rescaled tortoise
coordinate, so the metric reads F (dt² − dr²) − R(r)² dΩ² with
F = A(R)/k², u = t − r and v = t + r, and the past vertex p₀ of the cone
{u = 0} sits at t = r = 0.
"""
import logging
import warnings
from dataclasses import dataclass, field
from math import pi, sqrt
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial
from scipy import integrate

from .exceptions import AccuracyWarning, DomainError, ModelError

logger = logging.getLogger(__name__)

MINKOWSKI = 'minkowski'
STATIC_SPHERICAL = 'static_spherical'
KINDS = (MINKOWSKI, STATIC_SPHERICAL)

ADAPTED = 'adapted'
GRADIENT_L = 'gradient_l'
HATTED = 'hatted'
TETRADS = (ADAPTED, GRADIENT_L, HATTED)

SPIN_COEFFICIENT_NAMES = ('kappa', 'sigma', 'rho', 'tau', 'epsilon', 'beta',
                          'alpha', 'gamma', 'pi', 'mu', 'lambda_c', 'nu')

# floor (relative to t_max) below which pointwise spin coefficients lose digits
ACCURACY_FLOOR = 1e-6


@dataclass(frozen=True)
class MetricModel:
    kind: str
    t_max: float
    r_max: float
    a_coefficients: tuple = (1.0,)
    b_coefficients: tuple = (1.0,)
    scale_k: float = 1.0
    _areal: object = field(default=None, compare=False, repr=False)

    @property
    def is_minkowski(self) -> bool:
        return self._areal is None

    @property
    def domain_margin(self) -> float:
        """Enlargement of D_T admitted for finite-difference stencils."""
        return 2e-3 * self.t_max + 2e-5

    def a_of(self, areal) -> np.ndarray:
        return polynomial.polyval(np.square(areal), self.a_coefficients)

    def b_of(self, areal) -> np.ndarray:
        return polynomial.polyval(np.square(areal), self.b_coefficients)

    def da_of(self, areal) -> np.ndarray:
        areal = np.asarray(areal, dtype=float)
        slope = polynomial.polyder(self.a_coefficients)
        return 2 * areal * polynomial.polyval(np.square(areal), slope)


@dataclass(frozen=True)
class RadialProfile:
    """Background functions along r: areal radius R, dR/dr, F and dF/dr."""
    r: np.ndarray
    areal: np.ndarray
    d_areal: np.ndarray
    f: np.ndarray
    d_f: np.ndarray

    @property
    def lapse(self) -> np.ndarray:
        return np.sqrt(2 * self.f)


@dataclass(frozen=True)
class SlicePoint:
    t: float
    r: float
    theta: float = pi / 2
    phi: float = 0.0


@dataclass(frozen=True)
class ConePoint:
    v: float
    theta: float = pi / 2
    phi: float = 0.0

    def to_slice(self) -> SlicePoint:
        return SlicePoint(self.v / 2, self.v / 2, self.theta, self.phi)


@dataclass(frozen=True)
class NullTetrad:
    """
    Coordinate components (t, r, θ, φ) of (l, n, m). For the hatted tetrad
    the normalization is g(l, n) = −g(m, m̄) = r², otherwise 1.
    """
    choice: str
    point: SlicePoint
    l: np.ndarray
    n: np.ndarray
    m: np.ndarray
    lapse: float
    normalization: float = 1.0
    angular_shift: tuple = (0.0, 0.0)

    @property
    def m_bar(self) -> np.ndarray:
        return np.conj(self.m)

    def residuals(self, metric: np.ndarray) -> dict:
        def g(x, y):
            return x @ metric @ y

        scale = self.normalization
        return {
            'l.n': abs(g(self.l, self.n) - scale) / scale,
            'm.mbar': abs(g(self.m, self.m_bar) + scale) / scale,
            'l.l': abs(g(self.l, self.l)) / scale,
            'n.n': abs(g(self.n, self.n)) / scale,
            'm.m': abs(g(self.m, self.m)) / scale,
            'l.m': abs(g(self.l, self.m)) / scale,
            'n.m': abs(g(self.n, self.m)) / scale,
        }


@dataclass(frozen=True)
class SpinCoefficientSet:
    choice: str
    point: SlicePoint
    kappa: complex
    sigma: complex
    rho: complex
    tau: complex
    epsilon: complex
    beta: complex
    alpha: complex
    gamma: complex
    pi: complex
    mu: complex
    lambda_c: complex
    nu: complex

    def as_dict(self) -> dict:
        return {name: complex(getattr(self, name))
                for name in SPIN_COEFFICIENT_NAMES}


@dataclass(frozen=True)
class ConjugateStructure:
    theta: np.ndarray
    phi: np.ndarray
    theta_conjugate: np.ndarray
    phi_conjugate: np.ndarray
    phase: np.ndarray

    def involution_residual(self, model: 'MetricModel') -> float:
        again = conjugate_structure(model, self.theta_conjugate,
                                    self.phi_conjugate)
        return float(max(
            np.max(np.abs(again.theta_conjugate - self.theta)),
            np.max(np.abs(_wrap(again.phi_conjugate - self.phi)))))

    def phase_symmetry_residual(self, model: 'MetricModel') -> float:
        again = conjugate_structure(model, self.theta_conjugate,
                                    self.phi_conjugate)
        return float(np.max(np.abs(_wrap(again.phase - self.phase))))


@dataclass(frozen=True)
class GhpWeight:
    """GHP type {r′, r; t′, t} of a weighted scalar."""
    r_prime: int
    r: int
    t_prime: int
    t: int

    @property
    def p(self) -> int:
        return self.r_prime - self.r

    @property
    def q(self) -> int:
        return self.t_prime - self.t

    @property
    def spin(self) -> float:
        return (self.p - self.q) / 2

    @property
    def boost(self) -> float:
        return (self.p + self.q) / 2

    def __mul__(self, other: 'GhpWeight') -> 'GhpWeight':
        return GhpWeight(self.r_prime + other.r_prime, self.r + other.r,
                         self.t_prime + other.t_prime, self.t + other.t)


COMPONENT_WEIGHTS = (
    GhpWeight(1, 0, 0, 0),
    GhpWeight(0, 1, 0, 0),
    GhpWeight(0, 0, 0, 1),
    GhpWeight(0, 0, 1, 0),
)


def _wrap(angle):
    return np.angle(np.exp(1j * np.asarray(angle)))


def _even_coefficients(coefficients: Sequence[float], variable: str, name: str):
    coefficients = [float(c) for c in coefficients]
    if not coefficients:
        raise ModelError('{} needs at least one coefficient'.format(name))
    if variable == 'r2':
        return tuple(coefficients)
    if variable != 'r':
        raise ModelError('unknown polynomial variable {!r} for {}'
                         .format(variable, name))
    odd = [c for c in coefficients[1::2] if c != 0.0]
    if odd:
        raise ModelError('{} has odd powers of r; the vertex would be '
                         'singular ({}\'(0) or higher odd terms nonzero)'
                         .format(name, name))
    return tuple(coefficients[0::2])


def build_metric(kind: str = MINKOWSKI, t_max: float = 1.0,
                 a: Sequence[float] = (1.0,), b: Sequence[float] = (1.0,),
                 variable: str = 'r2',
                 r_max: Optional[float] = None) -> MetricModel:
    """
    A and B are polynomial coefficient lists in R² (or in R with
    variable='r', odd powers rejected). r_max defaults to 4·t_max, enough
    room for the excised Cauchy runs.
    """
    if kind not in KINDS:
        raise ModelError('unknown metric kind {!r}; expected one of {}'
                         .format(kind, KINDS))
    if not t_max > 0:
        raise ModelError('t_max must be positive, got {}'.format(t_max))
    r_max = 4.0 * t_max if r_max is None else float(r_max)
    if r_max < t_max:
        raise ModelError('r_max = {} smaller than t_max = {}'
                         .format(r_max, t_max))
    a = _even_coefficients(a, variable, 'A')
    b = _even_coefficients(b, variable, 'B')
    if kind == MINKOWSKI:
        if a != (1.0,) or b != (1.0,):
            raise ModelError('the Minkowski model takes no A, B coefficients')
        return MetricModel(MINKOWSKI, float(t_max), r_max)
    if a[0] <= 0:
        raise ModelError('A(0) must be positive, got {}'.format(a[0]))
    if abs(b[0] - 1.0) > 1e-14:
        raise ModelError('B(0) must equal 1 (conical singularity at the '
                         'vertex otherwise), got {}'.format(b[0]))
    if a == (a[0],) and b == (1.0,):
        # flat member of the family: exactly the Minkowski coordinates
        return MetricModel(STATIC_SPHERICAL, float(t_max), r_max, a, b,
                           sqrt(a[0]))

    trial = MetricModel(STATIC_SPHERICAL, float(t_max), r_max, a, b, sqrt(a[0]))
    areal = _integrate_areal_radius(trial)
    model = MetricModel(STATIC_SPHERICAL, float(t_max), r_max, a, b,
                        sqrt(a[0]), areal)
    samples = areal.sol(np.linspace(0.0, r_max, 513))[0]
    if np.any(model.a_of(samples) <= 0) or np.any(model.b_of(samples) <= 0):
        raise ModelError('A or B not positive on [0, r_max]')
    logger.debug('built %s model: k = %.6g, R(r_max) = %.6g',
                 kind, model.scale_k, samples[-1])
    return model


def _integrate_areal_radius(model: MetricModel):
    def rhs(_, y):
        a, b = model.a_of(y[0]), model.b_of(y[0])
        if a <= 0 or b <= 0:
            raise ModelError('A or B not positive at R = {:.6g}'.format(y[0]))
        return [sqrt(a / b) / model.scale_k]

    solution = integrate.solve_ivp(rhs, (0.0, model.r_max), [0.0],
                                   method='DOP853', rtol=1e-13, atol=1e-15,
                                   dense_output=True)
    if not solution.success:
        raise ModelError('areal radius integration failed: {}'
                         .format(solution.message))
    return solution


def areal_radius(model: MetricModel, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > model.r_max * (1 + 1e-12)):
        raise DomainError('r outside [0, r_max = {}]'.format(model.r_max))
    if model.is_minkowski:
        return r.copy()
    return model._areal.sol(r.ravel())[0].reshape(r.shape)


def radial_profile(model: MetricModel, r) -> RadialProfile:
    r = np.asarray(r, dtype=float)
    areal = areal_radius(model, r)
    if model.is_minkowski:
        ones = np.ones_like(r)
        return RadialProfile(r, areal, ones, ones, np.zeros_like(r))
    k2 = model.scale_k ** 2
    a, b = model.a_of(areal), model.b_of(areal)
    d_areal = np.sqrt(a / b) / model.scale_k
    return RadialProfile(r, areal, d_areal, a / k2,
                         model.da_of(areal) * d_areal / k2)


def tortoise(model: MetricModel, areal) -> np.ndarray:
    """r★(R) = k∫₀ᴿ √(B/A) dR′, the inverse of areal_radius."""
    areal = np.atleast_1d(np.asarray(areal, dtype=float))
    if model.is_minkowski:
        return areal.copy()

    def integrand(x):
        return model.scale_k * sqrt(model.b_of(x) / model.a_of(x))

    return np.array([integrate.quad(integrand, 0.0, x, epsabs=1e-14,
                                    epsrel=1e-13)[0] for x in areal])


def null_coordinates(model: MetricModel, t, areal):
    """(u, v) of a point given by time and areal radius."""
    r = tortoise(model, areal)
    return np.asarray(t) - r, np.asarray(t) + r


def regularized_bracket(model: MetricModel, r) -> np.ndarray:
    """
    b(r) = ½(1/r − R′/R − F′/(4F)); finite at the vertex for regular
    models. The r = 0 entry is the polynomial extrapolation from small r.
    """
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    if model.is_minkowski:
        return out
    positive = r > 0
    if np.any(positive):
        p = radial_profile(model, r[positive])
        out[positive] = 0.5 * (1 / p.r - p.d_areal / p.areal
                               - p.d_f / (4 * p.f))
    if np.any(~positive):
        out[~positive] = bracket_vertex_limit(model)
    return out


def bracket_vertex_limit(model: MetricModel) -> float:
    if model.is_minkowski:
        return 0.0
    nodes = 1e-3 * model.t_max * np.arange(1, 5)
    values = regularized_bracket(model, nodes)
    return float(polynomial.polyval(0.0, polynomial.polyfit(nodes, values, 3)))


def metric_matrix(model: MetricModel, t: float, r: float,
                  theta: float) -> np.ndarray:
    profile = radial_profile(model, np.array([r]))
    f, areal = profile.f[0], profile.areal[0]
    return np.diag([f, -f, -areal ** 2, -(areal * np.sin(theta)) ** 2])


def check_point(model: MetricModel, p: SlicePoint):
    """Raise DomainError outside the (slightly enlarged) D_T or at r = 0."""
    margin = model.domain_margin
    if not (-margin <= p.t <= model.t_max + margin):
        raise DomainError('t = {} outside [0, T = {}]'.format(p.t, model.t_max))
    if p.r > p.t + margin:
        raise DomainError('r = {} > t = {}: point outside D_T'.format(p.r, p.t))
    if p.r <= 0:
        raise DomainError('tetrads at r = 0 exist only as limits along '
                          'generators')
    if np.sin(p.theta) <= 0:
        raise DomainError('θ = {} is a pole of the spherical chart'
                          .format(p.theta))


def _tetrad_components(model: MetricModel, p: SlicePoint, choice: str):
    profile = radial_profile(model, np.array([p.r]))
    f, areal = profile.f[0], profile.areal[0]
    m = np.array([0.0, 0.0, 1.0 / (areal * sqrt(2)),
                  1j / (areal * sqrt(2) * np.sin(p.theta))])
    lapse = sqrt(2 * f)
    if choice == ADAPTED:
        a = 1.0 / lapse
        return (np.array([a, a, 0.0, 0.0], dtype=complex),
                np.array([a, -a, 0.0, 0.0], dtype=complex), m, lapse, 1.0)
    big_l = np.array([1.0 / f, 1.0 / f, 0.0, 0.0], dtype=complex)
    big_n = np.array([0.5, -0.5, 0.0, 0.0], dtype=complex)
    if choice == GRADIENT_L:
        return big_l, big_n, m, lapse, 1.0
    if choice == HATTED:
        return big_l, p.r ** 2 * big_n, p.r * m, lapse, p.r ** 2
    raise ValueError('unknown tetrad {!r}; expected one of {}'
                     .format(choice, TETRADS))


def tetrad_at(model: MetricModel, p: SlicePoint,
              choice: str = ADAPTED) -> NullTetrad:
    check_point(model, p)
    l, n, m, lapse, scale = _tetrad_components(model, p, choice)
    return NullTetrad(choice, p, l, n, m.astype(complex), lapse, scale)


def _closed_form(model: MetricModel, p: SlicePoint, choice: str) -> dict:
    prof = radial_profile(model, np.array([p.r]))
    areal, d_areal, f, d_f = (prof.areal[0], prof.d_areal[0], prof.f[0],
                              prof.d_f[0])
    beta = np.cos(p.theta) / np.sin(p.theta) / (2 * sqrt(2) * areal)
    values = dict.fromkeys(SPIN_COEFFICIENT_NAMES, 0.0)
    values.update(beta=beta, alpha=-beta)
    if choice == ADAPTED:
        a = 1.0 / sqrt(2 * f)
        values.update(rho=-a * d_areal / areal, mu=-a * d_areal / areal,
                      epsilon=a * d_f / (4 * f), gamma=a * d_f / (4 * f))
    elif choice == GRADIENT_L:
        values.update(rho=-d_areal / (f * areal), mu=-d_areal / (2 * areal),
                      gamma=d_f / (4 * f))
    else:
        raise ValueError('closed forms exist for the adapted and gradient_l '
                         'tetrads only, not {!r}'.format(choice))
    return {name: complex(value) for name, value in values.items()}


def _fd_step(p: SlicePoint) -> float:
    return min(max(1e-5, 1e-3 * p.r), p.r / 4)


def _coordinate_derivatives(func, p: SlicePoint, h: float):
    """∂_b of func(point) along (t, r, θ, φ) by 4th-order central differences."""
    base = np.array([p.t, p.r, p.theta, p.phi])
    derivatives = []
    for axis in range(4):
        def at(offset, axis=axis):
            x = base.copy()
            x[axis] += offset * h
            return func(SlicePoint(*x))
        derivatives.append((at(-2) - 8 * at(-1) + 8 * at(1) - at(2)) / (12 * h))
    return np.stack(derivatives, axis=0)


def christoffel(model: MetricModel, p: SlicePoint) -> np.ndarray:
    """Γ^c_{ab} as an array indexed [c, a, b]."""
    h = _fd_step(p)
    metric = metric_matrix(model, p.t, p.r, p.theta)
    inverse = np.linalg.inv(metric)
    d_metric = _coordinate_derivatives(
        lambda q: metric_matrix(model, q.t, q.r, q.theta), p, h)
    # d_metric[d, a, b] = ∂_d g_ab
    lowered = 0.5 * (np.transpose(d_metric, (1, 0, 2))
                     + np.transpose(d_metric, (1, 2, 0)) - d_metric)
    # lowered[d, a, b] = ½(∂_a g_db + ∂_b g_da − ∂_d g_ab)
    return np.einsum('cd,dab->cab', inverse, lowered)


def _covariant_derivatives(model: MetricModel, p: SlicePoint, choice: str):
    """∇_b v_a for v = l, n, m as arrays indexed [b, a]."""
    h = _fd_step(p)
    gamma = christoffel(model, p)
    out = []
    for index in range(3):
        def lowered(q, index=index):
            comps = _tetrad_components(model, q, choice)[index]
            return metric_matrix(model, q.t, q.r, q.theta) @ comps

        partial = _coordinate_derivatives(lowered, p, h)
        v_lower = lowered(p)
        out.append(partial - np.einsum('cba,c->ba', gamma, v_lower))
    return out


def _finite_difference(model: MetricModel, p: SlicePoint, choice: str) -> dict:
    tetrad = tetrad_at(model, p, choice)
    l, n, m, mb = tetrad.l, tetrad.n, tetrad.m, tetrad.m_bar
    dl, dn, dm = _covariant_derivatives(model, p, choice)

    def c(x, y, dv):
        # x^a y^b ∇_b v_a
        return complex(np.einsum('a,b,ba->', x, y, dv))

    return {
        'kappa': c(m, l, dl), 'sigma': c(m, m, dl),
        'rho': c(m, mb, dl), 'tau': c(m, n, dl),
        'epsilon': 0.5 * (c(n, l, dl) - c(mb, l, dm)),
        'beta': 0.5 * (c(n, m, dl) - c(mb, m, dm)),
        'alpha': 0.5 * (c(n, mb, dl) - c(mb, mb, dm)),
        'gamma': 0.5 * (c(n, n, dl) - c(mb, n, dm)),
        'pi': -c(mb, l, dn), 'mu': -c(mb, m, dn),
        'lambda_c': -c(mb, mb, dn), 'nu': -c(mb, n, dn),
    }


def spin_coefficients(model: MetricModel, p: SlicePoint, choice: str = ADAPTED,
                      method: str = 'auto') -> SpinCoefficientSet:
    """
    The twelve NP coefficients at p. method='closed' uses the closed forms
    of the static spherical family, 'fd' covariant finite differences of
    the tetrad, 'auto' picks closed forms for Minkowski.
    """
    check_point(model, p)
    if p.r < ACCURACY_FLOOR * model.t_max:
        warnings.warn('spin coefficients at r = {:.3e} < {:.0e}·T lose '
                      'accuracy'.format(p.r, ACCURACY_FLOOR), AccuracyWarning)
    if choice == HATTED:
        raise ValueError('spin coefficients are defined for unit-normalized '
                         'tetrads only')
    if method == 'auto':
        method = 'closed' if model.is_minkowski else 'fd'
    if method == 'closed':
        values = _closed_form(model, p, choice)
    elif method == 'fd':
        values = _finite_difference(model, p, choice)
    else:
        raise ValueError('unknown method {!r}'.format(method))
    return SpinCoefficientSet(choice, p, **values)


def geodesic_residual(model: MetricModel, p: SlicePoint) -> float:
    """|ℒ^b ∇_b ℒ_a|, zero when the integral curves of ℒ = ∇u are geodesics."""
    check_point(model, p)
    dl, _, _ = _covariant_derivatives(model, p, GRADIENT_L)
    big_l = _tetrad_components(model, p, GRADIENT_L)[0]
    return float(np.max(np.abs(np.einsum('b,ba->a', big_l, dl))))


def divergence_gap(model: MetricModel, p: SlicePoint) -> float:
    """|ρ + ½ div ℒ| with the coordinate divergence (1/√|g|)∂_a(√|g| ℒ^a)."""
    h = _fd_step(p)

    def density(q):
        volume = sqrt(abs(np.linalg.det(metric_matrix(model, q.t, q.r, q.theta))))
        return volume * _tetrad_components(model, q, GRADIENT_L)[0]

    partial = _coordinate_derivatives(density, p, h)
    volume = sqrt(abs(np.linalg.det(metric_matrix(model, p.t, p.r, p.theta))))
    divergence = np.trace(partial) / volume
    rho = spin_coefficients(model, p, GRADIENT_L, method='fd').rho
    return float(abs(rho + 0.5 * divergence))


def gauss_curvature(model: MetricModel, r: float, h: float = 5e-3) -> float:
    """
    Gauss curvature of the section S_r from its induced metric
    E dθ² + G dφ²: K = −(1/√(EG)) ∂θ(∂θ√G / √E), evaluated at θ = π/2.
    """
    if not 0 < r <= model.r_max:
        raise DomainError('r = {} outside (0, r_max]'.format(r))
    areal = float(areal_radius(model, np.array([r]))[0])

    def sqrt_e(theta):
        return areal * np.ones_like(theta)

    def sqrt_g(theta):
        return areal * np.abs(np.sin(theta))

    def d_theta(func, theta):
        return (func(theta - 2 * h) - 8 * func(theta - h)
                + 8 * func(theta + h) - func(theta + 2 * h)) / (12 * h)

    def inner(theta):
        return d_theta(sqrt_g, theta) / sqrt_e(theta)

    theta = pi / 2
    return float(-d_theta(inner, theta) / (sqrt_e(theta) * sqrt_g(theta)))


def _vertex_frame(theta, phi):
    """Vertex limits (l, n, m) in Cartesian components, one row per direction."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    radial = np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi),
                       np.cos(theta)], axis=-1)
    e_theta = np.stack([np.cos(theta) * np.cos(phi),
                        np.cos(theta) * np.sin(phi), -np.sin(theta)], axis=-1)
    e_phi = np.stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)], axis=-1)
    one = np.ones(theta.shape + (1,))
    l = np.concatenate([one, radial], axis=-1) / sqrt(2)
    n = np.concatenate([one, -radial], axis=-1) / sqrt(2)
    m = np.concatenate([0 * one, e_theta + 1j * e_phi], axis=-1) / sqrt(2)
    return l, n, m


_MINKOWSKI_ETA = np.diag([1.0, -1.0, -1.0, -1.0])


def conjugate_structure(model: MetricModel, theta, phi) -> ConjugateStructure:
    """
    ω′ is the direction of the spatial part of n_ω at p₀ and θ(ω) is
    defined by m_{ω′} = e^{iθ(ω)} m̄_ω. φ′ is the representative nearest
    to φ + π, so that ω ↦ ω′ is an exact involution on the sample.

    The frame at p₀ is the Minkowski spherical frame for every model of the
    static spherically symmetric family (N(p₀) = √2, R ~ r), so the result
    depends on the model only through that membership: the map is
    antipodal and θ ≡ 0. Backgrounds outside the family would need the
    vertex limit of tetrad_at instead.
    """
    if not isinstance(model, MetricModel):
        raise TypeError('expected a MetricModel')
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    l, n, m = _vertex_frame(theta, phi)
    null_n = np.abs(np.einsum('...a,ab,...b->...', n, _MINKOWSKI_ETA, n))
    if np.any(null_n > 1e-12) or np.any(np.max(np.abs(l - n), axis=-1) < 1e-12):
        raise ModelError('degenerate vertex tetrad')

    direction = n[..., 1:] * sqrt(2)
    theta_c = np.arccos(np.clip(direction[..., 2], -1.0, 1.0))
    phi_c = np.arctan2(direction[..., 1], direction[..., 0])
    phi_c = phi_c + 2 * pi * np.round((phi + pi - phi_c) / (2 * pi))

    _, _, m_c = _vertex_frame(theta_c, phi_c)
    overlap = np.sum(m_c[..., 1:] * m[..., 1:], axis=-1)
    if np.any(np.abs(np.abs(overlap) - 1) > 1e-10):
        raise ModelError('m_ω′ is not a phase times m̄_ω')
    return ConjugateStructure(theta, phi, theta_c, phi_c, np.angle(overlap))
