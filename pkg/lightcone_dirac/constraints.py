"""
The constraint operator K on the cone C⁺₀ = {t = r}.

Given the transverse components (Ψ₁, Ψ₄) on v ∈ [0, v_max], the hatted
fields φ̂ = rΨ₂ and χ̂ = rΨ₃ (r = v/2) satisfy regular linear transport
equations along the generators,

    ∂ᵥφ̂ = (b + ½iqΦₜ) φ̂ + ½(r/R)√F (kΨ₁ + mRΨ₄),
    ∂ᵥχ̂ = (b + ½iqΦₜ) χ̂ + ½(r/R)√F (kΨ₄ − mRΨ₁),

with k = l + ½ per mode and the regularized bracket
b = ½(1/r − R′/R − F′/(4F)). The only bounded solution has φ̂(0) = χ̂(0) = 0.
The right-hand side is regular at v = 0, so the integration starts at the
vertex node without a special first step.
"""
import logging
from dataclasses import dataclass, field
from math import sqrt
from typing import Optional, Tuple

import numpy as np

from . import angular, geometry, stencils
from .angular import SpectralField
from .exceptions import DomainError, NonIntegrableError

logger = logging.getLogger(__name__)

TAGS = ('n', 'l', 'm', 'mbar')

# |r·b(r)| above this at r = 1e-4·T means the bracket has no finite limit
INTEGRABILITY_TOLERANCE = 1e-5


@dataclass(frozen=True)
class Potential:
    """Φ = Φₜ(t, r) dt with Φₜ = Σ c[i][j] tⁱ r²ʲ."""
    coefficients: tuple = ((0.0,),)

    @property
    def is_zero(self) -> bool:
        return not np.any(np.asarray(self.coefficients, dtype=float))

    @property
    def is_static(self) -> bool:
        c = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        return not np.any(c[1:])

    def value(self, t, r) -> np.ndarray:
        c = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        return np.polynomial.polynomial.polyval2d(
            np.asarray(t, dtype=float), np.square(np.asarray(r, dtype=float)), c)


ZERO_POTENTIAL = Potential()


def mode_k(two_l_max: int) -> np.ndarray:
    """k = l + ½ for every mode of the spin-±½ ordering."""
    two_l, _ = angular.mode_indices(1, two_l_max)
    return (two_l + 1) / 2.0


@dataclass(frozen=True)
class NullDatum:
    """Goursat data (Ψ₁, Ψ₄) on the uniform v-grid of the cone."""
    v: np.ndarray
    psi1: SpectralField
    psi4: SpectralField
    mass: float = 0.0
    charge: float = 0.0
    potential: Potential = field(default=ZERO_POTENTIAL)

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        object.__setattr__(self, 'v', v)
        if v.ndim != 1 or v.size < 5 or v[0] != 0.0:
            raise ValueError('the v-grid must start at the vertex and have at '
                             'least 5 nodes')
        steps = np.diff(v)
        if np.any(np.abs(steps - steps[0]) > 1e-12 * v[-1]):
            raise ValueError('the v-grid must be uniform')
        if (self.psi1.two_s, self.psi4.two_s) != (1, -1):
            raise ValueError('Ψ₁ has spin +½ and Ψ₄ spin −½')
        if self.psi1.two_l_max != self.psi4.two_l_max:
            raise ValueError('Ψ₁ and Ψ₄ must share l_max')
        for name, f in (('Ψ₁', self.psi1), ('Ψ₄', self.psi4)):
            if f.grid_shape != v.shape:
                raise ValueError('{} sampled on {} nodes, grid has {}'
                                 .format(name, f.grid_shape, v.size))

    @property
    def h(self) -> float:
        return float(self.v[1] - self.v[0])

    @property
    def two_l_max(self) -> int:
        return self.psi1.two_l_max

    @property
    def v_max(self) -> float:
        return float(self.v[-1])

    def scaled(self, factor) -> 'NullDatum':
        return NullDatum(self.v, self.psi1 * factor, self.psi4 * factor,
                         self.mass, self.charge, self.potential)

    def __add__(self, other: 'NullDatum') -> 'NullDatum':
        if not np.array_equal(self.v, other.v):
            raise ValueError('grid mismatch')
        return NullDatum(self.v, self.psi1 + other.psi1,
                         self.psi4 + other.psi4, self.mass, self.charge,
                         self.potential)


def zero_datum(t_max: float, n_v: int, l_max=angular.DEFAULT_TWO_L_MAX / 2,
               mass: float = 0.0) -> NullDatum:
    v = np.linspace(0.0, 2 * t_max, n_v + 1)
    return NullDatum(v, angular.zero_field(0.5, l_max, v.shape),
                     angular.zero_field(-0.5, l_max, v.shape), mass)


@dataclass(frozen=True)
class ConeSolution:
    v: np.ndarray
    psi1: SpectralField
    psi2: SpectralField
    psi3: SpectralField
    psi4: SpectralField
    phi_hat: SpectralField
    chi_hat: SpectralField
    vertex_psi2: SpectralField
    vertex_psi3: SpectralField

    @property
    def components(self) -> Tuple[SpectralField, ...]:
        return self.psi1, self.psi2, self.psi3, self.psi4


def check_integrable(model: geometry.MetricModel):
    r_small = 1e-4 * model.t_max
    value = geometry.regularized_bracket(model, np.array([r_small]))[0]
    if not np.isfinite(value) or abs(r_small * value) > INTEGRABILITY_TOLERANCE:
        raise NonIntegrableError(
            'the regularized bracket ∇_ℒr/r + ρ̂ has no finite vertex limit '
            '(r·b = {:.3e} at r = {:.1e})'.format(r_small * value, r_small))


def _transport_coefficients(model, d: NullDatum, v: np.ndarray):
    """Bracket, geometric source factor ½(r/R)√F and R along the cone."""
    r = v / 2
    if np.any(r > model.r_max):
        raise DomainError('cone extends beyond r_max = {}'.format(model.r_max))
    profile = geometry.radial_profile(model, r)
    ratio = np.where(r > 0, r / np.where(r > 0, profile.areal, 1.0),
                     1.0 / profile.d_areal)
    bracket = geometry.regularized_bracket(model, r)
    if d.charge:
        bracket = bracket + 0.5j * d.charge * d.potential.value(r, r)
    return bracket, 0.5 * ratio * np.sqrt(profile.f), profile.areal


def solve_constraints(d: NullDatum, model: geometry.MetricModel,
                      vertex_points: int = 5) -> ConeSolution:
    """Integrates the hatted transport system from the vertex (RK4 in v)."""
    check_integrable(model)
    v, h = d.v, d.h
    k = mode_k(d.two_l_max)
    psi1, psi4 = d.psi1.coefficients, d.psi4.coefficients
    midpoints = v[:-1] + h / 2
    psi1_mid = stencils.interpolate(v, psi1, midpoints)
    psi4_mid = stencils.interpolate(v, psi4, midpoints)

    bracket, factor, areal = _transport_coefficients(model, d, v)
    bracket_mid, factor_mid, areal_mid = _transport_coefficients(
        model, d, midpoints)

    def sources(p1, p4, fac, big_r):
        fac = np.asarray(fac)[..., np.newaxis]
        big_r = np.asarray(big_r)[..., np.newaxis]
        return (fac * (k * p1 + d.mass * big_r * p4),
                fac * (k * p4 - d.mass * big_r * p1))

    s_phi, s_chi = sources(psi1, psi4, factor, areal)
    s_phi_mid, s_chi_mid = sources(psi1_mid, psi4_mid, factor_mid, areal_mid)

    n_modes = k.size
    phi_hat = np.zeros((v.size, n_modes), dtype=complex)
    chi_hat = np.zeros((v.size, n_modes), dtype=complex)
    for hat, source, source_mid in ((phi_hat, s_phi, s_phi_mid),
                                    (chi_hat, s_chi, s_chi_mid)):
        for n in range(v.size - 1):
            y = hat[n]
            k1 = bracket[n] * y + source[n]
            k2 = bracket_mid[n] * (y + h / 2 * k1) + source_mid[n]
            k3 = bracket_mid[n] * (y + h / 2 * k2) + source_mid[n]
            k4 = bracket[n + 1] * (y + h * k3) + source[n + 1]
            hat[n + 1] = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    two_l_max = d.two_l_max
    phi_field = SpectralField(-1, two_l_max, phi_hat)
    chi_field = SpectralField(1, two_l_max, chi_hat)
    vertex_psi2 = SpectralField(-1, two_l_max, 2 * stencils.vertex_derivative(
        phi_hat, h, vertex_points, axis=0))
    vertex_psi3 = SpectralField(1, two_l_max, 2 * stencils.vertex_derivative(
        chi_hat, h, vertex_points, axis=0))

    r = v[1:, np.newaxis] / 2
    psi2 = np.concatenate([vertex_psi2.coefficients[np.newaxis],
                           phi_hat[1:] / r])
    psi3 = np.concatenate([vertex_psi3.coefficients[np.newaxis],
                           chi_hat[1:] / r])
    return ConeSolution(v, d.psi1, SpectralField(-1, two_l_max, psi2),
                        SpectralField(1, two_l_max, psi3), d.psi4,
                        phi_field, chi_field, vertex_psi2, vertex_psi3)


def vertex_limits(sol: ConeSolution, points: int = 3):
    """(Ψ₂(0, ·), Ψ₃(0, ·)) as 2∂ᵥ of the hatted fields at the vertex."""
    h = float(sol.v[1] - sol.v[0])
    two_l_max = sol.phi_hat.two_l_max
    return (SpectralField(-1, two_l_max, 2 * stencils.vertex_derivative(
                sol.phi_hat.coefficients, h, points, axis=0)),
            SpectralField(1, two_l_max, 2 * stencils.vertex_derivative(
                sol.chi_hat.coefficients, h, points, axis=0)))


def matching_residual(d: NullDatum, sol: ConeSolution,
                      cs: Optional[geometry.ConjugateStructure] = None,
                      model: Optional[geometry.MetricModel] = None) -> float:
    """
    max over sampled ω of |Ψ₂(0,ω) + σie^{−iθ(ω′)/2}Ψ₁(0,ω′)|
    + |Ψ₃(0,ω) + σie^{iθ(ω′)/2}Ψ₄(0,ω′)|, minimized over the dyad sign σ.
    Without a structure the directions are the quadrature nodes for l_max.
    """
    if cs is None:
        if model is None:
            raise ValueError('pass a conjugate structure or a model')
        theta, phi, _ = angular.SphereQuadrature.for_cutoff(d.two_l_max).grid
        cs = geometry.conjugate_structure(model, theta.ravel(), phi.ravel())
    if model is not None:
        phase = geometry.conjugate_structure(model, cs.theta_conjugate,
                                             cs.phi_conjugate).phase
    else:
        phase = cs.phase
    psi1_c = angular.evaluate_at(d.psi1.node(0), cs.theta_conjugate,
                                 cs.phi_conjugate)
    psi4_c = angular.evaluate_at(d.psi4.node(0), cs.theta_conjugate,
                                 cs.phi_conjugate)
    psi2 = angular.evaluate_at(sol.vertex_psi2, cs.theta, cs.phi)
    psi3 = angular.evaluate_at(sol.vertex_psi3, cs.theta, cs.phi)
    residuals = []
    for sign in (1, -1):
        gap = (np.abs(psi2 + sign * 1j * np.exp(-0.5j * phase) * psi1_c)
               + np.abs(psi3 + sign * 1j * np.exp(0.5j * phase) * psi4_c))
        residuals.append(float(np.max(gap)))
    return min(residuals)


def _cone_range(v: np.ndarray, t_max: Optional[float]) -> int:
    """Number of nodes with v ≤ 2T; 2T must be a node."""
    if t_max is None:
        return v.size
    stop = int(np.searchsorted(v, 2 * t_max - 1e-12 * max(1.0, v[-1])))
    if stop >= v.size or abs(v[stop] - 2 * t_max) > 1e-12 * max(1.0, v[-1]):
        raise DomainError('v = 2T = {} is not a node of the grid'
                          .format(2 * t_max))
    return stop + 1


def _weighted_integral(model, v, densities, t_max):
    """∫ (N/2) Σ densities dv over [0, 2T] (densities already carry R²)."""
    stop = _cone_range(v, t_max)
    v = v[:stop]
    lapse = geometry.radial_profile(model, v / 2).lapse
    total = sum(np.sum(np.abs(x[:stop]) ** 2, axis=-1) for x in densities)
    return float(stencils.simpson(0.5 * lapse * total, v))


def cone_flux(d: NullDatum, model: geometry.MetricModel,
              t_max: Optional[float] = None) -> float:
    """∫(|Ψ₁|² + |Ψ₄|²) dσ with dσ = (N/2)R² dv dΩ, Parseval in angle."""
    areal = geometry.areal_radius(model, d.v / 2)[:, np.newaxis]
    return _weighted_integral(model, d.v, (areal * d.psi1.coefficients,
                                           areal * d.psi4.coefficients), t_max)


def _weighted_operator(tag: str, d: NullDatum, sol: ConeSolution, model):
    """R·L_tag(Ψ₁, Ψ₄): regular at the vertex."""
    v = d.v
    r = v / 2
    profile = geometry.radial_profile(model, r)
    a = 1.0 / profile.lapse
    big_r = profile.areal[:, np.newaxis]
    a_col = a[:, np.newaxis]
    # spin ±3/2 results need l ≥ 3/2 modes
    cutoff = max(d.two_l_max, 3)
    psi1, psi2, psi3, psi4 = (angular.truncate(f, cutoff)
                              for f in sol.components)
    root2 = sqrt(2)

    if tag == 'l':
        epsilon = (a * profile.d_f / (4 * profile.f))[:, np.newaxis]

        def along(f):
            derivative = stencils.derivative(f.coefficients, d.h, axis=0)
            return SpectralField(f.two_s, f.two_l_max, big_r * (
                2 * a_col * derivative - epsilon * f.coefficients))
        return along(psi1), along(psi4)
    if tag == 'm':
        first = -angular.eth_raise(psi1) * (1 / root2)
        second = (-angular.eth_raise(psi4) * (1 / root2)
                  + psi3.scale(a * profile.d_areal))
        return first, second
    if tag == 'mbar':
        first = (-angular.eth_lower(psi1) * (1 / root2)
                 - psi2.scale(a * profile.d_areal))
        second = -angular.eth_lower(psi4) * (1 / root2)
        return first, second
    if tag == 'n':
        potential = 1j * d.charge * d.potential.value(r, r)
        radial = (potential * a * profile.areal + a * profile.d_areal)
        mass = d.mass / root2
        first = (psi1.scale(radial) - angular.eth_raise(psi2) * (1 / root2)
                 + psi3.scale(mass * profile.areal))
        second = (psi4.scale(radial) - psi2.scale(mass * profile.areal)
                  + angular.eth_lower(psi3) * (1 / root2))
        return first, second
    raise ValueError('unknown tag {!r}; expected one of {}'.format(tag, TAGS))


def apply_L(tag: str, d: NullDatum, sol: ConeSolution,
            model: geometry.MetricModel):
    """
    Tangential operators L_n, L_l, L_m, L_m̄ on the cone, in the adapted
    tetrad. Values at the vertex node are extrapolated from the four
    nearest nodes.
    """
    if not np.array_equal(d.v, sol.v):
        raise ValueError('datum and cone solution live on different grids')
    weighted = _weighted_operator(tag, d, sol, model)
    areal = geometry.areal_radius(model, d.v[1:] / 2)[:, np.newaxis]
    out = []
    for f in weighted:
        values = np.empty_like(f.coefficients)
        values[1:] = f.coefficients[1:] / areal
        values[0] = (4 * values[1] - 6 * values[2] + 4 * values[3] - values[4])
        out.append(SpectralField(f.two_s, f.two_l_max, values))
    return tuple(out)


def h_cone_norm(d: NullDatum, model: geometry.MetricModel,
                t_max: Optional[float] = None,
                sol: Optional[ConeSolution] = None) -> float:
    """√(‖(Ψ₁, Ψ₄)‖² + Σ_α ‖L_α(Ψ₁, Ψ₄)‖²) in L²(C⁺₀, dσ)."""
    sol = solve_constraints(d, model) if sol is None else sol
    total = cone_flux(d, model, t_max)
    for tag in TAGS:
        first, second = _weighted_operator(tag, d, sol, model)
        total += _weighted_integral(model, d.v, (first.coefficients,
                                                 second.coefficients), t_max)
    return sqrt(total)


def solution_to_dict(sol: ConeSolution) -> dict:
    """JSON layout of a cone solution: grid, modes, per-component arrays."""
    two_l, two_m = angular.mode_indices(1, sol.psi1.two_l_max)

    def split(f: SpectralField):
        return {'re': f.coefficients.real, 'im': f.coefficients.imag}

    return {
        'v': sol.v,
        'modes': [[int(l), int(m)] for l, m in zip(two_l, two_m)],
        'psi1': split(sol.psi1), 'psi2': split(sol.psi2),
        'psi3': split(sol.psi3), 'psi4': split(sol.psi4),
        'vertex': {'psi2': angular.field_to_modes(sol.vertex_psi2),
                   'psi3': angular.field_to_modes(sol.vertex_psi3)},
    }


def generator_profiles(sol: ConeSolution, theta: float, phi: float) -> list:
    """Rows (v, |Ψ₁|, |Ψ₂|, |Ψ₃|, |Ψ₄|) along the generator of direction ω."""
    values = [np.abs(angular.evaluate_at(f, theta, phi))
              for f in sol.components]
    return [[float(v)] + [float(x[i]) for x in values]
            for i, v in enumerate(sol.v)]
