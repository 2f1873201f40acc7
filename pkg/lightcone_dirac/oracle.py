"""
Exact Minkowski solutions of the Dirac equation, expressed in the spherical
NP spin frame and restricted to cones, tilted cones and slices.

A Dirac spinor is the pair (ψ_A, χ^{A′}) of Cartesian two-spinors. At the
direction ω = (θ, φ) the spherical dyad is

    o = (e^{iφ/2} sin(θ/2), −e^{−iφ/2} cos(θ/2)),
    ι = (e^{iφ/2} cos(θ/2),  e^{−iφ/2} sin(θ/2)),

and the four components are Ψ₁ = ψ·o, Ψ₂ = ψ·ι, Ψ₃ = χ·ῑ, Ψ₄ = −χ·ō, with
spin weights +½, −½, +½, −½.
"""
import abc
import logging
from dataclasses import dataclass, field
from math import pi, sqrt
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial
from scipy import special

from . import angular
from .constraints import NullDatum
from .exceptions import OracleError
from .geometry import MetricModel, SlicePoint

logger = logging.getLogger(__name__)

COMPONENT_SPINS = (1, -1, 1, -1)

ALIASING_TOLERANCE = 1e-10


class ExactSolution(abc.ABC):
    """Base class of the oracles: per-mode radial profiles of Ψ₁…Ψ₄."""
    mass = 0.0

    @property
    @abc.abstractmethod
    def content_cutoff(self) -> int:
        """Doubled l of the highest mode carrying content."""

    @abc.abstractmethod
    def mode_coefficients(self, t, r, two_l_max: int) -> np.ndarray:
        """Array (4, *shape(t, r), n_modes) of mode coefficients."""

    @abc.abstractmethod
    def mode_derivatives(self, t, r, two_l_max: int):
        """(∂ₜ, ∂ᵣ) of mode_coefficients."""

    def evaluate(self, t, r, theta, phi) -> np.ndarray:
        """
        Values on the tensor product of the nodes (t, r) (1-D, same length)
        and the directions (θ, φ): shape (4, n_nodes, *theta.shape).
        """
        two_l_max = max(self.content_cutoff, 1)
        coefficients = self.mode_coefficients(np.asarray(t, dtype=float),
                                              np.asarray(r, dtype=float),
                                              two_l_max)
        two_l, two_m = angular.mode_indices(1, two_l_max)
        out = []
        for component, two_s in enumerate(COMPONENT_SPINS):
            basis = np.stack([angular.spin_harmonic(two_s, l, m, theta, phi)
                              for l, m in zip(two_l, two_m)], axis=-1)
            out.append(np.tensordot(coefficients[component], basis,
                                    axes=([-1], [-1])))
        return np.stack(out, axis=0)

    def source_modes(self, t, r, two_l_max: int) -> Optional[np.ndarray]:
        """Ψ-level source Ξ; None for homogeneous solutions."""
        return None


def dyad(theta, phi):
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    half_p, half_m = np.exp(0.5j * phi), np.exp(-0.5j * phi)
    o = np.stack([half_p * np.sin(theta / 2), -half_m * np.cos(theta / 2)])
    iota = np.stack([half_p * np.cos(theta / 2), half_m * np.sin(theta / 2)])
    return o, iota


@dataclass(frozen=True)
class ConstantSpinor(ExactSolution):
    """Covariantly constant spinor (ψ₀, ψ₁, χ₀, χ₁); solves the massless system."""
    spinor: tuple = (1.0, 0.0, 0.0, 0.0)

    energy = 0.0

    def __post_init__(self):
        if len(self.spinor) != 4:
            raise OracleError('a Dirac spinor has 4 entries, got {}'
                              .format(len(self.spinor)))
        object.__setattr__(self, 'spinor',
                           tuple(complex(x) for x in self.spinor))

    @property
    def content_cutoff(self) -> int:
        return 1

    @property
    def density(self) -> float:
        return float(sum(abs(x) ** 2 for x in self.spinor))

    def _phase(self, t):
        return np.exp(-1j * self.energy * np.asarray(t, dtype=float))

    def l_half_modes(self) -> np.ndarray:
        """Coefficients of the (l=½, m=−½) and (l=½, m=½) modes per component."""
        psi0, psi1, chi0, chi1 = self.spinor
        root = sqrt(2 * pi)
        return root * np.array([[psi1, psi0], [psi1, psi0],
                                [-chi0, chi1], [-chi0, chi1]], dtype=complex)

    def mode_coefficients(self, t, r, two_l_max: int) -> np.ndarray:
        shape = np.broadcast(np.asarray(t), np.asarray(r)).shape
        n_modes = angular.mode_indices(1, two_l_max)[0].size
        out = np.zeros((4,) + shape + (n_modes,), dtype=complex)
        phase = np.broadcast_to(self._phase(t), shape)[..., np.newaxis]
        out[..., :2] = self.l_half_modes().reshape(
            (4,) + (1,) * len(shape) + (2,)) * phase
        return out

    def mode_derivatives(self, t, r, two_l_max: int):
        coefficients = self.mode_coefficients(t, r, two_l_max)
        return -1j * self.energy * coefficients, np.zeros_like(coefficients)

    def evaluate(self, t, r, theta, phi) -> np.ndarray:
        psi0, psi1, chi0, chi1 = self.spinor
        o, iota = dyad(theta, phi)
        psi = np.array([psi0, psi1])
        chi = np.array([chi0, chi1])
        angular_part = np.stack([
            np.tensordot(psi, o, axes=1),
            np.tensordot(psi, iota, axes=1),
            np.tensordot(chi, np.conj(iota), axes=1),
            -np.tensordot(chi, np.conj(o), axes=1),
        ])
        phase = self._phase(np.atleast_1d(t))
        return (angular_part[:, np.newaxis]
                * phase.reshape((1, -1) + (1,) * np.ndim(theta)))


@dataclass(frozen=True)
class PlaneWave(ConstantSpinor):
    """
    Plane wave with 4-momentum p = (E, 0, 0, 0) and E = ±m. Moving plane
    waves are not represented in the spherical basis and are rejected.
    """
    mass: float = 0.0
    momentum: tuple = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        super().__post_init__()
        energy, *spatial = (float(p) for p in self.momentum)
        if len(spatial) != 3:
            raise OracleError('4-momentum has 4 entries')
        if any(abs(p) > 0 for p in spatial):
            raise OracleError('only rest-frame plane waves are supported')
        if self.mass < 0:
            raise OracleError('mass must be non-negative')
        if abs(energy ** 2 - self.mass ** 2) > 1e-12 * max(1.0, self.mass ** 2):
            raise OracleError('p·p = {} differs from m² = {}'
                              .format(energy ** 2, self.mass ** 2))
        if self.mass > 0:
            psi0, psi1, chi0, chi1 = self.spinor
            factor = -1j * energy / self.mass
            residual = max(abs(chi1 - factor * psi0), abs(-chi0 - factor * psi1))
            if residual > 1e-12 * max(1.0, sqrt(self.density)):
                raise OracleError('amplitude violates the on-shell Dirac '
                                  'relation (residual {:.3e})'.format(residual))

    @property
    def energy(self) -> float:
        return float(self.momentum[0])

    @classmethod
    def at_rest(cls, mass: float, psi: Sequence[complex],
                sign: int = 1) -> 'PlaneWave':
        """Rest-frame wave with E = sign·m and χ fixed by the Dirac relation."""
        energy = sign * mass
        psi0, psi1 = (complex(x) for x in psi)
        if mass == 0:
            chi = (0.0, 0.0)
        else:
            factor = -1j * energy / mass
            chi = (-factor * psi1, factor * psi0)
        return cls((psi0, psi1) + tuple(chi), mass, (energy, 0.0, 0.0, 0.0))


@dataclass(frozen=True)
class SphericalWave(ExactSolution):
    """
    Single-mode standing wave of energy E > m ≥ 0 in the (l, m) mode. With
    k = l + ½, κ = √(E² − m²), η = √((E − m)/(E + m)),
    P = i j_{k−1}(κr) and Q = η j_k(κr), the components are
    ((P+Q)/2, (P−Q)/2, −i(P−Q)/2, −i(P+Q)/2)·A·e^{−iEt}.
    """
    energy: float = 1.0
    mass: float = 0.0
    two_l: int = 1
    two_m: int = 1
    amplitude: complex = 1.0

    def __post_init__(self):
        if not self.energy > self.mass >= 0:
            raise OracleError('spherical waves need E > m ≥ 0, got E = {}, '
                              'm = {}'.format(self.energy, self.mass))
        if self.two_l < 1 or self.two_l % 2 == 0 or abs(self.two_m) > self.two_l \
                or (self.two_l - self.two_m) % 2:
            raise OracleError('invalid mode (2l, 2m) = ({}, {})'
                              .format(self.two_l, self.two_m))

    @property
    def content_cutoff(self) -> int:
        return self.two_l

    @property
    def k(self) -> int:
        return (self.two_l + 1) // 2

    @property
    def kappa(self) -> float:
        return sqrt(self.energy ** 2 - self.mass ** 2)

    @property
    def eta(self) -> float:
        return sqrt((self.energy - self.mass) / (self.energy + self.mass))

    def _profiles(self, r, derivative=False):
        x = self.kappa * np.asarray(r, dtype=float)
        scale = self.kappa if derivative else 1.0
        p = 1j * scale * special.spherical_jn(self.k - 1, x, derivative)
        q = self.eta * scale * special.spherical_jn(self.k, x, derivative)
        return np.stack([(p + q) / 2, (p - q) / 2,
                         -0.5j * (p - q), -0.5j * (p + q)])

    def _place(self, values, t, two_l_max):
        if self.two_l > two_l_max:
            raise OracleError('mode l = {}/2 beyond cutoff {}/2'
                              .format(self.two_l, two_l_max))
        position = angular.mode_position(1, two_l_max, self.two_l, self.two_m)
        n_modes = angular.mode_indices(1, two_l_max)[0].size
        phase = np.exp(-1j * self.energy * np.asarray(t, dtype=float))
        values = values * phase * self.amplitude
        out = np.zeros(values.shape + (n_modes,), dtype=complex)
        out[..., position] = values
        return out

    def mode_coefficients(self, t, r, two_l_max: int) -> np.ndarray:
        t, r = np.broadcast_arrays(np.asarray(t, float), np.asarray(r, float))
        return self._place(self._profiles(r), t, two_l_max)

    def mode_derivatives(self, t, r, two_l_max: int):
        t, r = np.broadcast_arrays(np.asarray(t, float), np.asarray(r, float))
        values = self.mode_coefficients(t, r, two_l_max)
        radial = self._place(self._profiles(r, derivative=True), t, two_l_max)
        return -1j * self.energy * values, radial


@dataclass(frozen=True)
class ManufacturedSolution(ExactSolution):
    """
    Ψ* = a(t)·S for an exact homogeneous solution S; it solves the Dirac
    equation with source Ξ = a′(t)·S. `profile` lists the coefficients of
    the polynomial a(t).
    """
    base: ExactSolution = field(default_factory=ConstantSpinor)
    profile: tuple = (1.0, 1.0)

    @property
    def mass(self) -> float:
        return self.base.mass

    @property
    def content_cutoff(self) -> int:
        return self.base.content_cutoff

    def _a(self, t, order=0) -> np.ndarray:
        coefficients = np.asarray(self.profile, dtype=float)
        if order:
            coefficients = polynomial.polyder(coefficients, order)
        return polynomial.polyval(np.asarray(t, dtype=float), coefficients)

    def _scaled(self, factor, values):
        factor = np.broadcast_to(factor, values.shape[1:-1])
        return values * factor[np.newaxis, ..., np.newaxis]

    def mode_coefficients(self, t, r, two_l_max: int) -> np.ndarray:
        t, r = np.broadcast_arrays(np.asarray(t, float), np.asarray(r, float))
        return self._scaled(self._a(t),
                            self.base.mode_coefficients(t, r, two_l_max))

    def mode_derivatives(self, t, r, two_l_max: int):
        t, r = np.broadcast_arrays(np.asarray(t, float), np.asarray(r, float))
        values = self.base.mode_coefficients(t, r, two_l_max)
        d_t, d_r = self.base.mode_derivatives(t, r, two_l_max)
        return (self._scaled(self._a(t, 1), values)
                + self._scaled(self._a(t), d_t), self._scaled(self._a(t), d_r))

    def source_modes(self, t, r, two_l_max: int) -> np.ndarray:
        t, r = np.broadcast_arrays(np.asarray(t, float), np.asarray(r, float))
        return self._scaled(self._a(t, 1),
                            self.base.mode_coefficients(t, r, two_l_max))

    def evaluate(self, t, r, theta, phi) -> np.ndarray:
        values = self.base.evaluate(t, r, theta, phi)
        a = self._a(np.atleast_1d(t))
        return values * a.reshape((1, -1) + (1,) * np.ndim(theta))


ORACLES = {
    'constant_spinor': ConstantSpinor,
    'plane_wave': PlaneWave,
    'spherical_wave': SphericalWave,
}


def build_oracle(kind: str, **params) -> ExactSolution:
    """Oracle from a config section; 'manufactured' wraps a `base` section."""
    if kind == 'manufactured':
        base = dict(params.get('base', {'kind': 'constant_spinor'}))
        return ManufacturedSolution(build_oracle(base.pop('kind'), **base),
                                    tuple(params.get('profile', (1.0, 1.0))))
    if kind == 'plane_wave' and 'psi' in params:
        return PlaneWave.at_rest(params.get('mass', 0.0), params['psi'],
                                 params.get('sign', 1))
    try:
        cls = ORACLES[kind]
    except KeyError:
        raise OracleError('unknown oracle kind {!r}'.format(kind))
    if 'spinor' in params:
        params = dict(params, spinor=tuple(_complex(x) for x in params['spinor']))
    if 'amplitude' in params:
        params = dict(params, amplitude=_complex(params['amplitude']))
    if 'momentum' in params:
        params = dict(params, momentum=tuple(params['momentum']))
    return cls(**params)


def _complex(value):
    if isinstance(value, (list, tuple)):
        return complex(*value)
    return complex(value)


def evaluate_np(sol: ExactSolution, p: SlicePoint,
                model: Optional[MetricModel] = None) -> np.ndarray:
    """(Ψ₁, Ψ₂, Ψ₃, Ψ₄) at a point, in the standard spherical frame."""
    if model is not None and not model.is_minkowski:
        raise OracleError('exact solutions exist for the Minkowski model only')
    values = sol.evaluate(np.array([p.t]), np.array([p.r]),
                          np.array(p.theta), np.array(p.phi))
    return values[:, 0]


@dataclass(frozen=True)
class ConeRestriction:
    datum: NullDatum
    psi2: angular.SpectralField
    psi3: angular.SpectralField
    opening: float


def restrict_to_cone(sol: ExactSolution, lam: float, t_max: float, n_v: int,
                     l_max=angular.DEFAULT_TWO_L_MAX / 2,
                     v_max: Optional[float] = None,
                     model: Optional[MetricModel] = None) -> ConeRestriction:
    """
    Samples the solution on {t = λr} at r = v/2, v ∈ [0, v_max] (default
    2T) and projects each component by quadrature.
    """
    if not 0 < lam <= 1:
        raise OracleError('opening λ must lie in (0, 1], got {}'.format(lam))
    if model is not None and not model.is_minkowski:
        raise OracleError('exact solutions exist for the Minkowski model only')
    v_max = 2 * t_max if v_max is None else v_max
    v = np.linspace(0.0, v_max, n_v + 1)
    r = v / 2
    two_l_max = angular.doubled(l_max)
    wide = max(two_l_max, sol.content_cutoff) + 4
    quadrature = angular.SphereQuadrature.for_cutoff(wide)
    theta, phi, _ = quadrature.grid
    samples = sol.evaluate(lam * r, r, theta, phi)

    fields = []
    for component, two_s in enumerate(COMPONENT_SPINS):
        full = angular.project(samples[component], two_s / 2, wide / 2,
                               quadrature)
        kept = angular.truncate(full, two_l_max)
        total = np.sum(np.abs(full.coefficients) ** 2)
        lost = total - np.sum(np.abs(kept.coefficients) ** 2)
        if total > 0 and lost > ALIASING_TOLERANCE * total:
            logger.warning('component %d has %.3e of its content beyond '
                           'l_max = %s', component + 1, lost / total, l_max)
        fields.append(kept)
    datum = NullDatum(v, fields[0], fields[3], mass=sol.mass)
    return ConeRestriction(datum, fields[1], fields[2], lam)


def slice_state(sol: ExactSolution, t: float, r_grid,
                l_max=angular.DEFAULT_TWO_L_MAX / 2,
                model: Optional[MetricModel] = None):
    """Exact Σ_t state from the analytic mode coefficients."""
    from .evolution import SliceState
    if model is not None and not model.is_minkowski:
        raise OracleError('exact solutions exist for the Minkowski model only')
    r_grid = np.asarray(r_grid, dtype=float)
    two_l_max = angular.doubled(l_max)
    modes = sol.mode_coefficients(np.full_like(r_grid, t), r_grid, two_l_max)
    return SliceState(float(t), r_grid, modes, two_l_max)


def source_function(sol: ExactSolution, l_max) -> Optional[Callable]:
    """Ψ-level source Ξ(t, r) as a callable for source_evolve, or None."""
    two_l_max = angular.doubled(l_max)
    if sol.source_modes(0.0, np.zeros(1), max(two_l_max, sol.content_cutoff)) is None:
        return None

    def source(t, r):
        return sol.source_modes(np.full_like(r, t), r, two_l_max)

    return source
