"""
Evolution of the Dirac field off the cone.

Each angular mode of the rescaled components U = wΨ, w = R·F^{1/4},
obeys ∂ₜU = γ∂ᵣU + B(t, r)U with γ = diag(1, −1, −1, 1):

    ∂ₜU₁ =  ∂ᵣU₁ − (k/ρ̃)U₂ + MU₃ + iqΦₜU₁
    ∂ₜU₂ = −∂ᵣU₂ + (k/ρ̃)U₁ + MU₄ + iqΦₜU₂
    ∂ₜU₃ = −∂ᵣU₃ + (k/ρ̃)U₄ − MU₁ + iqΦₜU₃
    ∂ₜU₄ =  ∂ᵣU₄ − (k/ρ̃)U₃ − MU₂ + iqΦₜU₄

with k = l + ½, ρ̃ = R/√F and M = m√F. U vanishes at r = 0 and the ghost
values across the centre follow from the parity of the mode,
U₁(−r) = σU₂(r), U₃(−r) = σU₄(r) with σ = (−1)^k.

Spatial slices are advanced with upwind-biased fourth-order stencils and
classical RK4. The Goursat problem is approximated by Cauchy problems
with data on the λ-cones {t = λr}, extrapolated to λ → 1.
"""
import copy
import logging
from dataclasses import dataclass, field
from math import ceil, factorial, log
from typing import Callable, Dict, List, Optional

import numpy as np

from . import angular, constraints, geometry, stencils
from .angular import SpectralField
from .constraints import NullDatum, Potential, ZERO_POTENTIAL
from .exceptions import (CFLViolation, ConstraintViolation, DomainError,
                         ExtensionError, ExtrapolationError)

logger = logging.getLogger(__name__)

GAMMA = np.array([1.0, -1.0, -1.0, 1.0])
COMPONENT_SPINS = tuple(angular.doubled(w.spin)
                        for w in geometry.COMPONENT_WEIGHTS)
EXTENSIONS = ('blend', 'hold')
TAYLOR_BAND = 8

# cubic extrapolation one, two and three nodes past the last node
_EXTRAPOLATION = (np.array([4.0, -6.0, 4.0, -1.0]),
                  np.array([10.0, -20.0, 15.0, -4.0]),
                  np.array([20.0, -45.0, 36.0, -10.0]))

Source = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class EvolutionConfig:
    mass: float = 0.0
    charge: float = 0.0
    potential: Potential = field(default=ZERO_POTENTIAL)
    lambdas: tuple = (0.8, 0.9)
    n_r: int = 64
    l_max: float = 0.5
    t_final: float = 1.0
    cfl: float = 0.8
    taylor_order: int = 4
    extension: str = 'blend'
    extension_fraction: float = 0.1
    max_opening: float = 0.5
    order_tolerance: float = 0.5
    constraint_tolerance: float = 1e-3
    strict_constraints: bool = False
    record_history: bool = False

    def __post_init__(self):
        if self.n_r < 8 or self.n_r % 2:
            raise ValueError('n_r must be even and at least 8, got {}'
                             .format(self.n_r))
        if self.extension not in EXTENSIONS:
            raise ValueError('unknown extension rule {!r}; expected one of {}'
                             .format(self.extension, EXTENSIONS))
        if not 0 < self.extension_fraction <= 1:
            raise ValueError('extension_fraction must lie in (0, 1]')
        if self.taylor_order < 1:
            raise ValueError('taylor_order must be at least 1')
        if not self.order_tolerance > 0:
            raise ValueError('order_tolerance must be positive')
        if not self.t_final > 0:
            raise ValueError('t_final must be positive')
        angular.doubled(self.l_max)

    @property
    def two_l_max(self) -> int:
        return angular.doubled(self.l_max)

    @property
    def k_max(self) -> float:
        return (self.two_l_max + 1) / 2

    def max_step(self, h: float) -> float:
        return self.cfl * 2 * h / (1 + self.k_max)


@dataclass(frozen=True)
class SliceState:
    """Ψ₁…Ψ₄ on {t = const}: modes has shape (4, n_r + 1, n_modes)."""
    t: float
    r: np.ndarray
    modes: np.ndarray
    two_l_max: int

    def __post_init__(self):
        modes = np.asarray(self.modes, dtype=complex)
        n_modes = angular.mode_indices(1, self.two_l_max)[0].size
        if modes.shape != (4, np.size(self.r), n_modes):
            raise ValueError('modes of shape {} do not match {} radial nodes '
                             'and {} angular modes'.format(
                                 modes.shape, np.size(self.r), n_modes))
        object.__setattr__(self, 'modes', modes)
        object.__setattr__(self, 'r', np.asarray(self.r, dtype=float))

    @property
    def h(self) -> float:
        return float(self.r[1] - self.r[0])

    def component(self, index: int) -> SpectralField:
        return SpectralField(COMPONENT_SPINS[index], self.two_l_max,
                             self.modes[index])

    def scaled(self, factor) -> 'SliceState':
        return SliceState(self.t, self.r, self.modes * factor, self.two_l_max)

    def restricted(self, n_nodes: int) -> 'SliceState':
        return SliceState(self.t, self.r[:n_nodes], self.modes[:, :n_nodes],
                          self.two_l_max)

    def max_difference(self, other: 'SliceState',
                       radius: Optional[float] = None) -> float:
        stop = self.r.size if radius is None else int(
            np.searchsorted(self.r, radius * (1 + 1e-12), side='right'))
        return float(np.max(np.abs(self.modes[:, :stop]
                                   - other.modes[:, :stop])))

    def to_dict(self) -> dict:
        two_l, two_m = angular.mode_indices(1, self.two_l_max)
        return {
            't': self.t, 'r': self.r,
            'modes': [[int(l), int(m)] for l, m in zip(two_l, two_m)],
            'components': [{'re': self.modes[i].real, 'im': self.modes[i].imag}
                           for i in range(4)],
        }


class RadialOperator:
    """The per-mode U-system on a uniform radial grid starting at r = 0."""

    def __init__(self, model: geometry.MetricModel, r: np.ndarray,
                 two_l_max: int, mass: float = 0.0, charge: float = 0.0,
                 potential: Potential = ZERO_POTENTIAL):
        self.r = np.asarray(r, dtype=float)
        self.h = float(self.r[1] - self.r[0])
        self.two_l_max = two_l_max
        self.charge = charge
        self.potential = potential
        profile = geometry.radial_profile(model, self.r)
        self.weight = profile.areal * profile.f ** 0.25
        self.k = constraints.mode_k(two_l_max)
        inverse_rho = np.zeros_like(self.r)
        inverse_rho[1:] = np.sqrt(profile.f[1:]) / profile.areal[1:]
        # (n_modes, n_r)
        self.coupling = self.k[:, np.newaxis] * inverse_rho[np.newaxis, :]
        self.mass_term = mass * np.sqrt(profile.f)
        self.sigma = np.where(self.k.astype(int) % 2, -1.0, 1.0)[:, np.newaxis]

    def restricted(self, n_nodes: int) -> 'RadialOperator':
        """The operator on the first n_nodes nodes; the last one is the grid end."""
        op = copy.copy(self)
        op.r = self.r[:n_nodes]
        op.weight = self.weight[:n_nodes]
        op.coupling = self.coupling[:, :n_nodes]
        op.mass_term = self.mass_term[:n_nodes]
        return op

    def _phase(self, t: float):
        if self.charge == 0:
            return None
        return 1j * self.charge * self.potential.value(t, self.r)

    def extend(self, u: np.ndarray) -> np.ndarray:
        """
        Pads the radial axis with parity ghosts on the left and cubic
        extrapolation on the right.
        """
        g = stencils.GHOSTS
        mirrored = u[..., g:0:-1]
        left = np.stack([self.sigma * mirrored[1], self.sigma * mirrored[0],
                         self.sigma * mirrored[3], self.sigma * mirrored[2]])
        tail = u[..., :-5:-1]
        right = np.stack([np.tensordot(tail, w, axes=([-1], [0]))
                          for w in _EXTRAPOLATION], axis=-1)
        return np.concatenate([left, u, right], axis=-1)

    def coupling_terms(self, u: np.ndarray, t: float) -> np.ndarray:
        c, m = self.coupling, self.mass_term
        out = np.stack([
            -c * u[1] + m * u[2],
            c * u[0] + m * u[3],
            c * u[3] - m * u[0],
            -c * u[2] - m * u[1],
        ])
        phase = self._phase(t)
        if phase is not None:
            out = out + phase * u
        return out

    def rhs(self, u: np.ndarray, t: float,
            source: Optional[np.ndarray] = None) -> np.ndarray:
        extended = self.extend(u)
        transport = np.stack([
            stencils.upwind_derivative(extended[0], self.h, +1),
            -stencils.upwind_derivative(extended[1], self.h, -1),
            -stencils.upwind_derivative(extended[2], self.h, -1),
            stencils.upwind_derivative(extended[3], self.h, +1),
        ])
        out = transport + self.coupling_terms(u, t)
        if source is not None:
            out = out + self.weight * source
        out[..., 0] = 0.0
        return out

    def centred(self, u: np.ndarray) -> np.ndarray:
        return stencils.centred_derivative_with_ghosts(
            self.extend(u)[..., :-stencils.GHOSTS], self.h)

    def to_u(self, psi_modes: np.ndarray) -> np.ndarray:
        """(4, n_r, n_modes) Ψ-modes → (4, n_modes, n_r) U."""
        return np.moveaxis(psi_modes, 1, -1) * self.weight

    def to_psi(self, u: np.ndarray) -> np.ndarray:
        psi = np.zeros_like(u)
        psi[..., 1:] = u[..., 1:] / self.weight[1:]
        psi[..., 0] = self.centre_value(psi)
        return np.moveaxis(psi, -1, 1)

    def centre_value(self, psi: np.ndarray) -> np.ndarray:
        """Ψ at r = 0 from the even extension Ψ₁(−r) = −σΨ₂(r) and its partners."""
        partner = psi[[1, 0, 3, 2]]
        odd = -self.sigma
        return (2 / 3 * (psi[..., 1] + odd[:, 0] * partner[..., 1])
                - 1 / 6 * (psi[..., 2] + odd[:, 0] * partner[..., 2]))


def _operator(model, r, cfg: EvolutionConfig, two_l_max=None) -> RadialOperator:
    return RadialOperator(model, r, cfg.two_l_max if two_l_max is None
                          else two_l_max, cfg.mass, cfg.charge, cfg.potential)


def _source_u(op: RadialOperator, source: Optional[Source], t: float):
    if source is None:
        return None
    return np.moveaxis(np.asarray(source(t, op.r)), 1, -1)


def assemble_rhs(state: SliceState, cfg: EvolutionConfig,
                 model: geometry.MetricModel,
                 source: Optional[Source] = None) -> SliceState:
    """∂ₜΨ on the slice, as a SliceState at the same time."""
    op = _operator(model, state.r, cfg, state.two_l_max)
    du = op.rhs(op.to_u(state.modes), state.t, _source_u(op, source, state.t))
    return SliceState(state.t, state.r, op.to_psi(du), state.two_l_max)


def _check_cfl(cfg: EvolutionConfig):
    if cfg.cfl > 1:
        raise CFLViolation('CFL number {} exceeds the stability limit 1'
                           .format(cfg.cfl))


def _rk4(u, t, dt, rhs):
    k1 = rhs(u, t)
    k2 = rhs(u + dt / 2 * k1, t + dt / 2)
    k3 = rhs(u + dt / 2 * k2, t + dt / 2)
    k4 = rhs(u + dt * k3, t + dt)
    return u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def source_evolve(initial: SliceState, source: Optional[Source],
                  t_target: float, cfg: EvolutionConfig,
                  model: geometry.MetricModel,
                  history: Optional[List[SliceState]] = None) -> SliceState:
    """
    Advances a slice to t_target. The outer edge recedes along the ingoing
    characteristic, X(t) = X₀ − (t − t₀): step n runs on the nodes with
    r ≤ X(tₙ) only, and the nodes beyond keep the values they had when
    the edge passed them.
    """
    _check_cfl(cfg)
    op = _operator(model, initial.r, cfg, initial.two_l_max)
    t0, extent, h = initial.t, float(initial.r[-1]), initial.h
    span = t_target - t0
    if span < 0:
        raise DomainError('t_target = {} precedes the initial slice'
                          .format(t_target))
    if extent - span <= 4 * h:
        raise DomainError('t_target = {} exhausts the excised domain '
                          '(extent {} from t = {})'.format(t_target, extent, t0))
    n_steps = int(ceil(span / cfg.max_step(h) - 1e-12)) if span > 0 else 0
    dt = span / n_steps if n_steps else 0.0
    u = op.to_u(initial.modes)
    if history is not None:
        history.append(initial)

    t = t0
    for n in range(n_steps):
        active = int(np.searchsorted(op.r, extent - (t - t0) + 1e-12 * extent,
                                     side='right'))
        sub = op.restricted(active)

        def rhs(values, time, sub=sub, active=active):
            out = np.zeros_like(values)
            out[..., :active] = sub.rhs(values[..., :active], time,
                                        _source_u(sub, source, time))
            return out

        u = _rk4(u, t, dt, rhs)
        t = t0 + (n + 1) * dt
        if history is not None:
            history.append(SliceState(t, initial.r, op.to_psi(u),
                                      initial.two_l_max))
    return SliceState(t0 + span, initial.r, op.to_psi(u), initial.two_l_max)


def cauchy_evolve(initial: SliceState, t_target: float, cfg: EvolutionConfig,
                  model: geometry.MetricModel,
                  history: Optional[List[SliceState]] = None) -> SliceState:
    return source_evolve(initial, None, t_target, cfg, model, history)


def excision_radius(initial: SliceState, t: float) -> float:
    return float(initial.r[-1]) - (t - initial.t)


def _blend(s):
    s = np.clip(s, 0.0, 1.0)
    return 1 - 10 * s ** 3 + 15 * s ** 4 - 6 * s ** 5


def extend_datum(d: NullDatum, t_max: float, v: np.ndarray,
                 rule: str = 'blend', fraction: float = 0.1) -> NullDatum:
    """
    Resamples the datum onto the grid v and continues it beyond v = 2T by
    `rule`: 'hold' keeps the value at 2T, 'blend' adds the first and
    second order Taylor terms switched off by a C² quintic over a length
    fraction·2T.
    """
    end = 2 * t_max
    if d.v_max < end * (1 - 1e-12):
        raise ExtensionError('datum covers v ≤ {} < 2T = {}'.format(d.v_max, end))
    stop = int(np.searchsorted(d.v, end * (1 + 1e-12), side='right'))
    if stop < 5:
        raise ExtensionError('need at least 5 datum nodes on [0, 2T]')
    inside = v <= end * (1 + 1e-12)
    fields = []
    for f in (d.psi1, d.psi4):
        values = f.coefficients[:stop]
        if not np.all(np.isfinite(values)):
            raise ExtensionError('datum has non-finite values')
        out = np.empty((v.size,) + values.shape[1:], dtype=complex)
        out[inside] = stencils.interpolate(d.v[:stop], values, v[inside])
        delta = v[~inside] - end
        c0 = values[-1]
        if rule == 'hold':
            out[~inside] = c0
        elif rule == 'blend':
            reverse = values[::-1]
            c1 = -stencils.vertex_derivative(reverse, d.h, 5, axis=0)
            second = np.array([35.0, -104.0, 114.0, -56.0, 11.0]) / 12.0
            c2 = np.tensordot(second, reverse[:5], axes=([0], [0])) / d.h ** 2
            chi = _blend(delta / (fraction * end))[:, np.newaxis]
            out[~inside] = c0 + (c1 * delta[:, np.newaxis]
                                 + 0.5 * c2 * delta[:, np.newaxis] ** 2) * chi
        else:
            raise ExtensionError('unknown extension rule {!r}'.format(rule))
        fields.append(SpectralField(f.two_s, f.two_l_max, out))
    return NullDatum(v, fields[0], fields[1], d.mass, d.charge, d.potential)


@dataclass(frozen=True)
class ConeData:
    """Data on the λ-cone: g_U(x) = w(x)Ψ(2x) and its time derivatives."""
    opening: float
    x: np.ndarray
    derivatives: tuple
    hamiltonian: np.ndarray
    residual: float

    @property
    def g(self) -> np.ndarray:
        return self.derivatives[0]


def _taylor_derivatives(op: RadialOperator, g: np.ndarray, lam: float,
                        order: int):
    """Φ₀ = g and (1 + λγ)Φ_{p+1} = γΦ_p′ + BΦ_p along {t = λx}."""
    scale = 1.0 / (1.0 + lam * GAMMA)[:, np.newaxis, np.newaxis]
    gamma = GAMMA[:, np.newaxis, np.newaxis]
    hamiltonian = gamma * op.centred(g) + op.coupling_terms(g, 0.0)
    hamiltonian[..., 0] = 0.0
    derivatives = [g]
    current = hamiltonian
    for _ in range(order):
        nxt = scale * current
        nxt[..., 0] = 0.0
        derivatives.append(nxt)
        current = gamma * op.centred(nxt) + op.coupling_terms(nxt, 0.0)
    return tuple(derivatives), hamiltonian


def _goursat_grid(cfg: EvolutionConfig, lam: float):
    h = cfg.t_final / cfg.n_r
    n_nodes = int(ceil(cfg.n_r / lam)) + TAYLOR_BAND + stencils.GHOSTS + 2
    return h * np.arange(n_nodes)


def induced_cone_data(d: NullDatum, lam: float, cfg: EvolutionConfig,
                      model: geometry.MetricModel) -> ConeData:
    """
    Transplants the constraint-completed datum to {t = λr}:
    Ψ^λ(λr, r) = Ψ(v = 2r). Also returns g_H = γg′ + Bg, whose components
    2 and 3 vanish when g satisfies the constraints.
    """
    if not 0 < lam < 1:
        raise ExtrapolationError('λ must lie in (0, 1), got {}'.format(lam))
    if not cfg.potential.is_static:
        raise ValueError('λ-cone data need a static potential')
    if d.two_l_max != cfg.two_l_max:
        raise ValueError('datum l_max {}/2 differs from the configured {}/2'
                         .format(d.two_l_max, cfg.two_l_max))
    x = _goursat_grid(cfg, lam)
    extended = extend_datum(d, cfg.t_final, 2 * x, cfg.extension,
                            cfg.extension_fraction)
    sol = constraints.solve_constraints(extended, model)
    psi = np.stack([f.coefficients for f in sol.components])
    op = _operator(model, x, cfg, d.two_l_max)
    g = op.to_u(psi)
    derivatives, hamiltonian = _taylor_derivatives(op, g, lam,
                                                   cfg.taylor_order)
    inside = x <= cfg.t_final / lam + 1e-12
    norm = np.max(np.abs(g[..., inside]))
    residual = float(np.max(np.abs(hamiltonian[1:3][..., inside])) / norm
                     ) if norm > 0 else 0.0
    if residual > cfg.constraint_tolerance:
        message = ('λ = {}: (g_H)₂,₃ residual {:.3e} exceeds {:.1e}'
                   .format(lam, residual, cfg.constraint_tolerance))
        if cfg.strict_constraints:
            raise ConstraintViolation(message)
        logger.warning(message)
    return ConeData(lam, x, derivatives, hamiltonian, residual)


def _taylor_fill(u, data: ConeData, t: float):
    """Overwrites nodes below the λ-cone front with the Taylor continuation."""
    outside = data.opening * data.x > t + 1e-14
    if not np.any(outside):
        return u
    first = int(np.argmax(outside))
    band = np.zeros_like(outside)
    band[first:first + TAYLOR_BAND] = True
    offsets = t - data.opening * data.x[band]
    fill = sum(offsets ** p / factorial(p) * phi[..., band]
               for p, phi in enumerate(data.derivatives))
    u = u.copy()
    u[..., outside] = 0.0
    u[..., band] = fill
    return u


def lambda_cone_solve(data: ConeData, cfg: EvolutionConfig,
                      model: geometry.MetricModel,
                      history: Optional[List[SliceState]] = None) -> SliceState:
    """Cauchy solve from the λ-cone data up to Σ_T on the growing domain [0, t/λ]."""
    _check_cfl(cfg)
    op = _operator(model, data.x, cfg)
    h = op.h
    n_steps = int(ceil(cfg.t_final / cfg.max_step(h) - 1e-12))
    dt = cfg.t_final / n_steps
    u = _taylor_fill(np.zeros_like(data.g), data, 0.0)

    def rhs(values, time):
        return op.rhs(_taylor_fill(values, data, time), time)

    if history is not None:
        history.append(SliceState(0.0, data.x, op.to_psi(u), cfg.two_l_max))
    for n in range(n_steps):
        t = n * dt
        u = _taylor_fill(_rk4(u, t, dt, rhs), data, t + dt)
        if history is not None:
            history.append(SliceState(t + dt, data.x, op.to_psi(u),
                                      cfg.two_l_max))
    final = SliceState(cfg.t_final, data.x, op.to_psi(u), cfg.two_l_max)
    return final.restricted(cfg.n_r + 1)


def _check_lambdas(cfg: EvolutionConfig):
    lambdas = tuple(cfg.lambdas)
    if len(lambdas) < 2:
        raise ExtrapolationError('extrapolation in λ needs at least two '
                                 'openings, got {}'.format(len(lambdas)))
    if any(b <= a for a, b in zip(lambdas, lambdas[1:])):
        raise ExtrapolationError('λ list must be strictly increasing: {}'
                                 .format(lambdas))
    for lam in lambdas:
        if not 0 < lam < 1:
            raise ExtrapolationError('λ = {} outside (0, 1)'.format(lam))
        if 1 - lam > cfg.max_opening:
            raise ExtrapolationError('λ = {} too small: 1 − λ exceeds the '
                                     'bound {}'.format(lam, cfg.max_opening))
    return lambdas


def extrapolate(values: Dict[float, np.ndarray]) -> np.ndarray:
    """First-order Richardson step in (1 − λ) through the two openings nearest 1."""
    lambdas = sorted(values)[-2:]
    weights = stencils.extrapolation_weights([1 - lam for lam in lambdas])
    return sum(w * values[lam] for w, lam in zip(weights, lambdas))


def observed_order(values: Dict[float, np.ndarray]) -> Optional[float]:
    """Leading order in (1 − λ) from the last three openings."""
    lambdas = sorted(values)
    if len(lambdas) < 3:
        return None
    a, b, c = lambdas[-3:]
    first = np.max(np.abs(values[b] - values[a]))
    second = np.max(np.abs(values[c] - values[b]))
    if first == 0 or second == 0:
        return None
    ratio = ((1 - a) - (1 - b)) / ((1 - b) - (1 - c))
    return float(log(first / second) / log(ratio))


def check_order(order: Optional[float], cfg: EvolutionConfig) -> Optional[bool]:
    """
    Whether the observed order agrees with the first-order error the
    Richardson step assumes. None when it cannot be measured.
    """
    if order is None:
        return None
    if abs(order - 1.0) <= cfg.order_tolerance:
        return True
    message = ('observed order {:.3f} in (1 − λ) differs from 1 by more than '
               '{}'.format(order, cfg.order_tolerance))
    if cfg.strict_constraints:
        raise ExtrapolationError(message)
    logger.warning(message)
    return False


@dataclass
class GoursatResult:
    state: SliceState
    per_lambda: Dict[float, SliceState]
    residuals: Dict[float, float]
    histories: Dict[float, List[SliceState]] = field(default_factory=dict)
    order: Optional[float] = None
    order_ok: Optional[bool] = None

    def trace(self, n_v: int) -> NullDatum:
        """Cone trace of the solution, extrapolated in λ like the Σ_T state."""
        if not self.histories:
            raise ExtrapolationError('no histories recorded; set record_history')
        traces = {lam: trace_on_cone(history, n_v)
                  for lam, history in self.histories.items()}
        first = next(iter(traces.values()))
        psi1 = extrapolate({lam: d.psi1.coefficients for lam, d in traces.items()})
        psi4 = extrapolate({lam: d.psi4.coefficients for lam, d in traces.items()})
        return NullDatum(first.v, SpectralField(1, first.two_l_max, psi1),
                         SpectralField(-1, first.two_l_max, psi4))


def goursat_solve(d: NullDatum, cfg: EvolutionConfig,
                  model: geometry.MetricModel) -> GoursatResult:
    """Σ_T state of the characteristic problem via λ-cone solves and λ → 1."""
    lambdas = _check_lambdas(cfg)
    if cfg.t_final > model.t_max * (1 + 1e-12):
        raise DomainError('t_final = {} beyond the model extent {}'
                          .format(cfg.t_final, model.t_max))
    if (d.mass, d.charge) != (cfg.mass, cfg.charge):
        d = NullDatum(d.v, d.psi1, d.psi4, cfg.mass, cfg.charge, cfg.potential)
    per_lambda, residuals, histories = {}, {}, {}
    for lam in lambdas:
        data = induced_cone_data(d, lam, cfg, model)
        history = [] if cfg.record_history else None
        per_lambda[lam] = lambda_cone_solve(data, cfg, model, history)
        residuals[lam] = data.residual
        if history is not None:
            histories[lam] = history
        logger.debug('λ = %s solved', lam)
    modes = {lam: s.modes for lam, s in per_lambda.items()}
    order = observed_order(modes)
    order_ok = check_order(order, cfg)
    if order is not None:
        logger.info('observed order in (1 − λ): %.3f', order)
    first = per_lambda[lambdas[0]]
    state = SliceState(cfg.t_final, first.r, extrapolate(modes),
                       first.two_l_max)
    return GoursatResult(state, per_lambda, residuals, histories, order,
                         order_ok)


def trace_on_cone(history: List[SliceState], n_v: int) -> NullDatum:
    """(Ψ₁, Ψ₄) on {t = r} from an evolution history starting at t = 0."""
    if not history:
        raise DomainError('empty history')
    if abs(history[0].t) > 1e-12:
        raise DomainError('the history must start at the vertex time t = 0')
    times = np.array([s.t for s in history])
    t_max = times[-1]
    on_cone = []
    for s in history:
        if s.t > s.r[-1] - 2 * s.h:
            raise DomainError('the cone leaves the grid at t = {}'.format(s.t))
        value = stencils.interpolate(s.r, s.modes, np.array([s.t]), axis=1)
        on_cone.append(value[:, 0])
    on_cone = np.stack(on_cone, axis=1)
    v = np.linspace(0.0, 2 * t_max, n_v + 1)
    resampled = stencils.interpolate(2 * times, on_cone, v, axis=1)
    two_l_max = history[0].two_l_max
    return NullDatum(v, SpectralField(1, two_l_max, resampled[0]),
                     SpectralField(-1, two_l_max, resampled[3]))
