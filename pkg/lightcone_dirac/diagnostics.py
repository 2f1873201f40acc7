"""
Quantitative checks on solver output: energies on slices and on the cone,
H¹ norms on both sides of the trace map, the source-term energy
inequalities, vertex asymptotics of the background and convergence tables.
"""
import logging
from dataclasses import asdict, dataclass, field
from math import log, sqrt
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from . import angular, constraints, geometry, stencils, utils
from .constraints import NullDatum
from .evolution import (EvolutionConfig, RadialOperator, SliceState,
                        assemble_rhs, trace_on_cone)

logger = logging.getLogger(__name__)

# relative rms residual of the vertex fits above which a report is flagged
FIT_TOLERANCE = 1e-4


@dataclass(frozen=True)
class EnergyReport:
    slice_energy: float
    cone_flux: float
    gap: float
    n_r: int
    n_v: int
    two_l_max: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EquivalenceBand:
    ratios: tuple
    low: float
    high: float

    @property
    def width(self) -> float:
        return self.high / self.low

    def to_dict(self) -> dict:
        return {'ratios': list(self.ratios), 'low': self.low,
                'high': self.high, 'width': self.width}


@dataclass(frozen=True)
class SourceEstimateReport:
    """Both sides of the two energy inequalities for a run with a source."""
    slice_energy: float
    cone_flux: float
    trace_left: float
    trace_right: float
    trace_constant: float
    times: np.ndarray
    backward_left: np.ndarray
    backward_right: np.ndarray
    backward_constant: float

    def to_dict(self) -> dict:
        return {
            'slice_energy': self.slice_energy, 'cone_flux': self.cone_flux,
            'trace': {'left': self.trace_left, 'right': self.trace_right,
                      'constant': self.trace_constant},
            'backward': {'t': self.times, 'left': self.backward_left,
                         'right': self.backward_right,
                         'constant': self.backward_constant},
        }


@dataclass(frozen=True)
class AsymptoticsReport:
    convergence_k: float
    convergence_limit: float
    curvature_limit: float
    curvature_at_min: float
    r_min: float
    residual: float
    flagged: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _measure(model, r) -> np.ndarray:
    """(1/√2)R²√F, the slice density of |Ψ|² per unit r after angular Parseval."""
    profile = geometry.radial_profile(model, r)
    return profile.areal ** 2 * np.sqrt(profile.f) / sqrt(2)


def _integrate(r, density, radius) -> float:
    radius = float(r[-1]) if radius is None else radius
    if radius <= 0:
        return 0.0
    if radius > r[-1] * (1 + 1e-12):
        raise ValueError('radius {} beyond the slice extent {}'
                         .format(radius, r[-1]))
    return float(CubicSpline(r, density).integrate(0.0, min(radius, r[-1])))


def slice_energy(s: SliceState, model: geometry.MetricModel,
                 radius: Optional[float] = None) -> float:
    """∫|Ψ|² dσ over {t = s.t, r ≤ radius} (the whole slice by default)."""
    density = np.sum(np.abs(s.modes) ** 2, axis=(0, 2)) * _measure(model, s.r)
    return _integrate(s.r, density, radius)


def isometry_report(d: NullDatum, s: SliceState,
                    model: geometry.MetricModel) -> EnergyReport:
    """Energy on Σ_T ∩ D_T against the flux through the cone up to t = T."""
    energy = slice_energy(s, model, radius=s.t)
    flux = constraints.cone_flux(d, model, t_max=s.t)
    scale = max(energy, flux)
    gap = abs(energy - flux) / scale if scale > 0 else 0.0
    return EnergyReport(energy, flux, gap, s.r.size - 1, d.v.size - 1,
                        s.two_l_max)


def _psi_layout(s: SliceState) -> np.ndarray:
    return np.moveaxis(s.modes, 1, -1)


def _radial_derivative(s: SliceState, op: RadialOperator) -> np.ndarray:
    """∂ᵣΨ with ghosts from the parity Ψ₁(−r) = −σΨ₂(r) and its partners."""
    psi = _psi_layout(s)
    mirrored = psi[..., stencils.GHOSTS:0:-1]
    odd = -op.sigma
    left = np.stack([odd * mirrored[1], odd * mirrored[0],
                     odd * mirrored[3], odd * mirrored[2]])
    extended = np.concatenate([left, psi], axis=-1)
    return stencils.centred_derivative_with_ghosts(extended, op.h)


def h1_slice_norm(s: SliceState, model: geometry.MetricModel,
                  cfg: Optional[EvolutionConfig] = None,
                  radius: Optional[float] = None) -> float:
    """
    √(‖Ψ‖² + Σ_α ‖e_α Ψ‖²) on the slice with the orthonormal frame
    e₀ = F^{−½}∂ₜ, e₁ = F^{−½}∂ᵣ and the two angular directions, whose
    contribution per mode is (|ðΨ|² + |ð′Ψ|²)/(2R²).
    """
    cfg = EvolutionConfig() if cfg is None else cfg
    op = RadialOperator(model, s.r, s.two_l_max, cfg.mass, cfg.charge,
                        cfg.potential)
    profile = geometry.radial_profile(model, s.r)
    d_t = _psi_layout(assemble_rhs(s, cfg, model))
    d_r = _radial_derivative(s, op)

    def power(values):
        return np.sum(np.abs(values) ** 2, axis=(0, 1))

    psi = _psi_layout(s)
    density = (power(psi) + (power(d_t) + power(d_r)) / profile.f)
    density = density * _measure(model, s.r)
    ladders = np.zeros_like(s.r)
    for i in range(4):
        f = angular.truncate(s.component(i), max(s.two_l_max, 3))
        ladders += np.sum(np.abs(angular.eth_raise(f).coefficients) ** 2
                          + np.abs(angular.eth_lower(f).coefficients) ** 2,
                          axis=-1)
    density = density + ladders / 2 * np.sqrt(profile.f) / sqrt(2)
    return sqrt(_integrate(s.r, density, radius))


def equivalence_ratio(d: NullDatum, s: SliceState,
                      model: geometry.MetricModel,
                      cfg: Optional[EvolutionConfig] = None) -> float:
    """h_cone_norm(d) / h1_slice_norm(s) over D_T with T = s.t."""
    slice_norm = h1_slice_norm(s, model, cfg, radius=s.t)
    if slice_norm == 0:
        raise ValueError('zero H¹ norm on the slice')
    return constraints.h_cone_norm(d, model, t_max=s.t) / slice_norm


def equivalence_report(pairs: Sequence[Tuple[NullDatum, SliceState]],
                       model: geometry.MetricModel,
                       cfg: Optional[EvolutionConfig] = None) -> EquivalenceBand:
    """Empirical [1/C, C] band of the cone-to-slice H¹ ratio over a family."""
    if not pairs:
        raise ValueError('the family of data is empty')
    ratios = tuple(equivalence_ratio(d, s, model, cfg) for d, s in pairs)
    return EquivalenceBand(ratios, min(ratios), max(ratios))


def _source_energy(source, t, r, two_l_max, model) -> float:
    if source is None:
        return 0.0
    values = np.asarray(source(t, r))
    return slice_energy(SliceState(t, r, values, two_l_max), model, radius=t)


def source_estimate_report(history: List[SliceState],
                           source: Optional[Callable],
                           model: geometry.MetricModel,
                           n_v: int = 128) -> SourceEstimateReport:
    """
    Sides of the source-term energy inequalities for a run of
    source_evolve started at t = 0 on a domain wide enough to contain the
    cone up to the last slice:

        |E(T) − flux| ≤ C₁ ∫₀ᵀ (E(t) + ‖Ξ‖²(t)) dt,
        E(t) ≤ C₂ (E(T) + ∫ₜᵀ ‖Ξ‖²(s) ds),

    with E(t) the energy of Σ_t ∩ D_T. The constants reported are the
    smallest making each inequality hold.
    """
    datum = trace_on_cone(history, n_v)
    times = np.array([s.t for s in history])
    t_max = float(times[-1])
    two_l_max = history[0].two_l_max
    energies = np.array([slice_energy(s, model, radius=s.t) for s in history])
    sources = np.array([_source_energy(source, s.t, s.r, two_l_max, model)
                        for s in history])
    flux = constraints.cone_flux(datum, model, t_max=t_max)

    trace_left = abs(energies[-1] - flux)
    trace_right = float(CubicSpline(times, energies + sources)
                        .integrate(0.0, t_max))
    trace_constant = trace_left / trace_right if trace_right > 0 else 0.0

    tail = CubicSpline(times, sources)
    backward_right = np.array([energies[-1] + tail.integrate(t, t_max)
                               for t in times])
    with np.errstate(divide='ignore', invalid='ignore'):
        quotient = np.where(backward_right > 0, energies / backward_right, 0.0)
    backward_constant = float(np.max(quotient))
    logger.debug('source estimates: C₁ = %.3e, C₂ = %.3e', trace_constant,
                 backward_constant)
    return SourceEstimateReport(energies[-1], flux, trace_left, trace_right,
                                trace_constant, times, energies,
                                backward_right, backward_constant)


def _fit_even(r, values):
    """Least squares values ≈ c₀ + c₂r² + c₄r⁴; returns (c₀, c₂, relative rms)."""
    design = np.stack([np.ones_like(r), r ** 2, r ** 4], axis=-1)
    coefficients, *_ = np.linalg.lstsq(design, values, rcond=None)
    c0, c2 = coefficients[:2]
    rms = float(np.sqrt(np.mean((design @ coefficients - values) ** 2)))
    return float(c0), float(c2), rms / max(abs(c0), 1e-300)


def asymptotics_fit(model: geometry.MetricModel, r_min: float = 1e-2,
                    r_max: float = 0.3, n_points: int = 24) -> AsymptoticsReport:
    """
    Vertex behaviour of the background: fits r·ρ = −c(1 + Kr² + O(r⁴)) for the
    convergence of ℒ = ∇u and r²k = c′ + O(r²) for the Gauss curvature of
    the sections, on log-spaced r in [r_min, r_max]·T.
    """
    r = model.t_max * np.geomspace(r_min, r_max, n_points)
    rho = np.array([geometry.spin_coefficients(
        model, geometry.SlicePoint(x, x), geometry.GRADIENT_L,
        method='closed').rho.real for x in r])
    curvature = np.array([geometry.gauss_curvature(model, x) for x in r])
    c0, k, rho_rms = _fit_even(r, -r * rho)
    c0_curv, _, curv_rms = _fit_even(r, r ** 2 * curvature)
    residual = max(rho_rms, curv_rms)
    flagged = residual > FIT_TOLERANCE
    if flagged:
        logger.warning('vertex fit residual %.3e exceeds %.1e', residual,
                       FIT_TOLERANCE)
    return AsymptoticsReport(k / c0, -c0, c0_curv,
                             float(r[0] ** 2 * curvature[0]), float(r[0]),
                             residual, flagged)


@dataclass
class ConvergenceTable:
    """Errors against a resolution parameter with observed orders."""
    tag: str
    resolutions: List[float] = field(default_factory=list)
    errors: List[float] = field(default_factory=list)

    def add(self, resolution: float, error: float):
        if self.resolutions and resolution <= self.resolutions[-1]:
            raise ValueError('resolutions must increase: {} after {}'
                             .format(resolution, self.resolutions[-1]))
        self.resolutions.append(float(resolution))
        self.errors.append(float(error))

    @property
    def orders(self) -> List[Optional[float]]:
        out = [None]
        for i in range(1, len(self.errors)):
            e0, e1 = self.errors[i - 1], self.errors[i]
            if e0 > 0 and e1 > 0:
                out.append(log(e0 / e1) / log(self.resolutions[i]
                                              / self.resolutions[i - 1]))
            else:
                out.append(None)
        return out

    @property
    def min_order(self) -> Optional[float]:
        observed = [o for o in self.orders if o is not None]
        return min(observed) if observed else None

    def rows(self) -> list:
        return [[n, e, '' if o is None else o]
                for n, e, o in zip(self.resolutions, self.errors, self.orders)]

    def to_csv(self, filename: str) -> str:
        return utils.write_csv(filename, ['resolution', 'error', 'order'],
                               self.rows())

    def to_dict(self) -> dict:
        return {'tag': self.tag, 'resolutions': self.resolutions,
                'errors': self.errors, 'orders': self.orders}


def write_summary(filename: str, reports: dict) -> str:
    """JSON summary of named reports (anything with to_dict, or plain data)."""
    data = {name: report.to_dict() if hasattr(report, 'to_dict') else report
            for name, report in reports.items()}
    return utils.write_json(filename, data)
