"""
Finite-difference stencils, local interpolation and quadrature shared by the
constraint solver, the evolution scheme and the diagnostics.

All stencils are fourth order. Arrays are differentiated along their last
axis unless stated otherwise.
"""
import numpy as np
from scipy import integrate

GHOSTS = 3

_CENTRED = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_ONE_SIDED = (
    np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0,
    np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0,
)


def derivative(values: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    """
    Fourth-order first derivative on a uniform grid: centred five-point
    stencil in the interior, one-sided five-point stencils on the two
    outermost nodes at each end.
    """
    f = np.moveaxis(np.asarray(values), axis, -1)
    n = f.shape[-1]
    if n < 5:
        raise ValueError('need at least 5 nodes, got {}'.format(n))
    out = np.empty_like(f, dtype=np.result_type(f, float))
    out[..., 2:-2] = (f[..., :-4] * _CENTRED[0] + f[..., 1:-3] * _CENTRED[1]
                      + f[..., 3:-1] * _CENTRED[3] + f[..., 4:] * _CENTRED[4])
    for node, weights in enumerate(_ONE_SIDED):
        out[..., node] = np.tensordot(f[..., :5], weights, axes=([-1], [0]))
        out[..., n - 1 - node] = -np.tensordot(
            f[..., -1:-6:-1], weights, axes=([-1], [0]))
    return np.moveaxis(out / h, -1, axis)


def centred_derivative_with_ghosts(extended: np.ndarray, h: float) -> np.ndarray:
    """
    Centred derivative of an array padded with GHOSTS nodes on the left;
    the right end falls back to one-sided stencils.
    """
    f = np.asarray(extended)
    full = derivative(f, h)
    return full[..., GHOSTS:]


def vertex_derivative(values: np.ndarray, h: float, points: int = 5,
                      axis: int = -1) -> np.ndarray:
    """One-sided derivative at the first node, 3-point or 5-point."""
    f = np.moveaxis(np.asarray(values), axis, -1)
    if points == 3:
        weights = np.array([-3.0, 4.0, -1.0]) / 2.0
    elif points == 5:
        weights = _ONE_SIDED[0]
    else:
        raise ValueError('points must be 3 or 5, got {}'.format(points))
    return np.tensordot(f[..., :points], weights, axes=([-1], [0])) / h


def upwind_derivative(extended: np.ndarray, h: float, direction: int) -> np.ndarray:
    """
    Upwind-biased derivative of an array padded with GHOSTS nodes on both
    sides of its last axis.

    direction=+1 is for fields transported towards decreasing r
    (∂ₜu = +∂ᵣu): the stencil leans on the nodes j-1..j+3. direction=-1 is
    the mirror image, nodes j-3..j+1.
    """
    f = np.asarray(extended)
    n = f.shape[-1] - 2 * GHOSTS
    g = GHOSTS

    def shifted(offset):
        return f[..., g + offset:g + offset + n]

    if direction > 0:
        d = (-3.0 * shifted(-1) - 10.0 * shifted(0) + 18.0 * shifted(1)
             - 6.0 * shifted(2) + shifted(3))
    else:
        d = (-shifted(-3) + 6.0 * shifted(-2) - 18.0 * shifted(-1)
             + 10.0 * shifted(0) + 3.0 * shifted(1))
    return d / (12.0 * h)


def lagrange_matrix(nodes: np.ndarray, targets: np.ndarray,
                    width: int = 4) -> np.ndarray:
    """
    Dense matrix W with W @ f(nodes) ≈ f(targets), built from local
    Lagrange polynomials on the `width` nodes nearest each target.
    Nodes must be increasing; they need not be uniform.
    """
    nodes = np.asarray(nodes, dtype=float)
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    n = nodes.size
    if n < width:
        raise ValueError('need at least {} nodes, got {}'.format(width, n))
    weights = np.zeros((targets.size, n))
    right = np.searchsorted(nodes, targets)
    start = np.clip(right - width // 2, 0, n - width)
    for row, (x, first) in enumerate(zip(targets, start)):
        stencil = nodes[first:first + width]
        for i in range(width):
            others = np.delete(stencil, i)
            weights[row, first + i] = np.prod(
                (x - others) / (stencil[i] - others))
    return weights


def interpolate(nodes: np.ndarray, values: np.ndarray, targets,
                axis: int = 0) -> np.ndarray:
    """Fourth-order local interpolation of `values` sampled on `nodes`."""
    w = lagrange_matrix(nodes, targets)
    moved = np.moveaxis(np.asarray(values), axis, 0)
    out = np.tensordot(w, moved, axes=([1], [0]))
    return np.moveaxis(out, 0, axis)


def simpson(values: np.ndarray, x: np.ndarray, axis: int = -1) -> np.ndarray:
    return integrate.simpson(values, x=x, axis=axis)


def extrapolation_weights(steps) -> np.ndarray:
    """
    Weights w with Σ wᵢ S(hᵢ) equal to the value at h = 0 of the polynomial
    through the points (hᵢ, S(hᵢ)).
    """
    h = np.asarray(steps, dtype=float)
    weights = np.ones_like(h)
    for i in range(h.size):
        for j in range(h.size):
            if i != j:
                weights[i] *= h[j] / (h[j] - h[i])
    return weights
