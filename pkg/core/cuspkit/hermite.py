"""
Cubic Hermite patches on (value, derivative) samples and Gauss-Legendre
quadrature over them.

A 4-point rule integrates the product of two cubic patches exactly, so
overlaps of two interpolated solutions carry no quadrature error beyond the
interpolation itself.
"""
from typing import Tuple

import numpy as np

GAUSS_ORDER = 4
_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(GAUSS_ORDER)
UNIT_NODES = 0.5 * (_NODES + 1.0)
UNIT_WEIGHTS = 0.5 * _WEIGHTS


def basis(t: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Hermite basis h00, h10, h01, h11 on t in [0, 1]."""
    t2 = t * t
    t3 = t2 * t
    return 2 * t3 - 3 * t2 + 1, t3 - 2 * t2 + t, -2 * t3 + 3 * t2, t3 - t2


def basis_derivative(t: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """d/dt of :func:`basis`."""
    t2 = t * t
    return 6 * t2 - 6 * t, 3 * t2 - 4 * t + 1, -6 * t2 + 6 * t, 3 * t2 - 2 * t


def interpolate(x0: float, x1: float, y0: float, y1: float, d0: float, d1: float,
                x: float) -> Tuple[float, float]:
    """Value and derivative of the cubic Hermite patch through (x0, y0, d0) and (x1, y1, d1) at x."""
    h = x1 - x0
    t = (x - x0) / h
    h00, h10, h01, h11 = basis(np.asarray(t))
    g00, g10, g01, g11 = basis_derivative(np.asarray(t))
    value = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
    slope = (g00 * y0 + g10 * h * d0 + g01 * y1 + g11 * h * d1) / h
    return float(value), float(slope)


def locate(points: np.ndarray, x: float) -> int:
    """Index i with points[i] <= x <= points[i+1] (clamped to the last interval)."""
    i = int(np.searchsorted(points, x, side="right")) - 1
    return min(max(i, 0), len(points) - 2)


def _patch_values(x: np.ndarray, y: np.ndarray, dy: np.ndarray, t: np.ndarray) -> np.ndarray:
    h = np.diff(x)[:, None]
    h00, h10, h01, h11 = basis(t[None, :])
    return h00 * y[:-1, None] + h10 * h * dy[:-1, None] + h01 * y[1:, None] + h11 * h * dy[1:, None]


def interval_product_integrals(x: np.ndarray, a: np.ndarray, da: np.ndarray,
                               b: np.ndarray, db: np.ndarray) -> np.ndarray:
    """∫ a(x) b(x) dx over every interval [x_i, x_{i+1}] of the Hermite patches of a and b."""
    x = np.asarray(x, dtype=float)
    pa = _patch_values(x, np.asarray(a), np.asarray(da), UNIT_NODES)
    pb = _patch_values(x, np.asarray(b), np.asarray(db), UNIT_NODES)
    return np.diff(x) * np.sum(UNIT_WEIGHTS[None, :] * pa * pb, axis=1)


def cumulative_product_integral(x: np.ndarray, a: np.ndarray, da: np.ndarray,
                                b: np.ndarray, db: np.ndarray) -> np.ndarray:
    """Running ∫_{x_0}^{x_k} a b dx, starting at 0."""
    return np.concatenate([[0.0], np.cumsum(interval_product_integrals(x, a, da, b, db))])


def partial_product_integral(x0: float, x1: float,
                             a: Tuple[float, float, float, float],
                             b: Tuple[float, float, float, float],
                             upper: float) -> float:
    """∫_{x0}^{upper} a b dx on one patch; ``a`` and ``b`` are (y0, y1, d0, d1)."""
    h = x1 - x0
    span = (upper - x0) / h
    t = UNIT_NODES * span

    def patch(coeffs):
        y0, y1, d0, d1 = coeffs
        h00, h10, h01, h11 = basis(t)
        return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1

    return float((upper - x0) * np.sum(UNIT_WEIGHTS * patch(a) * patch(b)))
