"""Deterministic quadrature and monotone-function inversion used by every other module.

Integrands are vectorized: they receive a 1D float array of abscissae and return
an array of the same shape (a scalar return value is broadcast).
"""

from __future__ import annotations

from collections.abc import Callable
from logging import getLogger

import numpy as np
import numpy.typing as npt

from moequant.core.errors import (
    DegenerateTableError,
    DepthExceededError,
    InvalidParamsError,
    NegativeDensityError,
    NonFiniteValueError,
    OutOfRangeError,
)
from moequant.models.numerics import DEFAULT_QUADRATURE, FloatArray, MonotoneTable, QuadratureSpec

logger = getLogger(__name__)

Integrand = Callable[[FloatArray], npt.ArrayLike]

DEFAULT_TABLE_SIZE = 10_001


def evaluate(f: Integrand, x: FloatArray) -> FloatArray:
    """Evaluates a vectorized function and rejects NaN or infinite values."""
    values = np.broadcast_to(np.asarray(f(x), dtype=np.float64), x.shape)
    if not np.all(np.isfinite(values)):
        bad = x.reshape(-1)[~np.isfinite(values.reshape(-1))][0] if x.size else float("nan")
        raise NonFiniteValueError(f"Integrand is not finite at x={bad!r}")
    return np.array(values, dtype=np.float64)


def simpson_weights(lo: float, hi: float, panels: int) -> tuple[FloatArray, FloatArray]:
    """Returns nodes and weights of the composite Simpson rule with an even number of panels."""
    if panels < 2 or panels % 2:
        raise InvalidParamsError(f"panels must be an even integer >= 2, got {panels}")
    nodes = np.linspace(lo, hi, panels + 1)
    weights = np.ones(panels + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    weights *= (hi - lo) / (3.0 * panels)
    return nodes, weights


def _cell_estimates(width: FloatArray, fa: FloatArray, fm: FloatArray, fb: FloatArray) -> FloatArray:
    return width / 6.0 * (fa + 4.0 * fm + fb)


def integrate(f: Integrand, lo: float, hi: float, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Integrates f over [lo, hi] with composite Simpson and adaptive halving.

    The interval is cut into ``spec.panels / 2`` Simpson cells. Each round halves the
    cells that are not yet converged and compares the halved estimate with the
    whole-cell estimate. Refinement stops once the summed halving differences of the
    open cells fit in what is left of the error budget ``refine_tol * integral of |f|``.
    Cells whose own difference is below half their width share of the budget are
    accepted early, so smooth stretches stop refining while kinks keep halving.

    Raises:
        InvalidParamsError: If ``hi < lo``.
        NonFiniteValueError: If f is NaN or infinite at an evaluated node.
        DepthExceededError: If ``spec.max_depth`` rounds do not meet the budget.
    """
    if hi < lo:
        raise InvalidParamsError(f"Integration bounds must satisfy lo <= hi, got [{lo}, {hi}]")
    if hi == lo:
        return 0.0

    edges = np.linspace(lo, hi, spec.panels // 2 + 1)
    a, b = edges[:-1], edges[1:]
    mid = 0.5 * (a + b)
    f_edges = evaluate(f, edges)
    fa, fb, fm = f_edges[:-1], f_edges[1:], evaluate(f, mid)
    whole = _cell_estimates(b - a, fa, fm, fb)

    scale = float(np.sum(_cell_estimates(b - a, np.abs(fa), np.abs(fm), np.abs(fb))))
    if scale == 0.0:
        return 0.0
    budget = spec.refine_tol * scale
    accepted = 0.0
    spent = 0.0

    for depth in range(1, spec.max_depth + 1):
        quarter = evaluate(f, np.concatenate([0.5 * (a + mid), 0.5 * (mid + b)]))
        f_left, f_right = quarter[: len(a)], quarter[len(a) :]
        left = _cell_estimates(mid - a, fa, f_left, fm)
        right = _cell_estimates(b - mid, fm, f_right, fb)
        refined = left + right
        diff = refined - whole
        err = np.abs(diff) / 15.0

        if float(np.sum(err)) <= budget - spent:
            logger.debug(f"Quadrature on [{lo}, {hi}] converged at depth {depth}.")
            return accepted + float(np.sum(refined + diff / 15.0))

        # early acceptance spends at most half the budget; the rest is reserved for kinks
        done = err <= 0.5 * budget * (b - a) / (hi - lo)
        accepted += float(np.sum(refined[done] + diff[done] / 15.0))
        spent += float(np.sum(err[done]))

        keep = ~done
        a, mid, b = a[keep], mid[keep], b[keep]
        fa, fm, fb = fa[keep], fm[keep], fb[keep]
        f_left, f_right = f_left[keep], f_right[keep]
        left, right = left[keep], right[keep]

        a, b = np.concatenate([a, mid]), np.concatenate([mid, b])
        fa, fb = np.concatenate([fa, fm]), np.concatenate([fm, fb])
        fm = np.concatenate([f_left, f_right])
        whole = np.concatenate([left, right])
        mid = 0.5 * (a + b)

    raise DepthExceededError(
        f"Quadrature on [{lo}, {hi}] did not converge within {spec.max_depth} halvings "
        f"({len(a)} cells still open)."
    )


def cumulative_table(f: Integrand, grid_size: int = DEFAULT_TABLE_SIZE, normalize: bool = False) -> MonotoneTable:
    """Tabulates the running integral of a nonnegative function over [0, 1].

    Each grid cell is integrated with Simpson's rule using its midpoint, so the
    table is exact for piecewise cubic integrands.

    Raises:
        NegativeDensityError: If f is negative at a sampled node.
        DegenerateTableError: If the total mass is zero.
    """
    if grid_size < 2:
        raise InvalidParamsError(f"grid_size must be >= 2, got {grid_size}")
    xs = np.linspace(0.0, 1.0, grid_size)
    f_nodes = evaluate(f, xs)
    f_mid = evaluate(f, 0.5 * (xs[:-1] + xs[1:]))
    if np.any(f_nodes < 0) or np.any(f_mid < 0):
        raise NegativeDensityError("Cumulative tables require a nonnegative function.")

    cells = _cell_estimates(np.diff(xs), f_nodes[:-1], f_mid, f_nodes[1:])
    ys = np.concatenate([[0.0], np.cumsum(cells)])
    if ys[-1] <= 0.0:
        raise DegenerateTableError("Cumulative table has zero total mass.")
    if normalize:
        ys = ys / ys[-1]
        ys[-1] = 1.0
    return MonotoneTable(xs=xs, ys=ys)


def invert_monotone(table: MonotoneTable, y: npt.ArrayLike) -> FloatArray:
    """Finds x with cumulative(x) = y by bracketing binary search and linear interpolation.

    Raises:
        OutOfRangeError: If any y lies outside [0, table.total].
    """
    ys, xs = table.ys, table.xs
    targets = np.asarray(y, dtype=np.float64)
    if np.any(targets < 0.0) or np.any(targets > ys[-1]):
        raise OutOfRangeError(f"Values must lie in [0, {ys[-1]}] to be inverted.")

    k = np.clip(np.searchsorted(ys, targets, side="left"), 1, len(ys) - 1)
    y0, y1 = ys[k - 1], ys[k]
    span = y1 - y0
    t = np.divide(targets - y0, span, out=np.ones_like(targets, dtype=np.float64), where=span > 0)
    x = np.where(t >= 1.0, xs[k], xs[k - 1] + t * (xs[k] - xs[k - 1]))
    return np.asarray(x, dtype=np.float64)
