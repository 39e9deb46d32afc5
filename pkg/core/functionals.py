"""
Interventional functionals read off an InterventionalCdf: mean, τ-quantile,
Gini index, plus inverse-CDF sampling.

Rows are treated as discretized distributions: mass below the first grid node
sits on that node, mass above the last node sits on the last node, and the CDF
is linear between nodes.
"""

import logging
from typing import Dict, Iterable

import numpy as np
from scipy.integrate import trapezoid

from core.exceptions import DomainError
from models.enums import FunctionalKind
from models.interventional import InterventionalCdf

logger = logging.getLogger(__name__)

TAIL_MASS_WARNING = 1e-3
NEGATIVE_MASS_TOLERANCE = 1e-3


def _check_tau(tau: float) -> None:
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau must lie in (0, 1), got {tau}.")


def inverse_row(cdf_row: np.ndarray, y_grid: np.ndarray, probabilities: np.ndarray) -> np.ndarray:
    """
    Generalized inverse inf{y : F(y) >= p}: smallest node with F >= p, then
    linear interpolation toward the previous node.
    """
    probabilities = np.asarray(probabilities, dtype=float)
    m = np.searchsorted(cdf_row, probabilities, side="left")
    last = y_grid.size - 1
    inner = np.clip(m, 1, last)
    f_lo = cdf_row[inner - 1]
    f_hi = cdf_row[inner]
    gap = f_hi - f_lo
    frac = np.where(gap > 0, (probabilities - f_lo) / np.where(gap > 0, gap, 1.0), 1.0)
    values = y_grid[inner - 1] + np.clip(frac, 0.0, 1.0) * (y_grid[inner] - y_grid[inner - 1])
    values = np.where(m <= 0, y_grid[0], values)
    return np.where(m > last, y_grid[last], values)


def _row_means(cdf: np.ndarray, y_grid: np.ndarray) -> np.ndarray:
    return y_grid[0] + trapezoid(1.0 - cdf, y_grid, axis=1)


def tail_mass(icdf: InterventionalCdf) -> np.ndarray:
    """Probability outside the outcome grid per row."""
    return icdf.cdf[:, 0] + (1.0 - icdf.cdf[:, -1])


def interventional_mean(icdf: InterventionalCdf) -> np.ndarray:
    """μ̂(x_g) = y_0 + ∫ (1 − F) dy over the grid (trapezoid)."""
    tails = tail_mass(icdf)
    heavy = np.flatnonzero(tails > TAIL_MASS_WARNING)
    if heavy.size:
        logger.warning(
            "Tail mass above %.0e at %d of %d grid levels (max %.3g at x=%.4g); "
            "assigned to the outcome-grid endpoints",
            TAIL_MASS_WARNING, heavy.size, tails.size, tails[heavy].max(),
            icdf.x_grid[heavy[np.argmax(tails[heavy])]],
        )
    return _row_means(icdf.cdf, icdf.y_grid)


def interventional_quantile(icdf: InterventionalCdf, tau: float) -> np.ndarray:
    _check_tau(tau)
    return np.array([inverse_row(row, icdf.y_grid, tau) for row in icdf.cdf], dtype=float)


def interventional_gini(icdf: InterventionalCdf) -> np.ndarray:
    """Gini(x_g) = ∫_0^∞ F(1 − F) dy / μ̂(x_g) for nonnegative outcomes."""
    y = icdf.y_grid
    means = _row_means(icdf.cdf, y)
    out = np.empty(icdf.x_grid.size)
    for g, row in enumerate(icdf.cdf):
        negative = float(np.interp(0.0, y, row)) if y[0] < 0 else 0.0
        if negative > NEGATIVE_MASS_TOLERANCE:
            raise DomainError(
                f"Gini needs nonnegative outcomes: mass {negative:.3g} below 0 at x={icdf.x_grid[g]:.6g}."
            )
        if means[g] <= 0:
            raise DomainError(f"Gini undefined: mean {means[g]:.3g} <= 0 at x={icdf.x_grid[g]:.6g}.")
        if y[0] < 0:
            keep = y > 0
            ys = np.concatenate([[0.0], y[keep]])
            fs = np.concatenate([[negative], row[keep]])
        else:
            ys, fs = y, row
        out[g] = trapezoid(fs * (1.0 - fs), ys) / means[g]
    return out


def sample_from_cdf(icdf: InterventionalCdf, g: int, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draws from row g for uniforms u."""
    return inverse_row(icdf.cdf[g], icdf.y_grid, np.asarray(u, dtype=float))


def evaluate_functional(
    icdf: InterventionalCdf, kind: FunctionalKind, taus: Iterable[float] = (0.5,)
) -> Dict[str, np.ndarray]:
    """Curves keyed by label: 'mean', 'gini' or 'q0.5'-style quantile labels."""
    kind = FunctionalKind(kind)
    if kind == FunctionalKind.MEAN:
        return {"mean": interventional_mean(icdf)}
    if kind == FunctionalKind.GINI:
        return {"gini": interventional_gini(icdf)}
    if kind == FunctionalKind.QUANTILE:
        return {f"q{tau:g}": interventional_quantile(icdf, tau) for tau in taus}
    raise DomainError(f"'{kind.value}' is not a marginal functional.")
