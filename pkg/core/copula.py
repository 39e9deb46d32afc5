"""
Joint interventional laws for K >= 2 outcomes: marginal interventional CDFs
merged by an x-invariant working copula (Gaussian or independence).
"""

import logging
from typing import List, Sequence

import numpy as np
from scipy.special import ndtr, ndtri, owens_t
from scipy.stats import qmc, rankdata

from core.cf_pipeline import interventional_cdf
from core.exceptions import DegenerateInputError, DomainError, InsufficientDataError, ShapeError
from core.functionals import inverse_row
from models.copula_model import CopulaModel, JointInterventional
from models.enums import CopulaKind, CopulaScoreMode, VIntegration
from models.interventional import CfFit, EvaluationGrid, InterventionalCdf
from services.simulation_service import derive_seed

logger = logging.getLogger(__name__)

EIGEN_FLOOR = 1e-8
SAMPLING_CORRELATION_CAP = 1.0 - 1e-6
COMONOTONE_TOLERANCE = 1e-12
QMC_LOG2_POINTS = 13
QMC_SEED = 20240601
SCORE_LEVELS = 50


# ==============================================================================
# PSEUDO-UNIFORM SCORES
# ==============================================================================

def _require_joint(fit: CfFit) -> None:
    if fit.train.k < 2:
        raise ShapeError("Copula scores need at least two outcome columns.")


def pseudo_uniform_scores(fit: CfFit) -> np.ndarray:
    """u_ik = F̂_{Y_k|X,V,W}(y_ik | x_i, v̂_i, w_i): conditional PIT under each second stage."""
    _require_joint(fit)
    features = fit.second_stage_features()
    return np.column_stack([
        np.clip(model.cdf_pointwise(features, fit.train.y[:, k]), 0.0, 1.0)
        for k, model in enumerate(fit.second_stages)
    ])


def interventional_pseudo_scores(
    fit: CfFit,
    n_levels: int = SCORE_LEVELS,
    v_integration: VIntegration = VIntegration.EMPIRICAL,
    quadrature_nodes: int = 64,
) -> np.ndarray:
    """
    u_ik = F̂_{Y_k(x_i)}(y_ik): each observed outcome under the estimated
    marginal interventional CDF at its own treatment level. The CDF is
    evaluated on n_levels treatment levels spanning the training range and
    interpolated linearly in both x and y.
    """
    _require_joint(fit)
    x = fit.train.x
    levels = np.linspace(x.min(), x.max(), n_levels)
    grid = EvaluationGrid(x_grid=levels)

    position = np.interp(x, levels, np.arange(n_levels))
    lower = np.minimum(np.floor(position).astype(int), n_levels - 2)
    frac = position - lower
    rows = np.arange(x.size)

    scores = []
    for k in range(fit.train.k):
        icdf = interventional_cdf(fit, grid, k, v_integration=v_integration, quadrature_nodes=quadrature_nodes)
        y = fit.train.y[:, k]
        at_levels = np.array([np.interp(y, icdf.y_grid, row, left=0.0, right=1.0) for row in icdf.cdf])
        u = (1.0 - frac) * at_levels[lower, rows] + frac * at_levels[lower + 1, rows]
        scores.append(np.clip(u, 0.0, 1.0))
    logger.info("[COPULA] interventional pseudo-scores on %d treatment levels", n_levels)
    return np.column_stack(scores)


def copula_scores(fit: CfFit, mode: CopulaScoreMode, **kwargs) -> np.ndarray:
    if CopulaScoreMode(mode) == CopulaScoreMode.CONDITIONAL:
        return pseudo_uniform_scores(fit)
    return interventional_pseudo_scores(fit, **kwargs)


# ==============================================================================
# FITTING
# ==============================================================================

def nearest_correlation(matrix: np.ndarray) -> np.ndarray:
    """Eigenvalue floor, reconstruction and unit-diagonal renormalization."""
    sym = 0.5 * (matrix + matrix.T)
    values, vectors = np.linalg.eigh(sym)
    rebuilt = (vectors * np.maximum(values, EIGEN_FLOOR)) @ vectors.T
    scale = np.sqrt(np.diag(rebuilt))
    out = rebuilt / np.outer(scale, scale)
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 1.0)
    return np.clip(out, -1.0, 1.0)


def fit_gaussian_copula(u: np.ndarray) -> CopulaModel:
    """
    Correlation of the normal scores Φ^{-1}(rank / (n + 1)) of each column, so
    the fit only depends on the within-column ordering of the scores.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 2 or u.shape[1] < 2:
        raise ShapeError("Scores must be an n×K matrix with K >= 2.")
    n, k = u.shape
    if n < k + 2:
        raise InsufficientDataError(f"Gaussian copula needs n >= K + 2 = {k + 2} (got {n}).")
    if not np.all(np.isfinite(u)) or u.min() < 0.0 or u.max() > 1.0:
        raise DomainError("Pseudo-uniform scores must lie in [0, 1].")

    constant = np.flatnonzero(np.ptp(u, axis=0) == 0)
    if constant.size:
        raise DegenerateInputError(f"Score column(s) {constant.tolist()} are constant.")

    ranked = rankdata(u, axis=0) / (n + 1.0)
    raw = np.atleast_2d(np.corrcoef(ndtri(ranked), rowvar=False))
    correlation = nearest_correlation(raw)
    if np.linalg.eigvalsh(raw).min() < 1e-6:
        logger.warning("[COPULA] score correlation is near-singular; eigenvalues floored at %.0e", EIGEN_FLOOR)
    logger.info(
        "[COPULA] Gaussian copula fitted on n=%d, K=%d; off-diagonals %s",
        n, k, np.round(correlation[np.triu_indices(k, 1)], 4).tolist(),
    )
    return CopulaModel(kind=CopulaKind.GAUSSIAN, dimension=k, correlation=correlation)


def independence_copula(k: int) -> CopulaModel:
    return CopulaModel(kind=CopulaKind.INDEPENDENCE, dimension=k)


def fit_working_copula(
    fit: CfFit,
    kind: CopulaKind = CopulaKind.GAUSSIAN,
    mode: CopulaScoreMode = CopulaScoreMode.INTERVENTIONAL,
    **kwargs,
) -> CopulaModel:
    if CopulaKind(kind) == CopulaKind.INDEPENDENCE:
        return independence_copula(fit.train.k)
    return fit_gaussian_copula(copula_scores(fit, mode, **kwargs))


def joint_at(g: int, marginals: Sequence[InterventionalCdf], copula: CopulaModel) -> JointInterventional:
    """Joint law at grid level g from per-outcome marginal CDFs on a shared x grid."""
    return JointInterventional(
        x=float(marginals[0].x_grid[g]),
        marginals=[m.slice(g) for m in marginals],
        copula=copula,
    )


# ==============================================================================
# EVALUATION
# ==============================================================================

def _owens_t(h: float, a: float) -> float:
    # T(0, a) = arctan(a) / 2π, also for a = ±inf
    return float(np.arctan(a) / (2.0 * np.pi)) if h == 0.0 else float(owens_t(h, a))


def bivariate_normal_cdf(h: float, k: float, rho: float) -> float:
    """P(Z1 <= h, Z2 <= k) for standard normals with correlation rho (Owen's T expansion)."""
    h, k = np.float64(h), np.float64(k)
    if rho >= 1.0 - COMONOTONE_TOLERANCE:
        return float(ndtr(min(h, k)))
    if rho <= -1.0 + COMONOTONE_TOLERANCE:
        return float(max(0.0, ndtr(h) + ndtr(k) - 1.0))
    if not np.isfinite(h) or not np.isfinite(k):
        if h == -np.inf or k == -np.inf:
            return 0.0
        return float(ndtr(k) if h == np.inf else ndtr(h))

    if h == 0.0 and k == 0.0:
        return float(0.25 + np.arcsin(rho) / (2.0 * np.pi))
    root = np.sqrt(1.0 - rho * rho)
    with np.errstate(divide="ignore"):
        a_h = (k - rho * h) / (h * root)
        a_k = (h - rho * k) / (k * root)
    beta = 0.0 if h * k > 0 or (h * k == 0 and h + k >= 0) else 0.5
    value = 0.5 * (ndtr(h) + ndtr(k)) - _owens_t(h, a_h) - _owens_t(k, a_k) - beta
    return float(np.clip(value, 0.0, 1.0))


def _orthant_qmc(thresholds: np.ndarray, correlation: np.ndarray) -> float:
    m = thresholds.size
    points = qmc.Sobol(d=m, scramble=True, seed=QMC_SEED).random_base2(QMC_LOG2_POINTS)
    values, vectors = np.linalg.eigh(correlation)
    root = vectors * np.sqrt(np.maximum(values, 0.0))
    z = ndtri(points) @ root.T
    return float(np.mean(np.all(z <= thresholds, axis=1)))


def marginal_values(j: JointInterventional, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != j.k:
        raise ShapeError(f"Point has {y.size} coordinates; the joint law has K={j.k}.")
    return np.array([
        np.interp(y[i], m.y_grid, m.cdf[0], left=0.0, right=1.0) for i, m in enumerate(j.marginals)
    ])


def joint_cdf(j: JointInterventional, y: np.ndarray) -> float:
    """C(F_1(y_1), ..., F_K(y_K)) under the working copula."""
    u = marginal_values(j, y)
    if j.copula.kind == CopulaKind.INDEPENDENCE:
        return float(np.prod(u))
    if np.any(u <= 0.0):
        return 0.0

    active = np.flatnonzero(u < 1.0)
    if active.size == 0:
        return 1.0
    if active.size == 1:
        return float(u[active[0]])

    thresholds = ndtri(u[active])
    correlation = j.copula.correlation[np.ix_(active, active)]
    if active.size == 2:
        return bivariate_normal_cdf(thresholds[0], thresholds[1], correlation[0, 1])
    return _orthant_qmc(thresholds, correlation)


def sample_joint(j: JointInterventional, m: int, seed: int) -> np.ndarray:
    """m draws: Gaussian (or independent) uniforms pushed through each marginal inverse."""
    if m < 1:
        raise DomainError("m must be at least 1.")
    rng = np.random.default_rng(seed)
    k = j.k
    if j.copula.kind == CopulaKind.INDEPENDENCE:
        u = rng.uniform(size=(m, k))
    else:
        correlation = np.clip(j.copula.correlation, -SAMPLING_CORRELATION_CAP, SAMPLING_CORRELATION_CAP)
        np.fill_diagonal(correlation, 1.0)
        values, vectors = np.linalg.eigh(correlation)
        root = vectors * np.sqrt(np.maximum(values, 0.0))
        u = ndtr(rng.standard_normal((m, k)) @ root.T)
    return np.column_stack([
        inverse_row(marginal.cdf[0], marginal.y_grid, u[:, i]) for i, marginal in enumerate(j.marginals)
    ])


def joint_samples_on_grid(
    marginals: List[InterventionalCdf], copula: CopulaModel, m: int, seed: int
) -> np.ndarray:
    """Draw blocks (G×m×K) for every level of a shared x grid."""
    return np.stack([
        sample_joint(joint_at(g, marginals, copula), m, derive_seed(seed, g))
        for g in range(marginals[0].x_grid.size)
    ])
