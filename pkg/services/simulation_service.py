"""
Simulation Service: synthetic IV designs and Monte-Carlo oracles.

Every generator is a pure function of (setting, size, seed). A root seed is
split into named substreams so adding outcomes or covariates never perturbs
the instrument, confounder or treatment draws.

Structural equations (H, ε_X, ε_Y ~ N(0,1), Z ~ N(1.5, 0.75²) or Unif(0, 3)):
    T1             X = Z + H + ε_X
    T2             X = m(Z) + s(Z)(H + ε_X),  m(z) = 2z + z²/4,  s(z) = 1 + 0.15z
    weak-T1        X = 1.5 + κ(Z − 1.5) + H + ε_X
    weak-T2        X = m̄ + κ(m(Z) − m̄) + (s̄ + κ(s(Z) − s̄))(H + ε_X)
    O1             1{X≤1}(5.5 + 2X + 3H + ε)/5 + 1{X>1} log((2X + H)² + ε²)
    O2             3 sin(2X) + 2X − 3H + ε
    O3             1 + 2X + cos(2X) + XH − H + ε
    linear-sanity  Y = 2X − 3H + ε
    BO1            (X − 3H + ε1, 0.5X − H + ε2)
    BO2..BO4       (f(X + H + ε1), f(X + H + ε2)/2) with f = ψ1, h1, s1
Covariate augmentation draws W ~ N(0,1) and adds 0.5W to X and to every Y.
"""

import logging
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.special import ndtr

from core.exceptions import ConfigurationError, DomainError
from models.dataset import Dataset
from models.enums import FunctionalKind, InstrumentLaw, OutcomeModel, TreatmentModel
from models.interventional import EvaluationGrid
from models.scm_setting import OracleCurve, ScmSetting

logger = logging.getLogger(__name__)

INSTRUMENT_MEAN = 1.5
INSTRUMENT_SD = 0.75
UNIFORM_BOUNDS = (0.0, 3.0)
COVARIATE_EFFECT = 0.5
LOG_FLOOR = 1e-12

# E[m(Z)] and E[s(Z)] under Z ~ N(1.5, 0.75²)
M_BAR = 2 * 1.5 + 0.25 * (1.5**2 + 0.75**2)
S_BAR = 1 + 0.15 * 1.5

STREAMS = ("instrument", "confounder", "treatment", "outcome", "covariate")

OBSERVATIONAL = 0
INTERVENTIONAL = 1
REFERENCE = 2


def _streams(seed: int, domain: int) -> Dict[str, np.random.Generator]:
    return {
        name: np.random.default_rng(np.random.SeedSequence([seed, domain, index]))
        for index, name in enumerate(STREAMS)
    }


def derive_seed(seed: int, *path: int) -> int:
    """Child integer seed for (seed, path...); used for per-grid-point oracle draws."""
    return int(np.random.SeedSequence([seed, *path]).generate_state(1)[0])


# ==============================================================================
# SCALAR MAPS
# ==============================================================================

def quadratic_mean(z):
    return 2.0 * z + 0.25 * z**2


def linear_scale(z):
    return 1.0 + 0.15 * z


def psi1(w):
    return 2.0 * w + 3.0 * np.sin(2.0 * w)


def psi2(w):
    return 0.5 * psi1(w)


def h1(w):
    w = np.asarray(w, dtype=float)
    return np.where(w < 0, w, np.where(w <= 1, 2.0 * w, 2.0 + 0.5 * (w - 1.0)))


def h2(w):
    return 0.5 * h1(w)


def s1(w):
    return np.logaddexp(0.0, 2.0 * np.asarray(w, dtype=float))


def s2(w):
    return 0.5 * s1(w)


PRE_ADDITIVE = {
    OutcomeModel.BO2: psi1,
    OutcomeModel.BO3: h1,
    OutcomeModel.BO4: s1,
}


# ==============================================================================
# STRUCTURAL EQUATIONS
# ==============================================================================

def _treatment_location_scale(setting: ScmSetting, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """X = location(Z) + scale(Z)·η with η = H + ε_X (before the covariate shift)."""
    kind = setting.treatment
    ones = np.ones_like(z)
    if kind in (TreatmentModel.T1, TreatmentModel.LINEAR_SANITY):
        return z, ones
    if kind == TreatmentModel.T2:
        return quadratic_mean(z), linear_scale(z)
    if kind == TreatmentModel.WEAK_T1:
        return INSTRUMENT_MEAN + setting.kappa * (z - INSTRUMENT_MEAN), ones
    if kind == TreatmentModel.WEAK_T2:
        kappa = setting.kappa
        return (
            M_BAR + kappa * (quadratic_mean(z) - M_BAR),
            S_BAR + kappa * (linear_scale(z) - S_BAR),
        )
    raise ConfigurationError(f"Unknown treatment model '{kind}'.")


def structural_outcome(
    setting: ScmSetting,
    x: np.ndarray,
    h: np.ndarray,
    eps: np.ndarray,
    w: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Outcome equations shared by observational and interventional sampling.
    eps is length n for univariate outcomes and n×2 for bivariate ones.
    Returns an n×K matrix.
    """
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    eps = np.asarray(eps, dtype=float)
    kind = setting.outcome

    if kind == OutcomeModel.O1:
        low = (5.5 + 2.0 * x + 3.0 * h + eps) / 5.0
        high = np.log(np.maximum((2.0 * x + h) ** 2 + eps**2, LOG_FLOOR))
        y = np.where(x <= 1.0, low, high)[:, None]
    elif kind == OutcomeModel.O2:
        y = (3.0 * np.sin(2.0 * x) + 2.0 * x - 3.0 * h + eps)[:, None]
    elif kind == OutcomeModel.O3:
        y = (1.0 + 2.0 * x + np.cos(2.0 * x) + x * h - h + eps)[:, None]
    elif kind == OutcomeModel.LINEAR_SANITY:
        y = (2.0 * x - 3.0 * h + eps)[:, None]
    elif kind == OutcomeModel.BO1:
        y = np.column_stack([x - 3.0 * h + eps[:, 0], 0.5 * x - h + eps[:, 1]])
    elif kind in PRE_ADDITIVE:
        f = PRE_ADDITIVE[kind]
        y = np.column_stack([f(x + h + eps[:, 0]), 0.5 * f(x + h + eps[:, 1])])
    else:
        raise ConfigurationError(f"Unknown outcome model '{kind}'.")

    if w is not None and setting.covariate_augmented:
        y = y + COVARIATE_EFFECT * np.asarray(w, dtype=float).reshape(-1)[:, None]
    return y


def _outcome_noise(setting: ScmSetting, rng: np.random.Generator, n: int) -> np.ndarray:
    if setting.k == 1:
        return rng.standard_normal(n)
    e = rng.standard_normal((n, 2))
    rho = setting.rho_eps
    return np.column_stack([e[:, 0], rho * e[:, 0] + np.sqrt(1.0 - rho**2) * e[:, 1]])


def _instrument(setting: ScmSetting, rng: np.random.Generator, n: int) -> np.ndarray:
    if setting.instrument_law == InstrumentLaw.UNIFORM:
        return rng.uniform(*UNIFORM_BOUNDS, size=n)
    return INSTRUMENT_MEAN + INSTRUMENT_SD * rng.standard_normal(n)


def _covariate(setting: ScmSetting, rng: np.random.Generator, n: int) -> np.ndarray:
    if not setting.covariate_augmented:
        return np.empty((n, 0))
    return rng.standard_normal((n, 1))


def _first_stage(setting: ScmSetting, streams: Dict[str, np.random.Generator], n: int):
    z = _instrument(setting, streams["instrument"], n)
    h = streams["confounder"].standard_normal(n)
    eps_x = streams["treatment"].standard_normal(n)
    w = _covariate(setting, streams["covariate"], n)
    location, scale = _treatment_location_scale(setting, z)
    x = location + scale * (h + eps_x)
    if w.shape[1]:
        x = x + COVARIATE_EFFECT * w[:, 0]
    return w, z, h, x


# ==============================================================================
# SAMPLERS
# ==============================================================================

def gen_observational(setting: ScmSetting, n: int, seed: int) -> Dataset:
    """n i.i.d. observational rows (W, Z, X, Y) of the setting."""
    if n < 1:
        raise DomainError("n must be at least 1.")
    streams = _streams(seed, OBSERVATIONAL)
    w, z, h, x = _first_stage(setting, streams, n)
    eps = _outcome_noise(setting, streams["outcome"], n)
    y = structural_outcome(setting, x, h, eps, w[:, 0] if w.shape[1] else None)
    return Dataset(w=w, z=z, x=x, y=y)


def reference_treatments(setting: ScmSetting, n: int, seed: int) -> np.ndarray:
    """Held-out treatment draws used to trim the evaluation grid."""
    _, _, _, x = _first_stage(setting, _streams(seed, REFERENCE), n)
    return x


def sample_interventional(setting: ScmSetting, x: float, m: int, seed: int) -> np.ndarray:
    """m draws of Y under do(X = x): H, ε and W fresh, first stage bypassed (m×K)."""
    if m < 1:
        raise DomainError("m must be at least 1.")
    streams = _streams(seed, INTERVENTIONAL)
    h = streams["confounder"].standard_normal(m)
    eps = _outcome_noise(setting, streams["outcome"], m)
    w = _covariate(setting, streams["covariate"], m)
    return structural_outcome(setting, np.full(m, float(x)), h, eps, w[:, 0] if w.shape[1] else None)


def oracle_curve(
    setting: ScmSetting,
    grid: EvaluationGrid,
    functional: FunctionalKind,
    mc_draws: int = 5000,
    seed: int = 0,
    taus=(0.5,),
) -> OracleCurve:
    """
    Monte-Carlo ground truth at every grid level.

    mean: per-outcome sample mean (G, or G×K); quantile: type-7 order-statistic
    quantiles of the first outcome (G×len(taus)); joint: the raw draw block
    (G×mc_draws×K).
    """
    if mc_draws < 100:
        raise DomainError("mc_draws must be at least 100.")
    functional = FunctionalKind(functional)
    x_grid = grid.x_grid
    blocks = [
        sample_interventional(setting, x, mc_draws, derive_seed(seed, g))
        for g, x in enumerate(x_grid)
    ]

    values = None
    draws = None
    tau_list = []
    if functional == FunctionalKind.MEAN:
        values = np.array([block.mean(axis=0) for block in blocks])
        if setting.k == 1:
            values = values[:, 0]
    elif functional == FunctionalKind.QUANTILE:
        tau_list = [float(t) for t in taus]
        values = np.array([np.quantile(block[:, 0], tau_list, method="linear") for block in blocks])
    elif functional == FunctionalKind.JOINT:
        draws = np.stack(blocks)
    else:
        raise ConfigurationError(f"No Monte-Carlo oracle for functional '{functional.value}'.")

    logger.debug("Oracle %s on %s: %d levels x %d draws", functional.value, setting.name, x_grid.size, mc_draws)
    return OracleCurve(
        setting=setting.name,
        functional=functional,
        x_grid=x_grid,
        values=values,
        taus=tau_list,
        draws=draws,
        mc_draws=mc_draws,
        seed=seed,
    )


# ==============================================================================
# ANALYTIC QUANTITIES
# ==============================================================================

def oracle_first_stage_cdf(
    setting: ScmSetting, z: np.ndarray, x: np.ndarray, w: Optional[np.ndarray] = None
) -> np.ndarray:
    """True F_{X|Z,W}(x | z, w); η = H + ε_X ~ N(0, 2)."""
    z = np.asarray(z, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    location, scale = _treatment_location_scale(setting, z)
    if setting.covariate_augmented:
        if w is None:
            raise DomainError("Covariate-augmented settings need w for the first-stage CDF.")
        location = location + COVARIATE_EFFECT * np.asarray(w, dtype=float).reshape(-1)
    u = (x - location) / (scale * np.sqrt(2.0))
    return np.where(scale > 0, ndtr(u), 1.0 - ndtr(u))


def eta_support(setting: ScmSetting, x: float, w: float = 0.0) -> Tuple[float, float]:
    """
    supp(η | X = x, W = w). Unbounded under the normal instrument; an interval
    under Unif(0, 3), e.g. [x − 3, x] for the additive linear treatment.
    """
    if setting.instrument_law == InstrumentLaw.NORMAL:
        return (-np.inf, np.inf)
    shifted = x - (COVARIATE_EFFECT * w if setting.covariate_augmented else 0.0)
    z = np.linspace(*UNIFORM_BOUNDS, 3001)
    location, scale = _treatment_location_scale(setting, z)
    eta = (shifted - location) / scale
    return (float(eta.min()), float(eta.max()))
