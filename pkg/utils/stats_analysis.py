"""
Scoring and control-function diagnostics.
"""

import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats
from scipy.spatial.distance import pdist, squareform

from core.exceptions import (
    DegenerateInputError,
    DomainError,
    InsufficientStratificationError,
    ShapeError,
)
from models.dataset import Dataset
from models.interventional import ControlValues
from models.reports import DiagnosticReport, ScoreReport, StratumResult

KS_CRITICAL = 1.36
SIGNIFICANCE = 0.05
STRATUM_REJECTION_LIMIT = 0.15
MAX_W_STRATIFIED = 2


def _as_columns(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return values.reshape(-1, 1) if values.ndim == 1 else values


def _centered_distances(values: np.ndarray) -> np.ndarray:
    d = squareform(pdist(_as_columns(values), "euclidean"))
    return d - d.mean(axis=0, keepdims=True) - d.mean(axis=1, keepdims=True) + d.mean()


class StatisticalAnalyzer:
    """Grid errors, sliced Wasserstein distances and the advisory CF checks."""

    def __init__(self, permutations: int = 199, max_points: Optional[int] = 2000):
        self.logger = logging.getLogger(__name__)
        self.permutations = permutations
        self.max_points = max_points

    # ---------------------------------------------------------------------
    # ERRORS AGAINST AN ORACLE
    # ---------------------------------------------------------------------
    def grid_mse(
        self,
        estimate: np.ndarray,
        oracle: np.ndarray,
        metric: str = "mse",
        tau: Optional[float] = None,
        seeds: Sequence[int] = (),
    ) -> ScoreReport:
        estimate = np.asarray(estimate, dtype=float).reshape(-1)
        oracle = np.asarray(oracle, dtype=float).reshape(-1)
        if estimate.shape != oracle.shape:
            raise ShapeError(f"Estimate has {estimate.size} points, oracle has {oracle.size}.")
        errors = (estimate - oracle) ** 2
        return ScoreReport(
            metric=metric,
            errors=errors,
            aggregate=float(np.mean(errors)),
            tau=tau,
            seeds=list(seeds),
            replications=max(1, len(seeds)),
        )

    def sliced_wasserstein(
        self, a: np.ndarray, b: np.ndarray, projections: int = 128, seed: int = 0
    ) -> float:
        """Mean 1-D Wasserstein-1 distance over random unit directions."""
        a = _as_columns(a)
        b = _as_columns(b)
        if a.shape[1] == 0 or a.shape[1] != b.shape[1]:
            raise ShapeError(f"Samples must share a positive dimension (got {a.shape[1]} and {b.shape[1]}).")
        if a.shape[0] == 0 or b.shape[0] == 0:
            raise ShapeError("Samples must be non-empty.")
        directions = np.random.default_rng(seed).standard_normal((projections, a.shape[1]))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        pa = a @ directions.T
        pb = b @ directions.T
        return float(np.mean([
            stats.wasserstein_distance(pa[:, i], pb[:, i]) for i in range(projections)
        ]))

    # ---------------------------------------------------------------------
    # CONTROL-VARIABLE DIAGNOSTICS
    # ---------------------------------------------------------------------
    def pit_uniformity(self, v: Union[ControlValues, np.ndarray]) -> Tuple[float, float, str]:
        """One-sample KS against Unif(0,1) with the 95% threshold 1.36/√n."""
        values = v.v if isinstance(v, ControlValues) else np.asarray(v, dtype=float).reshape(-1)
        if values.size < 5:
            raise DomainError("PIT check needs at least 5 control values.")
        if values.min() < 0.0 or values.max() > 1.0:
            raise DomainError("Control values must lie in [0, 1].")
        statistic = float(stats.kstest(values, "uniform").statistic)
        threshold = KS_CRITICAL / np.sqrt(values.size)
        verdict = "pass" if statistic < threshold else "warn"
        self.logger.info(f"[DIAG] PIT uniformity KS={statistic:.4f} (threshold {threshold:.4f}) -> {verdict}")
        return statistic, float(threshold), verdict

    def distance_correlation(
        self,
        v: np.ndarray,
        z: np.ndarray,
        permutations: Optional[int] = None,
        seed: int = 0,
    ) -> Tuple[float, float]:
        """
        Biased (V-statistic) distance correlation and its permutation p-value
        (1 + #{permuted >= observed}) / (1 + permutations). Inputs may be
        vectors or n×K matrices.
        """
        permutations = self.permutations if permutations is None else permutations
        a_values = _as_columns(v)
        b_values = _as_columns(z)
        n = a_values.shape[0]
        if b_values.shape[0] != n:
            raise ShapeError("Distance correlation inputs must have equal length.")
        if n < 5:
            raise DomainError("Distance correlation needs at least 5 points.")
        if permutations < 99:
            raise DomainError("Use at least 99 permutations.")
        for name, values in (("first", a_values), ("second", b_values)):
            if np.all(np.ptp(values, axis=0) == 0):
                raise DegenerateInputError(f"The {name} input of distance correlation is constant.")

        a = _centered_distances(a_values)
        b = _centered_distances(b_values)
        scale = np.sqrt(np.mean(a * a) * np.mean(b * b))

        def dcor(b_matrix: np.ndarray) -> float:
            return float(np.sqrt(max(np.mean(a * b_matrix), 0.0) / scale))

        observed = min(dcor(b), 1.0)
        rng = np.random.default_rng(seed)
        exceed = 0
        for _ in range(permutations):
            order = rng.permutation(n)
            if dcor(b[np.ix_(order, order)]) >= observed:
                exceed += 1
        p_value = (1 + exceed) / (1 + permutations)
        return observed, float(p_value)

    def relevance_hint(self, v: np.ndarray, x: np.ndarray) -> float:
        """Spearman(V̂, X); values near 1 mean V̂ is just the marginal rank of X."""
        return float(stats.spearmanr(v, x).statistic)

    def _subsample(self, n: int, seed: int) -> np.ndarray:
        if self.max_points is None or n <= self.max_points:
            return np.arange(n)
        self.logger.info(f"[DIAG] distance correlation on a random subsample of {self.max_points} of {n} rows")
        return np.sort(np.random.default_rng(seed).choice(n, self.max_points, replace=False))

    def conditional_independence_check(
        self,
        ds: Dataset,
        v: ControlValues,
        bins: int = 4,
        permutations: Optional[int] = None,
        seed: int = 0,
        min_stratum: int = 20,
    ) -> DiagnosticReport:
        """
        Y ⫫ Z | (X, V̂, W) checked stratum by stratum: equal-mass bins on X and
        V̂ (and median splits of W when p <= 2), distance correlation of (Y, Z)
        inside every stratum with at least min_stratum rows.
        """
        if bins < 1:
            raise DomainError("bins must be at least 1.")
        if v.n != ds.n:
            raise ShapeError("Control values do not match the dataset.")

        approximate = bins < 2 or ds.p > MAX_W_STRATIFIED
        labels = [self._equal_mass_bins(ds.x, bins), self._equal_mass_bins(v.v, bins)]
        if 0 < ds.p <= MAX_W_STRATIFIED:
            labels.extend((ds.w[:, j] > np.median(ds.w[:, j])).astype(int) for j in range(ds.p))
        elif ds.p > MAX_W_STRATIFIED:
            self.logger.warning(
                f"[DIAG] p={ds.p} covariates: W is not stratified, the check is approximate"
            )
        if bins < 2:
            self.logger.warning("[DIAG] bins=1 pools all (X, V) values; the check is approximate")

        keys = np.column_stack(labels)
        strata: List[StratumResult] = []
        for index, key in enumerate(np.unique(keys, axis=0)):
            members = np.flatnonzero(np.all(keys == key, axis=1))
            label = "/".join(str(int(k)) for k in key)
            if members.size < min_stratum:
                strata.append(StratumResult(label=label, size=int(members.size), skipped=True))
                continue
            try:
                dcor, p_value = self.distance_correlation(
                    ds.y[members], ds.z[members], permutations, seed=seed + index
                )
            except DegenerateInputError:
                strata.append(StratumResult(label=label, size=int(members.size), skipped=True))
                continue
            strata.append(StratumResult(label=label, size=int(members.size), dcor=dcor, p_value=p_value))

        retained = [s for s in strata if not s.skipped]
        if not retained:
            raise InsufficientStratificationError(
                f"No stratum has at least {min_stratum} rows; use fewer bins or more data."
            )
        fraction = sum(1 for s in retained if s.p_value < SIGNIFICANCE) / len(retained)
        verdict = "pass" if fraction <= STRATUM_REJECTION_LIMIT else "warn"
        self.logger.info(
            f"[DIAG] conditional independence: {len(retained)}/{len(strata)} strata, "
            f"rejection fraction {fraction:.3f} -> {verdict}"
        )
        return DiagnosticReport(
            strata=strata,
            rejection_fraction=fraction,
            verdicts={"conditional_independence": verdict},
            approximate=approximate,
        )

    @staticmethod
    def _equal_mass_bins(values: np.ndarray, bins: int) -> np.ndarray:
        if bins < 2:
            return np.zeros(values.size, dtype=int)
        edges = np.quantile(values, np.linspace(0.0, 1.0, bins + 1)[1:-1])
        return np.searchsorted(edges, values, side="right")

    def control_diagnostics(
        self,
        ds: Dataset,
        v: ControlValues,
        seed: int = 0,
        conditional: bool = False,
        bins: int = 4,
        min_stratum: int = 20,
    ) -> DiagnosticReport:
        """PIT uniformity, V̂ ⫫ Z, the relevance hint and optionally the stratified check."""
        ks, threshold, ks_verdict = self.pit_uniformity(v)

        idx = self._subsample(ds.n, seed)
        dcor, p_value = self.distance_correlation(v.v[idx], ds.z[idx], seed=seed)
        dcor_verdict = "pass" if p_value >= SIGNIFICANCE else "warn"
        self.logger.info(f"[DIAG] V-Z distance correlation {dcor:.4f}, p={p_value:.4f} -> {dcor_verdict}")

        hint = self.relevance_hint(v.v, ds.x)
        report = DiagnosticReport(
            ks_statistic=ks,
            ks_threshold=threshold,
            dcor=dcor,
            dcor_p_value=p_value,
            relevance_hint=hint,
            verdicts={"pit_uniformity": ks_verdict, "instrument_independence": dcor_verdict},
        )
        if not conditional:
            return report

        stratified = self.conditional_independence_check(ds, v, bins=bins, seed=seed, min_stratum=min_stratum)
        return report.model_copy(update={
            "strata": stratified.strata,
            "rejection_fraction": stratified.rejection_fraction,
            "verdicts": {**report.verdicts, **stratified.verdicts},
            "approximate": stratified.approximate,
        })
