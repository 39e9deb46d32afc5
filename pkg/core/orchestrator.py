"""
Benchmark engine: independent replications (simulate -> estimate -> oracle ->
score) fanned out over a process pool and collected in task order.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from core.estimation import EstimatorResult, estimate
from core.exceptions import StageError, TabCFError
from models.enums import EstimatorKind, FunctionalKind
from models.interventional import EvaluationGrid
from models.run_config import RunConfig
from models.reports import ScoreReport
from models.scm_setting import OracleCurve, ScmSetting
from services.monitor_service import MonitorService
from services.simulation_service import derive_seed, gen_observational, oracle_curve, reference_treatments
from utils.stats_analysis import StatisticalAnalyzer

logger = logging.getLogger(__name__)

# Sub-stream indices below a replication seed
ORACLE_STREAM = 101
JOINT_SAMPLE_STREAM = 102
PROJECTION_STREAM = 103


@dataclass
class ReplicationTask:
    index: int
    setting: ScmSetting
    replication: int
    seed: int
    config: RunConfig


@dataclass
class ReplicationResult:
    index: int
    setting: str
    replication: int
    seed: int
    scores: List[Dict[str, Any]] = field(default_factory=list)
    timings: List[Dict[str, Any]] = field(default_factory=list)
    failures: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def succeeded(self) -> bool:
        return not self.failures


def evaluation_grid(config: RunConfig, setting: ScmSetting, reference_x: np.ndarray) -> EvaluationGrid:
    """Joint laws use the fixed equally spaced grid; marginal curves the trimmed one."""
    if setting.k >= 2:
        lo, hi = config.grid.joint_range
        return EvaluationGrid.equally_spaced(lo, hi, config.grid.joint_x, config.grid.n_y)
    return EvaluationGrid.from_reference(
        reference_x,
        n_x=config.grid.n_x,
        n_y=config.grid.n_y,
        lower=config.grid.lower_quantile,
        upper=config.grid.upper_quantile,
    )


def build_oracles(
    config: RunConfig, setting: ScmSetting, grid: EvaluationGrid, seed: int
) -> Dict[FunctionalKind, OracleCurve]:
    oracle_seed = derive_seed(seed, ORACLE_STREAM)
    if setting.k >= 2:
        return {
            FunctionalKind.JOINT: oracle_curve(
                setting, grid, FunctionalKind.JOINT, config.oracle.joint_samples, oracle_seed
            )
        }
    oracles = {}
    if FunctionalKind.MEAN in config.functionals:
        oracles[FunctionalKind.MEAN] = oracle_curve(
            setting, grid, FunctionalKind.MEAN, config.oracle.mc_draws, oracle_seed
        )
    if FunctionalKind.QUANTILE in config.functionals:
        oracles[FunctionalKind.QUANTILE] = oracle_curve(
            setting, grid, FunctionalKind.QUANTILE, config.oracle.mc_draws, oracle_seed, taus=config.taus
        )
    return oracles


def score_result(
    result: EstimatorResult,
    oracles: Dict[FunctionalKind, OracleCurve],
    config: RunConfig,
    seed: int,
    analyzer: StatisticalAnalyzer,
) -> List[ScoreReport]:
    """Grid MSE for marginal curves, mean sliced Wasserstein over the grid for joint laws."""
    reports: List[ScoreReport] = []

    if FunctionalKind.JOINT in oracles:
        if result.copula is None:
            logger.warning(f"[BENCH] {result.estimator.value} has no joint law; not scored")
            return reports
        draws = oracles[FunctionalKind.JOINT].draws
        samples = result.joint_samples(config.oracle.joint_samples, derive_seed(seed, JOINT_SAMPLE_STREAM))
        distances = np.array([
            analyzer.sliced_wasserstein(
                samples[g], draws[g], config.oracle.sw_projections, derive_seed(seed, PROJECTION_STREAM, g)
            )
            for g in range(draws.shape[0])
        ])
        reports.append(ScoreReport(
            metric="sliced_wasserstein", errors=distances, aggregate=float(distances.mean()), seeds=[seed]
        ))
        return reports

    scored = [f for f in config.functionals if f in oracles]
    curves = result.curves(scored, config.taus)
    if "mean" in curves:
        reports.append(analyzer.grid_mse(
            curves["mean"], oracles[FunctionalKind.MEAN].values, "mean_mse", seeds=[seed]
        ))
    if FunctionalKind.QUANTILE in oracles:
        oracle = oracles[FunctionalKind.QUANTILE]
        for tau in config.taus:
            label = f"q{tau:g}"
            if label in curves:
                reports.append(analyzer.grid_mse(
                    curves[label], oracle.quantile_curve(tau), "quantile_mse", tau=tau, seeds=[seed]
                ))
    return reports


def run_replication(task: ReplicationTask) -> ReplicationResult:
    """One replication of one setting; estimator failures are recorded, never raised."""
    config, setting, seed = task.config, task.setting, task.seed
    result = ReplicationResult(
        index=task.index, setting=setting.name, replication=task.replication, seed=seed
    )
    base = {"setting": setting.name, "n": config.n, "seed": seed}
    monitor = MonitorService({"setting": setting.name, "seed": seed})
    analyzer = StatisticalAnalyzer(config.diagnostics.permutations, config.diagnostics.max_points)

    try:
        with monitor.stage("simulate"):
            train = gen_observational(setting, config.n, seed)
            reference = reference_treatments(setting, config.n_eval or config.n, seed)
            grid = evaluation_grid(config, setting, reference)
        with monitor.stage("oracle"):
            oracles = build_oracles(config, setting, grid, seed)
    except TabCFError as e:
        result.failures.append({**base, "estimator": "", "stage": "simulate", "error": str(e)})
        return result
    finally:
        result.timings.extend(
            {**base, "estimator": "", "stage": stage, "seconds": seconds}
            for stage, seconds in monitor.timings.items()
        )

    for estimator in config.estimators:
        estimator = EstimatorKind(estimator)
        if estimator == EstimatorKind.TABCF_INDEPENDENCE and setting.k == 1:
            continue
        labels = {**base, "estimator": estimator.value, "backbone": config.backbone.kind.value}
        est_monitor = MonitorService({"setting": setting.name, "seed": seed, "estimator": estimator.value})
        try:
            fitted = estimate(estimator, train, grid, config, seed, est_monitor, joint=setting.k >= 2)
            with est_monitor.stage("score"):
                reports = score_result(fitted, oracles, config, seed, analyzer)
        except TabCFError as e:
            stage = e.stage if isinstance(e, StageError) else "score"
            logger.error(f"[BENCH] {setting.name} seed {seed} {estimator.value} failed in {stage}: {e}")
            result.failures.append({**labels, "stage": stage, "error": str(e)})
            reports = []
        for report in reports:
            result.scores.append({
                "setting": setting.name,
                "estimator": estimator.value,
                "backbone": config.backbone.kind.value,
                "n": config.n,
                "seed": seed,
                "metric": report.metric,
                "tau": report.tau,
                "value": report.aggregate,
            })
        result.timings.extend(
            {**base, "estimator": estimator.value, "stage": stage, "seconds": seconds}
            for stage, seconds in est_monitor.timings.items()
        )
    return result


class BenchmarkOrchestrator:
    """
    Runs every (setting, replication) pair. Results come back in task order
    regardless of completion order, so outputs do not depend on scheduling.
    """

    def __init__(self, config: RunConfig, monitor: Optional[MonitorService] = None):
        self.config = config
        self.logger = logging.getLogger(__name__)
        self.monitor = monitor or MonitorService({"command": "benchmark"})
        self.workers = config.workers or os.cpu_count() or 1

    def tasks(self) -> List[ReplicationTask]:
        tasks = []
        for setting in self.config.benchmark_settings():
            for replication, seed in enumerate(self.config.seeds()):
                tasks.append(ReplicationTask(
                    index=len(tasks), setting=setting, replication=replication, seed=seed, config=self.config
                ))
        return tasks

    def _record(self, task: ReplicationTask, result: ReplicationResult) -> None:
        error = "; ".join(f["error"] for f in result.failures) or None
        self.monitor.log_replication(task.replication, task.seed, result.succeeded, error)

    def _crashed(self, task: ReplicationTask, error: Exception) -> ReplicationResult:
        self.logger.error(f"[BENCH] replication {task.index} crashed: {error}", exc_info=error)
        return ReplicationResult(
            index=task.index,
            setting=task.setting.name,
            replication=task.replication,
            seed=task.seed,
            failures=[{
                "setting": task.setting.name,
                "n": task.config.n,
                "seed": task.seed,
                "estimator": "",
                "stage": "replication",
                "error": f"{type(error).__name__}: {error}",
            }],
        )

    def run(self) -> List[ReplicationResult]:
        tasks = self.tasks()
        workers = min(self.workers, len(tasks))
        self.logger.info(f"[BENCH] {len(tasks)} replications on {workers} worker(s)")

        results: Dict[int, ReplicationResult] = {}
        if workers <= 1:
            for task in tasks:
                try:
                    results[task.index] = run_replication(task)
                except Exception as e:
                    results[task.index] = self._crashed(task, e)
                self._record(task, results[task.index])
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = {pool.submit(run_replication, task): task for task in tasks}
                for future in as_completed(futures):
                    task = futures[future]
                    try:
                        results[task.index] = future.result()
                    except Exception as e:
                        results[task.index] = self._crashed(task, e)
                    self._record(task, results[task.index])

        failed = sum(1 for r in results.values() if not r.succeeded)
        self.logger.info(f"[BENCH] finished: {len(tasks) - failed} ok, {failed} with failures")
        return [results[i] for i in range(len(tasks))]
