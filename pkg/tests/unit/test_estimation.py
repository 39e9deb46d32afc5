"""
Unit tests for estimator dispatch, scoring and single replications.
"""

import numpy as np
import pytest

from core.estimation import EstimatorResult, estimate
from core.exceptions import StageError
from core.orchestrator import (
    BenchmarkOrchestrator,
    ReplicationTask,
    build_oracles,
    evaluation_grid,
    run_replication,
    score_result,
)
from models.backbone_config import BackboneConfig
from models.enums import BackboneKind, CopulaKind, EstimatorKind, FunctionalKind
from models.interventional import EvaluationGrid
from models.run_config import GridSettings, OracleSettings, RunConfig
from models.scm_setting import ScmSetting
from services.monitor_service import MonitorService
from services.simulation_service import gen_observational
from tests.fixtures.mock_data import linear_dataset
from utils.stats_analysis import StatisticalAnalyzer

LINEAR = ScmSetting(treatment="linear-sanity", outcome="linear-sanity")
BIVARIATE = ScmSetting(treatment="T1", outcome="BO1", rho_eps=0.5)


def _config(**kwargs) -> RunConfig:
    values = dict(
        setting=LINEAR,
        n=400,
        grid=GridSettings(n_x=10, n_y=128, joint_x=4),
        oracle=OracleSettings(mc_draws=300, joint_samples=300, sw_projections=8),
        functionals=[FunctionalKind.MEAN, FunctionalKind.QUANTILE],
        taus=[0.25, 0.75],
        workers=1,
    )
    values.update(kwargs)
    return RunConfig(**values)


@pytest.fixture
def grid():
    return EvaluationGrid.equally_spaced(0.5, 2.5, 6, n_y=128)


class TestEstimate:
    """One estimator end to end on a training sample."""

    def test_tabcf_stages_and_curves(self, grid):
        monitor = MonitorService()
        result = estimate(EstimatorKind.TABCF, linear_dataset(n=400), grid, _config(), seed=0, monitor=monitor)

        assert {"U1", "U2", "U3"} <= set(monitor.timings)
        assert result.has_distribution
        assert set(result.models) == {"first_stage", "second_stage_y1"}
        curves = result.curves([FunctionalKind.MEAN, FunctionalKind.QUANTILE], [0.25, 0.75])
        assert sorted(curves) == ["mean", "q0.25", "q0.75"]
        assert curves["mean"].shape == (6,)

    def test_linear_cf_only_estimates_mean(self, grid):
        result = estimate(EstimatorKind.LINEAR_CF, linear_dataset(n=400), grid, _config(), seed=0)

        assert not result.has_distribution
        assert list(result.curves([FunctionalKind.MEAN, FunctionalKind.GINI], [0.5])) == ["mean"]
        assert result.curves([FunctionalKind.QUANTILE], [0.5]) == {}

    def test_naive_has_named_models(self, grid):
        result = estimate(EstimatorKind.NAIVE, linear_dataset(n=400), grid, _config(), seed=0)

        assert list(result.models) == ["naive-y1"]
        assert result.copula is None

    def test_joint_copulas(self):
        train = gen_observational(BIVARIATE, 400, seed=1)
        grid = EvaluationGrid.equally_spaced(0.0, 3.0, 4, n_y=128)
        config = _config(setting=BIVARIATE)

        tabcf = estimate(EstimatorKind.TABCF, train, grid, config, seed=0, joint=True)
        independent = estimate(EstimatorKind.TABCF_INDEPENDENCE, train, grid, config, seed=0, joint=True)
        naive = estimate(EstimatorKind.NAIVE, train, grid, config, seed=0, joint=True)

        assert tabcf.copula.kind == CopulaKind.GAUSSIAN
        assert independent.copula.kind == CopulaKind.INDEPENDENCE
        assert naive.copula.kind == CopulaKind.GAUSSIAN
        assert tabcf.joint_samples(50, seed=3).shape == (4, 50, 2)

    def test_gini_failure_is_attributed_to_u3(self, grid):
        """Gini on outcomes with negative mass fails inside U3."""
        result = estimate(EstimatorKind.TABCF, linear_dataset(n=400), grid, _config(), seed=0)

        with pytest.raises(StageError) as exc:
            result.curves([FunctionalKind.GINI], [0.5])
        assert exc.value.stage == "U3"

    def test_no_joint_law(self):
        result = EstimatorResult(estimator=EstimatorKind.LINEAR_CF, mean_curve=np.zeros(3))

        with pytest.raises(StageError) as exc:
            result.joint_samples(10, seed=0)
        assert exc.value.stage == "M2"

    def test_second_stage_failure(self, grid):
        """A kernel second stage cannot model a constant outcome."""
        base = linear_dataset(n=100)
        ds = base.with_outcomes(np.full(100, 2.0))
        config = _config(
            backbone=BackboneConfig(kind=BackboneKind.KERNEL_EMPIRICAL),
            first_stage_backbone=BackboneConfig(),
        )

        with pytest.raises(StageError) as exc:
            estimate(EstimatorKind.TABCF, ds, grid, config, seed=0)
        assert exc.value.stage == "U2"


class TestScoring:

    def test_marginal_scores(self):
        config = _config()
        grid = EvaluationGrid.equally_spaced(0.5, 2.5, 5, n_y=128)
        oracles = build_oracles(config, LINEAR, grid, seed=0)
        result = estimate(EstimatorKind.TABCF, gen_observational(LINEAR, 400, 0), grid, config, seed=0)

        reports = score_result(result, oracles, config, 0, StatisticalAnalyzer())
        metrics = [(r.metric, r.tau) for r in reports]
        assert metrics == [("mean_mse", None), ("quantile_mse", 0.25), ("quantile_mse", 0.75)]
        assert all(r.aggregate >= 0.0 for r in reports)

    def test_joint_scores(self):
        config = _config(setting=BIVARIATE)
        grid = evaluation_grid(config, BIVARIATE, np.zeros(1))
        oracles = build_oracles(config, BIVARIATE, grid, seed=0)
        result = estimate(
            EstimatorKind.TABCF, gen_observational(BIVARIATE, 400, 0), grid, config, seed=0, joint=True
        )

        [report] = score_result(result, oracles, config, 0, StatisticalAnalyzer())
        assert report.metric == "sliced_wasserstein"
        assert report.errors.shape == (4,)

    def test_joint_grid_is_fixed(self):
        config = _config(setting=BIVARIATE)
        grid = evaluation_grid(config, BIVARIATE, np.array([100.0, 200.0]))

        np.testing.assert_allclose(grid.x_grid, [0.0, 1.0, 2.0, 3.0])


class TestReplications:
    """Replications record failures instead of raising."""

    def test_successful_replication(self):
        config = _config(estimators=[EstimatorKind.TABCF, EstimatorKind.NAIVE, EstimatorKind.TABCF_INDEPENDENCE])
        result = run_replication(ReplicationTask(index=0, setting=LINEAR, replication=0, seed=5, config=config))

        assert result.succeeded
        assert {row["estimator"] for row in result.scores} == {"tabcf", "naive"}
        assert {row["stage"] for row in result.timings} >= {"simulate", "oracle", "U1", "U2", "U3"}

    def test_failed_estimator_is_recorded(self):
        config = _config(backbone=BackboneConfig(kind=BackboneKind.KERNEL_EMPIRICAL, neighbors=500))
        result = run_replication(ReplicationTask(index=0, setting=LINEAR, replication=0, seed=5, config=config))

        assert not result.succeeded
        assert result.failures[0]["stage"] == "U1"
        assert result.scores == []

    def test_orchestrator_keeps_task_order(self):
        config = _config(replications=3, sweep=[ScmSetting(treatment="T1", outcome="O3")])
        results = BenchmarkOrchestrator(config).run()

        assert [r.index for r in results] == list(range(6))
        assert [r.seed for r in results] == [0, 1, 2, 0, 1, 2]
        assert results[3].setting == "T1xO3"
