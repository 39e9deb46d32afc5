"""
Unit tests for conditional-CDF backbones and their factory.
"""

import numpy as np
import pytest

from core.backbone_factory import BackboneFactory, fit_backbone, load_model, save_model
from core.exceptions import DegenerateTargetError, DomainError, InsufficientDataError, ShapeError
from models.backbone_config import BackboneConfig
from models.enums import BackboneKind
from plugins.backbones import (
    BaseBackbone,
    BinnedHistogramBackbone,
    GaussianLinearBackbone,
    KernelEmpiricalBackbone,
)

ALL_KINDS = [BackboneKind.GAUSSIAN_LINEAR, BackboneKind.KERNEL_EMPIRICAL, BackboneKind.BINNED_HISTOGRAM]


@pytest.fixture
def regression_sample():
    rng = np.random.default_rng(11)
    features = rng.standard_normal((400, 2))
    targets = 1.0 + 2.0 * features[:, 0] - 0.5 * features[:, 1] + 0.5 * rng.standard_normal(400)
    return features, targets


class TestBackboneFactory:
    """Kind registry and construction."""

    @pytest.mark.parametrize(
        "kind, cls",
        [
            (BackboneKind.GAUSSIAN_LINEAR, GaussianLinearBackbone),
            (BackboneKind.KERNEL_EMPIRICAL, KernelEmpiricalBackbone),
            (BackboneKind.BINNED_HISTOGRAM, BinnedHistogramBackbone),
        ],
    )
    def test_creates_registered_kind(self, kind, cls):
        model = BackboneFactory(BackboneConfig(kind=kind)).create(name="named")

        assert isinstance(model, cls)
        assert model.backbone_name == "named"

    def test_invalid_config_rejected(self):
        with pytest.raises(ValueError):
            BackboneConfig(kind="gaussian-linear", bandwidth=-1.0)


class TestBackboneContract:
    """Behaviour every backbone shares."""

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_cdf_rows_are_valid(self, kind, regression_sample):
        """cdf_matrix rows lie in [0, 1] and are nondecreasing in y."""
        features, targets = regression_sample
        model = fit_backbone(BackboneConfig(kind=kind), features, targets)

        grid = np.linspace(targets.min() - 1, targets.max() + 1, 64)
        values = model.cdf_matrix(features[:10], grid)

        assert values.shape == (10, 64)
        assert values.min() >= 0.0 and values.max() <= 1.0
        assert np.all(np.diff(values, axis=1) >= -1e-12)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_pointwise_matches_matrix_diagonal(self, kind, regression_sample):
        features, targets = regression_sample
        model = fit_backbone(BackboneConfig(kind=kind), features, targets)

        rows = features[:5]
        y = targets[:5]
        pointwise = model.cdf_pointwise(rows, y)
        for i in range(5):
            np.testing.assert_allclose(pointwise[i], model.cdf_matrix(rows[i : i + 1], y[i : i + 1])[0, 0])

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_quantile_inverts_cdf(self, kind, regression_sample):
        """eval_quantile returns a point where the CDF has reached tau."""
        features, targets = regression_sample
        model = fit_backbone(BackboneConfig(kind=kind), features, targets)

        for tau in (0.1, 0.5, 0.9):
            q = model.eval_quantile(features[0], tau)
            assert model.eval_cdf(features[0], q) >= tau - 1e-9

    def test_quantile_domain(self, regression_sample):
        features, targets = regression_sample
        model = fit_backbone(BackboneConfig(), features, targets)

        with pytest.raises(DomainError):
            model.eval_quantile(features[0], 1.0)

    def test_feature_dimension_checked(self, regression_sample):
        features, targets = regression_sample
        model = fit_backbone(BackboneConfig(), features, targets)

        with pytest.raises(ShapeError):
            model.cdf_pointwise(features[:, :1], targets)

    def test_too_few_rows(self):
        with pytest.raises(InsufficientDataError):
            fit_backbone(BackboneConfig(), np.zeros((1, 1)), np.zeros(1))

    def test_nonfinite_inputs(self):
        features = np.array([[0.0], [1.0], [np.nan]])
        with pytest.raises(DomainError):
            fit_backbone(BackboneConfig(), features, np.array([0.0, 1.0, 2.0]))


class TestGaussianLinear:

    def test_recovers_coefficients(self, regression_sample):
        features, targets = regression_sample
        model = fit_backbone(BackboneConfig(), features, targets)

        np.testing.assert_allclose(model.coef, [1.0, 2.0, -0.5], atol=0.1)
        assert model.sigma == pytest.approx(0.5, abs=0.06)

    def test_median_at_location(self, regression_sample):
        """F(location | f) = 1/2 for the Gaussian predictive law."""
        features, targets = regression_sample
        model = fit_backbone(BackboneConfig(), features, targets)

        loc = model.location(features[:3])
        np.testing.assert_allclose(model.cdf_pointwise(features[:3], loc), 0.5)

    def test_heteroscedastic_scale_varies(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(0.0, 2.0, 2000)
        y = x + (0.2 + x) * rng.standard_normal(2000)
        model = fit_backbone(BackboneConfig(homoscedastic=False), x, y)

        low, high = model.scale(np.array([[0.1], [1.9]]))
        assert high > 2.0 * low


class TestKernelBackbones:

    def test_constant_target_rejected(self):
        features = np.linspace(0.0, 1.0, 20)
        with pytest.raises(DegenerateTargetError):
            fit_backbone(BackboneConfig(kind=BackboneKind.KERNEL_EMPIRICAL), features, np.ones(20))

    def test_weights_normalized(self, regression_sample):
        features, targets = regression_sample
        model = fit_backbone(BackboneConfig(kind=BackboneKind.KERNEL_EMPIRICAL), features, targets)

        w = model.weights(features[:7])
        np.testing.assert_allclose(w.sum(axis=1), 1.0)

    def test_equal_weights_give_the_empirical_cdf(self):
        """A constant feature gives every row the same weight, so F(2 | f) is the ECDF 2/3."""
        model = fit_backbone(
            BackboneConfig(kind=BackboneKind.KERNEL_EMPIRICAL), np.zeros(3), np.array([1.0, 2.0, 3.0])
        )

        for f in (0.0, 4.0):
            assert model.eval_cdf(np.array([f]), 2.0) == pytest.approx(2.0 / 3.0)

    @pytest.mark.parametrize("kind", [BackboneKind.KERNEL_EMPIRICAL, BackboneKind.BINNED_HISTOGRAM])
    def test_more_neighbors_than_rows(self, kind):
        """A neighbor cap above the training size is rejected when fitting."""
        x = np.linspace(0.0, 1.0, 20)
        config = BackboneConfig(kind=kind, neighbors=50)

        with pytest.raises(InsufficientDataError):
            fit_backbone(config, x, 2.0 * x)

    def test_neighbor_truncation(self, regression_sample):
        """With a neighbor cap, at most that many rows carry weight."""
        features, targets = regression_sample
        config = BackboneConfig(kind=BackboneKind.KERNEL_EMPIRICAL, neighbors=15)
        model = fit_backbone(config, features, targets)

        w = model.weights(features[:4])
        assert np.all((w > 0).sum(axis=1) <= 15)

    @pytest.mark.parametrize("kind", [BackboneKind.KERNEL_EMPIRICAL, BackboneKind.BINNED_HISTOGRAM])
    def test_context_average_matches_row_by_row(self, kind, regression_sample):
        """The factorized average equals the explicit average over context rows."""
        features, targets = regression_sample
        model = fit_backbone(BackboneConfig(kind=kind), features, targets)

        x_grid = np.linspace(-1.0, 1.0, 5)
        context = features[:30, 1:]
        y_grid = np.linspace(targets.min(), targets.max(), 40)

        fast = model.average_cdf(x_grid, context, y_grid)
        slow = BaseBackbone.average_cdf(model, x_grid, context, y_grid)
        np.testing.assert_allclose(fast, slow, atol=1e-10)

    def test_histogram_bins_and_smoothing(self, regression_sample):
        features, targets = regression_sample
        config = BackboneConfig(kind=BackboneKind.BINNED_HISTOGRAM, bins=16, histogram_smoothing=0.01)
        model = fit_backbone(config, features, targets)

        masses = model.bin_masses(model.weights(features[:3]))
        assert model.n_bins == 16
        np.testing.assert_allclose(masses.sum(axis=1), 1.0)
        assert masses.min() >= 0.01 / 16 - 1e-12


class TestPersistence:
    """JSON save/load preserves predictions."""

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_save_and_load(self, kind, regression_sample, tmp_path):
        features, targets = regression_sample
        model = fit_backbone(BackboneConfig(kind=kind), features, targets)
        path = save_model(model, tmp_path / "models" / "m.json")

        loaded = load_model(path)
        grid = np.linspace(-3.0, 5.0, 17)

        assert loaded.kind == kind
        np.testing.assert_allclose(loaded.cdf_matrix(features[:6], grid), model.cdf_matrix(features[:6], grid))
