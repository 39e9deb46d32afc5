"""
Unit tests for functionals read off interventional CDFs.
"""

import numpy as np
import pytest

from core.exceptions import DomainError
from core.functionals import (
    evaluate_functional,
    interventional_gini,
    interventional_mean,
    interventional_quantile,
    inverse_row,
    sample_from_cdf,
    tail_mass,
)
from models.enums import FunctionalKind
from models.interventional import InterventionalCdf


def _icdf(y_grid, rows, x_grid=None):
    rows = np.atleast_2d(rows)
    if x_grid is None:
        x_grid = np.arange(rows.shape[0], dtype=float)
    return InterventionalCdf(x_grid=x_grid, y_grid=y_grid, cdf=rows)


@pytest.fixture
def uniform_law():
    """Unif(0, 1) at two intervention levels."""
    y = np.linspace(0.0, 1.0, 2001)
    return _icdf(y, np.vstack([y, y]))


@pytest.fixture
def exponential_law():
    y = np.linspace(0.0, 40.0, 40001)
    return _icdf(y, 1.0 - np.exp(-y))


class TestMean:

    def test_uniform_mean(self, uniform_law):
        np.testing.assert_allclose(interventional_mean(uniform_law), [0.5, 0.5], atol=1e-9)

    def test_exponential_mean(self, exponential_law):
        assert interventional_mean(exponential_law)[0] == pytest.approx(1.0, abs=1e-5)

    def test_shifted_point_mass(self):
        """A step at y=2 on a grid starting at -1 has mean 2."""
        y = np.linspace(-1.0, 3.0, 401)
        row = (y >= 2.0).astype(float)
        assert interventional_mean(_icdf(y, row))[0] == pytest.approx(2.0, abs=0.011)

    def test_tail_mass(self):
        y = np.linspace(0.0, 1.0, 11)
        row = np.clip(0.1 + 0.8 * y, 0.0, 1.0)
        assert tail_mass(_icdf(y, row))[0] == pytest.approx(0.2)


class TestQuantile:

    def test_uniform_quantiles(self, uniform_law):
        for tau in (0.1, 0.25, 0.5, 0.9):
            np.testing.assert_allclose(interventional_quantile(uniform_law, tau), tau, atol=1e-9)

    def test_exponential_median(self, exponential_law):
        assert interventional_quantile(exponential_law, 0.5)[0] == pytest.approx(np.log(2.0), abs=1e-3)

    @pytest.mark.parametrize("tau", [0.0, 1.0, -0.2])
    def test_tau_outside_open_interval(self, uniform_law, tau):
        with pytest.raises(DomainError):
            interventional_quantile(uniform_law, tau)

    def test_inverse_row_clamps_to_grid(self):
        """Probabilities beyond the row's range map to the grid endpoints."""
        y = np.array([0.0, 1.0, 2.0])
        row = np.array([0.2, 0.6, 0.8])

        values = inverse_row(row, y, np.array([0.1, 0.95]))
        np.testing.assert_allclose(values, [0.0, 2.0])

    def test_inverse_row_flat_segment(self):
        """On a flat stretch the generalized inverse returns its left end."""
        y = np.array([0.0, 1.0, 2.0, 3.0])
        row = np.array([0.0, 0.5, 0.5, 1.0])

        assert inverse_row(row, y, np.array([0.5]))[0] == pytest.approx(1.0)


class TestGini:

    def test_uniform_gini(self, uniform_law):
        np.testing.assert_allclose(interventional_gini(uniform_law), 1.0 / 3.0, atol=1e-6)

    def test_exponential_gini(self, exponential_law):
        assert interventional_gini(exponential_law)[0] == pytest.approx(0.5, abs=1e-4)

    def test_negative_support_rejected(self):
        """A law with visible mass below zero has no Gini index."""
        y = np.linspace(-1.0, 1.0, 201)
        with pytest.raises(DomainError):
            interventional_gini(_icdf(y, (y + 1.0) / 2.0))

    def test_grid_extending_below_zero_is_tolerated(self):
        """Grid nodes below zero with no mass there do not change the result."""
        y = np.linspace(-0.5, 1.0, 3001)
        row = np.clip(y, 0.0, 1.0)
        assert interventional_gini(_icdf(y, row))[0] == pytest.approx(1.0 / 3.0, abs=1e-5)


class TestSamplingAndDispatch:

    def test_sampling_reproduces_law(self, uniform_law):
        u = np.random.default_rng(0).uniform(size=20000)
        draws = sample_from_cdf(uniform_law, 0, u)

        np.testing.assert_allclose(draws, u, atol=1e-9)

    def test_quantile_labels(self, uniform_law):
        curves = evaluate_functional(uniform_law, FunctionalKind.QUANTILE, taus=[0.1, 0.5])

        assert sorted(curves) == ["q0.1", "q0.5"]

    def test_mean_and_gini_labels(self, uniform_law):
        assert list(evaluate_functional(uniform_law, "mean")) == ["mean"]
        assert list(evaluate_functional(uniform_law, FunctionalKind.GINI)) == ["gini"]

    def test_joint_is_not_marginal(self, uniform_law):
        with pytest.raises(DomainError):
            evaluate_functional(uniform_law, FunctionalKind.JOINT)
