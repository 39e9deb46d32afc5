"""
Pytest configuration for cleaner test output, plus shared run fixtures.
"""
import pytest

from models.run_config import GridSettings, OracleSettings, RunConfig
from models.scm_setting import ScmSetting


def pytest_configure(config):
    """Configure pytest for cleaner output."""
    config.option.verbose = 1


def pytest_itemcollected(item):
    """Use test docstrings as display names."""
    if item._obj.__doc__:
        item._nodeid = item.obj.__doc__.strip()


@pytest.fixture
def small_run_config(tmp_path):
    """Linear-sanity design with grids small enough for a quick end-to-end run."""
    return RunConfig(
        setting=ScmSetting(treatment="linear-sanity", outcome="linear-sanity"),
        n=400,
        grid=GridSettings(n_x=20, n_y=128),
        oracle=OracleSettings(mc_draws=500, joint_samples=500, sw_projections=16),
        output_dir=str(tmp_path),
        workers=1,
    )
