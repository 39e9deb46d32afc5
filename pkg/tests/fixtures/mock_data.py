"""
Mock data for testing.
"""

import numpy as np

from models.dataset import ColumnRoles, Dataset

MOCK_ROLES = {
    "instrument": "z",
    "treatment": "x",
    "outcomes": ["y"],
    "covariates": ["w1"],
}

MOCK_CSV = """w1,z,x,y
0.5,1.25,2.0,3.5
-1.0,0.75,1.5,2.25
0.0,2.0,3.125,6.0
1.5,1.5,2.5,4.75
-0.25,1.0,0.5,1.0
"""

MOCK_CSV_BAD_CELL = """w1,z,x,y
0.5,1.25,2.0,3.5
-1.0,abc,1.5,2.25
"""

MOCK_CSV_HEADER_ONLY = "w1,z,x,y\n"

MOCK_RUN_FILE = """
setting:
  treatment: linear-sanity
  outcome: linear-sanity
n: 400
grid:
  n_x: 20
  n_y: 128
oracle:
  mc_draws: 500
  joint_samples: 500
diagnostics:
  permutations: 99
"""


def mock_roles() -> ColumnRoles:
    return ColumnRoles(**MOCK_ROLES)


def linear_dataset(n: int = 500, seed: int = 0, p: int = 0) -> Dataset:
    """Small linear IV sample: X = Z + H + e, Y = 2X - 3H + e'."""
    rng = np.random.default_rng(seed)
    z = 1.5 + 0.75 * rng.standard_normal(n)
    h = rng.standard_normal(n)
    w = rng.standard_normal((n, p))
    x = z + h + rng.standard_normal(n) + (0.5 * w.sum(axis=1) if p else 0.0)
    y = 2.0 * x - 3.0 * h + rng.standard_normal(n)
    return Dataset(w=w, z=z, x=x, y=y)
