"""
Dataset Service: CSV ingestion/export and train/evaluation splits.

CSV is the single on-disk format: comma-delimited, one header row, UTF-8,
decimal-point reals. Missing or unparseable cells are rejected, never imputed.
"""

import logging
from pathlib import Path
from typing import Tuple, Union

import numpy as np
import pandas as pd

from core.exceptions import DataError, EmptyDataError, ParseError, RoleError
from models.dataset import ColumnRoles, Dataset
from utils.validators import Validators

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def load_csv(path: Union[str, Path], roles: ColumnRoles) -> Dataset:
    """Read a CSV file and arrange its columns by role; row order is preserved."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"CSV file not found: {path}")

    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise EmptyDataError(f"{path} is empty.")

    ok, message = Validators.validate_columns(roles.columns, frame.columns)
    if not ok:
        missing = next(c for c in roles.columns if c not in frame.columns)
        raise RoleError(f"{path.name}: {message}", column=missing)
    if frame.empty:
        raise EmptyDataError(f"{path} has a header but no data rows.")

    numeric = {}
    for column in roles.columns:
        cells = frame[column].str.strip()
        parsed = pd.to_numeric(cells, errors="coerce").to_numpy(dtype=float)
        bad = np.flatnonzero(~np.isfinite(parsed))
        if bad.size:
            row = int(bad[0]) + 1
            raise ParseError(
                f"{path.name}: cannot parse '{frame[column].iloc[bad[0]]}' "
                f"in row {row}, column '{column}' as a finite real.",
                row=row,
                column=column,
            )
        # correctly rounded parse for the 17-digit round trip
        numeric[column] = cells.to_numpy(dtype=str).astype(float)

    n = len(frame)
    dataset = Dataset(
        w=np.column_stack([numeric[c] for c in roles.covariates]) if roles.covariates else np.empty((n, 0)),
        z=numeric[roles.instrument],
        x=numeric[roles.treatment],
        y=np.column_stack([numeric[c] for c in roles.outcomes]),
        roles=roles,
    )
    logger.info("Loaded %s: n=%d, p=%d, K=%d", path.name, dataset.n, dataset.p, dataset.k)
    return dataset


def to_frame(dataset: Dataset) -> pd.DataFrame:
    roles = dataset.column_roles
    columns = {}
    for j, name in enumerate(roles.covariates):
        columns[name] = dataset.w[:, j]
    columns[roles.instrument] = dataset.z
    columns[roles.treatment] = dataset.x
    for j, name in enumerate(roles.outcomes):
        columns[name] = dataset.y[:, j]
    return pd.DataFrame(columns, columns=roles.columns)


def save_csv(dataset: Dataset, path: Union[str, Path]) -> Path:
    """Write the dataset with 17 significant digits so load_csv reproduces it exactly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    to_frame(dataset).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def split_train_eval(
    dataset: Dataset, eval_fraction: float, seed: int
) -> Tuple[Dataset, Dataset]:
    """Random disjoint (train, eval) partition, deterministic given the seed."""
    if not 0.0 < eval_fraction < 1.0:
        raise DataError(f"eval_fraction must lie in (0, 1), got {eval_fraction}.")
    n = dataset.n
    n_eval = int(np.floor(n * eval_fraction + 0.5))
    if n_eval < 1 or n_eval > n - 1:
        raise DataError(
            f"eval_fraction={eval_fraction} on n={n} leaves an empty partition."
        )
    order = np.random.default_rng(seed).permutation(n)
    eval_idx = np.sort(order[:n_eval])
    train_idx = np.sort(order[n_eval:])
    return dataset.subset(train_idx), dataset.subset(eval_idx)
