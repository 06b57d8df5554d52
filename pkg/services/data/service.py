"""Dataset ingestion, preprocessing, splitting and sub-views.

Every optimizer sees the same uniform numeric matrix:

1. load_dataset  - read a delimiter-separated file with a header row
2. preprocess    - encode categoricals, impute missing cells, shuffle rows
3. split         - 60/20/20 train/validation/test partition
4. view          - column/row sub-dataset selected by masks

Order inside preprocess is fixed as encode -> impute -> shuffle.
"""

import csv
import logging
from pathlib import Path

import numpy as np
import numpy.typing as npt
import pandas as pd

from services.data.schema import BitMask, Dataset, RawDataset, SplitSet
from services.shared.errors import DataError, EmptyMaskError

logger = logging.getLogger(__name__)

MISSING_TOKENS = frozenset({"", "?", "NA", "N/A", "NaN", "nan", "null", "NULL", "None"})


def load_dataset(path: Path | str, label_column: str | int, delimiter: str = ",") -> RawDataset:
    """Load a delimiter-separated file with a header row.

    Cells are kept raw; missing markers (see MISSING_TOKENS) become NaN so
    preprocess can impute them.

    Args:
        path: File to read
        label_column: Header name of the class column, or its 0-based index
        delimiter: Field delimiter

    Returns:
        RawDataset staged for preprocess

    Raises:
        DataError: Missing file, repeated or absent columns, zero rows or ragged rows
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"Dataset file not found: {path}")

    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f, delimiter=delimiter, skipinitialspace=True)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration as e:
            raise DataError(f"Dataset file is empty: {path}") from e
        repeated = sorted({h for h in header if header.count(h) > 1})
        if repeated:
            raise DataError(f"{path.name} header repeats column names: {repeated}")

        rows: list[list[str]] = []
        for line_num, row in enumerate(reader, start=2):  # header is line 1
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path.name} line {line_num}: expected {len(header)} fields, got {len(row)}"
                )
            rows.append([cell.strip() for cell in row])

    if not rows:
        raise DataError(f"Dataset has zero rows: {path}")

    label_idx = _resolve_label_index(header, label_column)
    frame = pd.DataFrame(rows, columns=header, dtype=object)
    frame = frame.mask(frame.isin(MISSING_TOKENS))
    labels = frame.iloc[:, label_idx]
    features = frame.drop(columns=frame.columns[label_idx])
    if features.shape[1] == 0:
        raise DataError(f"{path.name} has no feature columns besides the label")

    logger.info(f"Loaded {len(frame)} rows x {features.shape[1]} features from {path.name}")
    return RawDataset(frame=features.reset_index(drop=True), labels=labels.reset_index(drop=True))


def _resolve_label_index(header: list[str], label_column: str | int) -> int:
    if isinstance(label_column, int):
        if not -len(header) <= label_column < len(header):
            raise DataError(f"Label column index {label_column} out of range")
        return label_column % len(header)
    if label_column not in header:
        raise DataError(f"Label column {label_column!r} not in header {header}")
    return header.index(label_column)


def encode_column(column: pd.Series) -> npt.NDArray[np.float64]:
    """Encode one raw column as floats and impute its missing cells.

    Numeric columns (every present cell parses as a finite number) are imputed
    with the column mean. Any other column is categorical: codes follow the
    lexicographic order of the distinct values and missing cells take the code
    of the mode (ties go to the lexicographically smallest value).

    Raises:
        DataError: Every cell of the column is missing
    """
    present = column.notna()
    if not present.any():
        raise DataError(f"Column {column.name!r} is entirely missing")

    numeric = pd.to_numeric(column[present], errors="coerce")
    if numeric.notna().all() and np.isfinite(numeric.to_numpy(dtype=np.float64)).all():
        out = pd.to_numeric(column, errors="coerce").to_numpy(dtype=np.float64)
        out[~present.to_numpy()] = numeric.mean()
        return out

    as_text = column[present].astype(str)
    categories = sorted(as_text.unique())
    lookup = {value: code for code, value in enumerate(categories)}
    counts = as_text.value_counts()
    top = counts.max()
    mode = min(v for v, c in counts.items() if c == top)

    out = np.full(len(column), float(lookup[mode]))
    out[present.to_numpy()] = as_text.map(lookup).to_numpy(dtype=np.float64)
    return out


def encode_labels(labels: pd.Series) -> tuple[npt.NDArray[np.int64], tuple[str, ...]]:
    """Map raw class values onto 0..C-1.

    Numeric labels are ordered by value, anything else lexicographically.

    Raises:
        DataError: A row has no label
    """
    if labels.isna().any():
        raise DataError(f"{int(labels.isna().sum())} rows have a missing label")

    numeric = pd.to_numeric(labels, errors="coerce")
    if numeric.notna().all():
        classes, codes = np.unique(numeric.to_numpy(dtype=np.float64), return_inverse=True)
        names = tuple(f"{c:g}" for c in classes)
    else:
        classes, codes = np.unique(labels.astype(str).to_numpy(), return_inverse=True)
        names = tuple(str(c) for c in classes)
    return codes.astype(np.int64), names


def preprocess(raw: RawDataset | Dataset, seed: int) -> Dataset:
    """Encode, impute and shuffle a dataset.

    An already-numeric Dataset passes through encoding unchanged (its labels
    are kept as they are), so preprocess is idempotent up to the row shuffle.

    Args:
        raw: Loaded file or existing dataset
        seed: Seed of the row permutation

    Returns:
        Dataset satisfying all invariants

    Raises:
        DataError: A column is entirely missing or a label is missing
    """
    if isinstance(raw, Dataset):
        values = np.array(raw.values, dtype=np.float64)
        labels = np.array(raw.labels, dtype=np.int64)
        names = raw.feature_names
        n_classes = raw.n_classes
        class_names = raw.class_names
    else:
        values = np.column_stack([encode_column(raw.frame[c]) for c in raw.frame.columns])
        labels, class_names = encode_labels(raw.labels)
        names = tuple(str(c) for c in raw.frame.columns)
        n_classes = len(class_names)

    perm = np.random.default_rng(seed).permutation(values.shape[0])
    return Dataset(
        values=values[perm],
        labels=labels[perm],
        feature_names=names,
        n_classes=n_classes,
        class_names=class_names,
    )


def split_sizes(n: int) -> tuple[int, int, int]:
    """Row counts for train/validation/test: floor(0.6n), floor(0.2n), remainder."""
    train = (3 * n) // 5
    validation = n // 5
    return train, validation, n - train - validation


def split(d: Dataset, seed: int) -> SplitSet:
    """Seeded shuffle followed by a 60/20/20 partition.

    Raises:
        DataError: Fewer than 5 rows (some split would be empty)
    """
    if d.n < 5:
        raise DataError(f"Need at least 5 rows to split, got {d.n}")

    n_train, n_val, _ = split_sizes(d.n)
    perm = np.random.default_rng(seed).permutation(d.n)
    parts = np.split(perm, [n_train, n_train + n_val])
    train, validation, test = (_take_rows(d, idx) for idx in parts)
    logger.debug(f"Split {d.n} rows into {train.n}/{validation.n}/{test.n}")
    return SplitSet(train=train, validation=validation, test=test)


def _take_rows(d: Dataset, rows: npt.NDArray[np.intp]) -> Dataset:
    return Dataset(
        values=d.values[rows],
        labels=d.labels[rows],
        feature_names=d.feature_names,
        n_classes=d.n_classes,
        class_names=d.class_names,
    )


def view(d: Dataset, features: BitMask | None = None, instances: BitMask | None = None) -> Dataset:
    """Column/row sub-dataset selected by masks (None selects everything).

    Raises:
        ValueError: Mask length does not match k (features) or n (instances)
        EmptyMaskError: A mask selects nothing
    """
    if features is None and instances is None:
        return d

    values = d.values
    names = d.feature_names
    labels = d.labels
    if features is not None:
        if features.shape != (d.k,):
            raise ValueError(f"Feature mask length {features.shape[0]} != k={d.k}")
        if not features.any():
            raise EmptyMaskError("Feature mask selects no columns")
        values = values[:, features]
        names = tuple(name for name, keep in zip(d.feature_names, features, strict=True) if keep)
    if instances is not None:
        if instances.shape != (d.n,):
            raise ValueError(f"Instance mask length {instances.shape[0]} != n={d.n}")
        if not instances.any():
            raise EmptyMaskError("Instance mask selects no rows")
        values = values[instances]
        labels = labels[instances]

    return Dataset(
        values=values,
        labels=labels,
        feature_names=names,
        n_classes=d.n_classes,
        class_names=d.class_names,
    )
