"""Dataset ingestion and labeled/unlabeled pool bookkeeping.

Two on-disk formats are supported: the sparse attribute format
(``label index:value ...`` with 1-based, strictly increasing indices)
and plain numeric CSV with the class label in a designated column.
Parsed labels are remapped to contiguous ids 0..k-1 in first-seen order.

Everything here is an immutable value; pool updates return new states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, UsageError


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (n_samples, n_features) float64
    labels: np.ndarray  # (n_samples,) int64, values in [0, class_count)
    class_count: int
    name: str = ""

    def __post_init__(self) -> None:
        self.features.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class PoolState:
    """Partition of training-set positions into labeled and unlabeled pools.

    `labels` is aligned with `labeled` and holds the oracle's answer for
    each labeled position, in the order the positions entered the pool.
    """

    labeled: tuple[int, ...]
    unlabeled: tuple[int, ...]
    labels: tuple[int, ...]
    iteration: int = 0

    def __post_init__(self) -> None:
        if len(self.labels) != len(self.labeled):
            raise UsageError("pool labels must align with the labeled index set")
        if set(self.labeled) & set(self.unlabeled):
            raise UsageError("labeled and unlabeled pools overlap")


def _remap_labels(raw: list[float]) -> tuple[np.ndarray, int]:
    mapping: dict[float, int] = {}
    out = np.empty(len(raw), dtype=np.int64)
    for i, value in enumerate(raw):
        if value not in mapping:
            mapping[value] = len(mapping)
        out[i] = mapping[value]
    return out, len(mapping)


def parse_sparse(text: str, name: str = "") -> Dataset:
    """Parse sparse attribute format: one `label idx:val ...` line per sample."""
    raw_labels: list[float] = []
    rows: list[list[tuple[int, float]]] = []
    width = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        try:
            raw_labels.append(float(tokens[0]))
        except ValueError:
            raise DataFormatError(f"bad label {tokens[0]!r}", line=lineno) from None
        entries: list[tuple[int, float]] = []
        last_index = 0
        for token in tokens[1:]:
            index_part, sep, value_part = token.partition(":")
            if not sep:
                raise DataFormatError(f"expected index:value, got {token!r}", line=lineno)
            try:
                index = int(index_part)
                value = float(value_part)
            except ValueError:
                raise DataFormatError(f"bad feature entry {token!r}", line=lineno) from None
            if index < 1:
                raise DataFormatError(f"feature index must be >= 1, got {index}", line=lineno)
            if index <= last_index:
                raise DataFormatError(
                    f"feature indices must be strictly increasing, got {index} after {last_index}",
                    line=lineno,
                )
            last_index = index
            entries.append((index, value))
        width = max(width, last_index)
        rows.append(entries)
    if not rows:
        raise DataFormatError("empty dataset")
    features = np.zeros((len(rows), width), dtype=np.float64)
    for i, entries in enumerate(rows):
        for index, value in entries:
            features[i, index - 1] = value
    labels, class_count = _remap_labels(raw_labels)
    return Dataset(features=features, labels=labels, class_count=class_count, name=name)


def _is_numeric(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def parse_csv(text: str, label_column: int = 0, name: str = "") -> Dataset:
    """Parse numeric CSV; a non-numeric first row is treated as a header."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise DataFormatError("empty dataset")
    start = 0
    first_cells = [c.strip() for c in lines[0].split(",")]
    if any(not _is_numeric(cell) for cell in first_cells):
        start = 1
        if len(lines) == 1:
            raise DataFormatError("header-only dataset")
    n_columns = len(lines[start].split(","))
    if n_columns < 2:
        raise DataFormatError("need at least one feature column and a label column", line=start + 1)
    column = label_column if label_column >= 0 else n_columns + label_column
    if not 0 <= column < n_columns:
        raise UsageError(f"label column {label_column} out of range for {n_columns} columns")
    raw_labels: list[float] = []
    feature_rows: list[list[float]] = []
    for lineno in range(start, len(lines)):
        cells = [c.strip() for c in lines[lineno].split(",")]
        if len(cells) != n_columns:
            raise DataFormatError(
                f"expected {n_columns} columns, got {len(cells)}", line=lineno + 1
            )
        row: list[float] = []
        for j, cell in enumerate(cells):
            try:
                value = float(cell)
            except ValueError:
                raise DataFormatError(f"non-numeric cell {cell!r}", line=lineno + 1) from None
            if j == column:
                raw_labels.append(value)
            else:
                row.append(value)
        feature_rows.append(row)
    features = np.array(feature_rows, dtype=np.float64)
    labels, class_count = _remap_labels(raw_labels)
    return Dataset(features=features, labels=labels, class_count=class_count, name=name)


def serialize_sparse(dataset: Dataset) -> str:
    """Render a dataset in sparse attribute format.

    Zeros are omitted; if the last column is zero everywhere, one explicit
    `width:0.0` entry is kept on the first line so that re-parsing
    reproduces the feature-matrix width.
    """
    lines = []
    width = dataset.n_features
    width_pinned = False
    for i in range(dataset.n_samples):
        parts = [str(int(dataset.labels[i]))]
        row = dataset.features[i]
        for j in range(width):
            if row[j] != 0.0:
                parts.append(f"{j + 1}:{float(row[j])!r}")
        if not width_pinned:
            if row[width - 1] == 0.0:
                parts.append(f"{width}:0.0")
            width_pinned = True
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def serialize_csv(dataset: Dataset) -> str:
    """Render a dataset as CSV with the label in the first column."""
    header = "label," + ",".join(f"x{j + 1}" for j in range(dataset.n_features))
    lines = [header]
    for i in range(dataset.n_samples):
        cells = [str(int(dataset.labels[i]))]
        cells.extend(repr(float(v)) for v in dataset.features[i])
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def split_train_test(
    n_samples: int, fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded random split into round(fraction*n) train and the rest test."""
    if not 0.0 < fraction < 1.0:
        raise UsageError(f"train fraction must be in (0, 1), got {fraction}")
    n_train = round(fraction * n_samples)
    if n_train == 0 or n_train == n_samples:
        raise UsageError(
            f"train fraction {fraction} leaves an empty side for n={n_samples}"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(n_samples)
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def init_pool(train_labels: np.ndarray, seed: int) -> PoolState:
    """Seed the pool with one uniformly chosen sample of every class.

    `train_labels` is the ground truth aligned with training-set positions;
    the returned state indexes positions 0..len(train_labels)-1.
    """
    train_labels = np.asarray(train_labels)
    rng = np.random.default_rng(seed)
    chosen: list[int] = []
    for cls in np.unique(train_labels):
        positions = np.flatnonzero(train_labels == cls)
        chosen.append(int(rng.choice(positions)))
    labeled = tuple(sorted(chosen))
    unlabeled = tuple(i for i in range(train_labels.size) if i not in set(labeled))
    labels = tuple(int(train_labels[i]) for i in labeled)
    return PoolState(labeled=labeled, unlabeled=unlabeled, labels=labels, iteration=0)


def commit_query(pool: PoolState, index: int, oracle_label: int) -> PoolState:
    """Move `index` from the unlabeled to the labeled pool with its answer."""
    if index not in pool.unlabeled:
        raise UsageError(f"index {index} is not in the unlabeled pool")
    return PoolState(
        labeled=pool.labeled + (index,),
        unlabeled=tuple(i for i in pool.unlabeled if i != index),
        labels=pool.labels + (int(oracle_label),),
        iteration=pool.iteration + 1,
    )


def minmax_rescale(features: np.ndarray) -> np.ndarray:
    """Map every feature column onto [0, 1]; constant columns become 0."""
    lo = features.min(axis=0)
    hi = features.max(axis=0)
    span = hi - lo
    out = np.zeros_like(features, dtype=np.float64)
    nonconst = span > 0
    out[:, nonconst] = (features[:, nonconst] - lo[nonconst]) / span[nonconst]
    return out
