"""Dataset representation, CSV ingestion, bootstrap resampling, synthetic data.

A :class:`Dataset` is an immutable rectangular matrix of finite metric values
plus a boolean outcome vector (True = defective). Structural invariants
(shapes, finiteness, unique names) are enforced at construction; the
presence of both outcome classes is a precondition of the supervised
consumers and is checked there, because bootstrap test sets and outcome
permutation fixtures legitimately contain a single class.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyDataset,
    EmptyTestSet,
    InvalidOutcomeValue,
    InvalidSpec,
    MissingColumn,
    NonNumericCell,
)

_TRUE_TOKENS = {"1", "defective"}
_FALSE_TOKENS = {"0", "clean"}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Metric matrix with named columns and a binary outcome per row."""

    metric_names: tuple[str, ...]
    rows: np.ndarray
    outcome: np.ndarray

    def __post_init__(self):
        names = tuple(str(n) for n in self.metric_names)
        rows = np.asarray(self.rows, dtype=np.float64)
        outcome = np.asarray(self.outcome, dtype=bool)
        if rows.ndim != 2:
            raise EmptyDataset("metric matrix must be two-dimensional")
        n, p = rows.shape
        if p == 0 or len(names) == 0:
            raise EmptyDataset("dataset needs at least one metric")
        if n == 0:
            raise EmptyDataset("dataset needs at least one row")
        if p != len(names):
            raise EmptyDataset(
                f"row width {p} does not match {len(names)} metric names"
            )
        if outcome.shape != (n,):
            raise EmptyDataset("outcome length does not match row count")
        if len(set(names)) != len(names):
            raise EmptyDataset("duplicate metric names")
        if any(not n for n in names):
            raise EmptyDataset("empty metric name")
        if not np.all(np.isfinite(rows)):
            raise EmptyDataset("metric values must be finite")
        object.__setattr__(self, "metric_names", names)
        object.__setattr__(self, "rows", _frozen(rows))
        object.__setattr__(self, "outcome", _frozen(outcome))

    # structural equality; arrays compare by value
    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.metric_names == other.metric_names
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.outcome, other.outcome)
        )

    @property
    def n_modules(self) -> int:
        return self.rows.shape[0]

    @property
    def n_metrics(self) -> int:
        return self.rows.shape[1]

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.metric_names.index(name)
        except ValueError:
            raise MissingColumn(name) from None
        return self.rows[:, j]

    def columns(self, names) -> np.ndarray:
        idx = [self.metric_names.index(n) for n in names]
        return self.rows[:, idx]

    def project(self, names) -> "Dataset":
        """Dataset restricted to the given metrics (given order kept)."""
        names = list(names)
        for n in names:
            if n not in self.metric_names:
                raise MissingColumn(n)
        return Dataset(tuple(names), self.columns(names), self.outcome)

    def take(self, indices: np.ndarray) -> "Dataset":
        return Dataset(self.metric_names, self.rows[indices], self.outcome[indices])

    def has_both_classes(self) -> bool:
        return bool(self.outcome.any()) and not bool(self.outcome.all())


@dataclass(frozen=True)
class DatasetSummary:
    module_count: int
    metric_count: int
    defective_ratio: float  # percentage in [0, 100]
    epv: float  # defective count / metric count


@dataclass(frozen=True, eq=False)
class BootstrapSplit:
    train: Dataset
    test: Dataset
    draw_indices: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "draw_indices", _frozen(np.asarray(self.draw_indices, dtype=np.int64))
        )


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a planted-correlation dataset.

    Base metrics are i.i.d. standard normal; each clone group adds copies of
    one base metric plus Gaussian noise, so the clone/source Spearman
    correlation is controlled by the noise standard deviation (sd 0 means an
    exact duplicate). The outcome is Bernoulli with log-odds
    ``signal_coefficients . base_metrics``.
    """

    base_metric_count: int
    module_count: int
    signal_coefficients: tuple[float, ...]
    clone_groups: tuple[tuple[int, int, float], ...] = field(default_factory=tuple)
    seed: int = 0

    def __post_init__(self):
        if self.base_metric_count < 1:
            raise InvalidSpec("base_metric_count must be >= 1")
        if self.module_count < 10:
            raise InvalidSpec("module_count must be >= 10")
        coef = tuple(float(c) for c in self.signal_coefficients)
        if len(coef) != self.base_metric_count:
            raise InvalidSpec("signal_coefficients length must equal base_metric_count")
        groups = tuple(
            (int(src), int(count), float(sd)) for src, count, sd in self.clone_groups
        )
        for src, count, sd in groups:
            if not 0 <= src < self.base_metric_count:
                raise InvalidSpec(f"clone source {src} out of range")
            if count < 1:
                raise InvalidSpec("clone count must be >= 1")
            if sd < 0 or not math.isfinite(sd):
                raise InvalidSpec("clone noise sd must be finite and >= 0")
        object.__setattr__(self, "signal_coefficients", coef)
        object.__setattr__(self, "clone_groups", groups)


def load_csv(path, outcome_column: str) -> Dataset:
    """Read a UTF-8 comma-delimited file with a header row into a Dataset.

    The outcome column is removed from the metrics and mapped to booleans;
    accepted encodings are {0, 1} and {clean, defective} (case-insensitive).
    Column order is preserved from the file.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataset(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if outcome_column not in header:
            raise MissingColumn(outcome_column)
        out_idx = header.index(outcome_column)
        metric_names = tuple(h for i, h in enumerate(header) if i != out_idx)
        if not metric_names:
            raise EmptyDataset(f"{path}: no metric columns besides {outcome_column!r}")

        data_rows: list[list[float]] = []
        outcome: list[bool] = []
        for row_no, cells in enumerate(reader, start=1):
            if not cells:
                continue
            if len(cells) != len(header):
                raise NonNumericCell(row_no, "<row>", f"{len(cells)} cells, expected {len(header)}")
            raw_outcome = cells[out_idx].strip().lower()
            if raw_outcome in _TRUE_TOKENS:
                outcome.append(True)
            elif raw_outcome in _FALSE_TOKENS:
                outcome.append(False)
            else:
                raise InvalidOutcomeValue(row_no, cells[out_idx])
            vals = []
            for i, cell in enumerate(cells):
                if i == out_idx:
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise NonNumericCell(row_no, header[i], cell) from None
                if not math.isfinite(v):
                    raise NonNumericCell(row_no, header[i], cell)
                vals.append(v)
            data_rows.append(vals)

        if not data_rows:
            raise EmptyDataset(f"{path}: no data rows")
    return Dataset(metric_names, np.array(data_rows, dtype=np.float64), np.array(outcome))


def write_csv(d: Dataset, path, outcome_column: str) -> None:
    """Write a Dataset back to CSV; floats use shortest round-trip formatting."""
    if outcome_column in d.metric_names:
        raise MissingColumn(outcome_column)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(d.metric_names) + [outcome_column])
        for i in range(d.n_modules):
            writer.writerow(
                [repr(float(v)) for v in d.rows[i]] + ["1" if d.outcome[i] else "0"]
            )


def summarize(d: Dataset) -> DatasetSummary:
    """Exact module/metric counts, defective percentage, and events per variable."""
    defective = int(np.count_nonzero(d.outcome))
    return DatasetSummary(
        module_count=d.n_modules,
        metric_count=d.n_metrics,
        defective_ratio=100.0 * defective / d.n_modules,
        epv=defective / d.n_metrics,
    )


def bootstrap_sample(d: Dataset, seed: int) -> BootstrapSplit:
    """Draw N rows with replacement; the never-drawn rows form the test set.

    Row identity is by source index, so duplicate-valued rows stay
    distinguishable. Same seed, same split. Raises :class:`EmptyTestSet`
    when every row was drawn (callers retry with an offset seed).
    """
    n = d.n_modules
    rng = np.random.default_rng(seed)
    draw = rng.integers(0, n, size=n)
    mask = np.ones(n, dtype=bool)
    mask[draw] = False
    test_idx = np.flatnonzero(mask)
    if test_idx.size == 0:
        raise EmptyTestSet(f"all {n} rows drawn for seed {seed}")
    return BootstrapSplit(train=d.take(draw), test=d.take(test_idx), draw_indices=draw)


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Deterministically realise a :class:`SyntheticSpec`.

    Column order: base metrics ``m1..mK`` first, then clones in group order,
    named after their source (``m2_clone1`` is the first clone of ``m2``).
    """
    rng = np.random.default_rng(spec.seed)
    n, k = spec.module_count, spec.base_metric_count
    base = rng.standard_normal((n, k))
    names = [f"m{i + 1}" for i in range(k)]
    cols = [base[:, i] for i in range(k)]
    clones_of = [0] * k
    for src, count, sd in spec.clone_groups:
        for _ in range(count):
            noise = rng.standard_normal(n) * sd
            cols.append(base[:, src] + noise)
            clones_of[src] += 1
            names.append(f"m{src + 1}_clone{clones_of[src]}")
    logits = base @ np.asarray(spec.signal_coefficients)
    probs = np.empty(n)
    pos = logits >= 0
    probs[pos] = 1.0 / (1.0 + np.exp(-logits[pos]))
    expl = np.exp(logits[~pos])
    probs[~pos] = expl / (1.0 + expl)
    outcome = rng.random(n) < probs
    return Dataset(tuple(names), np.column_stack(cols), outcome)
