"""Right-censored datasets: validation, CSV ingestion, and test containers.

An observation is (y, delta, x): the observed time y = min(T, C) > 0, the
event indicator delta = I(T <= C), and a covariate vector x of fixed length
p. Datasets require n >= 5 and at least one event. Ties in y are permitted.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DataError,
    InconsistentDimension,
    MissingColumn,
    NoEvents,
    NonBinaryStatus,
    NonPositiveTime,
    ParseError,
    TooFewObservations,
)
from .kernels import CovariateKernel, SmoothingSpec

__all__ = [
    "MIN_OBSERVATIONS",
    "CensoredObservation",
    "CensoredDataset",
    "validate_dataset",
    "ingest_csv",
    "flip_censoring",
    "TestConfig",
    "TestResult",
]

MIN_OBSERVATIONS = 5


@dataclass(frozen=True)
class CensoredObservation:
    """One observation: a positive time, a 0/1 status, and covariates."""

    time: float
    status: int
    covariates: tuple[float, ...]


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class CensoredDataset:
    """Immutable column store of a validated right-censored sample.

    Build one with validate_dataset / ingest_csv rather than directly; the
    constructor assumes its inputs already passed validation.
    """

    y: np.ndarray
    delta: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", _readonly(np.asarray(self.y, dtype=np.float64)))
        object.__setattr__(self, "delta", _readonly(np.asarray(self.delta, dtype=np.int64)))
        object.__setattr__(self, "x", _readonly(np.asarray(self.x, dtype=np.float64)))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def n_events(self) -> int:
        return int(self.delta.sum())

    def observation(self, i: int) -> CensoredObservation:
        return CensoredObservation(float(self.y[i]), int(self.delta[i]), tuple(self.x[i]))

    def __iter__(self):
        return (self.observation(i) for i in range(self.n))


def validate_dataset(rows: Iterable[Sequence]) -> CensoredDataset:
    """Validate raw (time, status, covariates) rows and build a dataset.

    Rows are checked in order, so the first offending row determines which
    error is raised: NonPositiveTime, NonBinaryStatus, or
    InconsistentDimension. Dataset-level checks (TooFewObservations, then
    NoEvents) come after the per-row ones.
    """
    times: list[float] = []
    statuses: list[int] = []
    covs: list[tuple[float, ...]] = []
    p: int | None = None
    for i, row in enumerate(rows):
        time, status, covariates = row
        t = float(time)
        if not (math.isfinite(t) and t > 0.0):
            raise NonPositiveTime(f"row {i}: time must be finite and > 0, got {time!r}")
        s = float(status)
        if s not in (0.0, 1.0):
            raise NonBinaryStatus(f"row {i}: status must be 0 or 1, got {status!r}")
        xv = tuple(float(v) for v in covariates)
        if len(xv) < 1:
            raise InconsistentDimension(f"row {i}: empty covariate vector")
        if p is None:
            p = len(xv)
        elif len(xv) != p:
            raise InconsistentDimension(f"row {i}: covariate length {len(xv)} != {p}")
        if not all(math.isfinite(v) for v in xv):
            raise DataError(f"row {i}: covariates must be finite, got {covariates!r}")
        times.append(t)
        statuses.append(int(s))
        covs.append(xv)
    n = len(times)
    if n < MIN_OBSERVATIONS:
        raise TooFewObservations(f"need at least {MIN_OBSERVATIONS} observations, got {n}")
    if sum(statuses) == 0:
        raise NoEvents("dataset contains no uncensored observation")
    return CensoredDataset(np.array(times), np.array(statuses), np.array(covs))


def ingest_csv(
    path, time_col: str, status_col: str, covariate_cols: Sequence[str] | None = None
) -> CensoredDataset:
    """Read a header-bearing CSV (RFC 4180) into a validated dataset.

    covariate_cols None means every column other than time and status, in
    file order. Raises MissingColumn if any named column is absent,
    ParseError (with the 1-based data row and column name) for unparseable
    cells, and the usual validation errors afterwards.
    """
    with open(Path(path), newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumn("empty file: no header row") from None
        if covariate_cols is None:
            covariate_cols = [c for c in header if c not in (time_col, status_col)]
        index: dict[str, int] = {}
        for name in [time_col, status_col, *covariate_cols]:
            if name not in header:
                raise MissingColumn(f"column {name!r} not found in header {header}")
            index[name] = header.index(name)
        rows = []
        for rownum, record in enumerate(reader, start=1):
            values = []
            for name in (time_col, status_col, *covariate_cols):
                j = index[name]
                if j >= len(record):
                    raise ParseError(rownum, name, "row has too few fields")
                cell = record[j]
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(rownum, name, f"cannot parse {cell!r} as a number") from None
            # status must be integral 0/1; 2.0 etc. is caught by validation
            status = values[1]
            if status not in (0.0, 1.0):
                raise NonBinaryStatus(f"row {rownum}: status must be 0 or 1, got {status!r}")
            rows.append((values[0], status, values[2:]))
    return validate_dataset(rows)


def flip_censoring(ds: CensoredDataset) -> CensoredDataset:
    """Swap the roles of event and censoring (delta -> 1 - delta).

    Testing the flipped dataset probes independence of the censoring time
    and the covariates. Raises NoEvents if the flip would leave no events,
    i.e. the original sample is fully uncensored.
    """
    flipped = 1 - ds.delta
    if int(flipped.sum()) == 0:
        raise NoEvents("flipping would leave no events: every observation is an event")
    return CensoredDataset(ds.y.copy(), flipped, ds.x.copy())


@dataclass(frozen=True)
class TestConfig:
    """Configuration for one independence test run.

    smoothing "auto" resolves the bandwidth with silverman_bandwidth;
    a Gaussian/Laplacian kernel with gamma=None resolves the scale with the
    median heuristic. The variant names the wild-bootstrap statistic and
    thereby the observed statistic it is paired with ("v-wild" pairs with
    the event-sum V-statistic, "u-wild" with the U-statistic).
    """

    kernel: CovariateKernel | None = None
    smoothing: SmoothingSpec | str = "auto"
    bootstrap_reps: int = 2000
    alpha: float = 0.05
    seed: int = 0
    bootstrap_variant: str = "v-wild"

    def __post_init__(self):
        if not (isinstance(self.bootstrap_reps, int) and self.bootstrap_reps >= 1):
            raise ValueError(f"bootstrap_reps must be an integer >= 1, got {self.bootstrap_reps}")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ValueError(f"seed must be a u64 integer, got {self.seed}")
        if self.bootstrap_variant not in ("v-wild", "u-wild"):
            raise ValueError(f"unknown bootstrap variant {self.bootstrap_variant!r}")
        if not isinstance(self.smoothing, SmoothingSpec) and self.smoothing != "auto":
            raise ValueError(f"smoothing must be a SmoothingSpec or 'auto', got {self.smoothing!r}")


@dataclass(frozen=True)
class TestResult:
    """Outcome of one test: statistic, scaled draws, and the decision.

    scaled_statistic = n * h^(1/2) * statistic, and every entry of
    bootstrap_draws carries the same scaling. critical_value is the
    ascending order statistic of the draws at rank ceil((1 - alpha) * B);
    p_value = (1 + #{draws >= scaled}) / (B + 1); reject is exactly
    scaled_statistic >= critical_value.
    """

    statistic: float
    scaled_statistic: float
    bootstrap_draws: np.ndarray = field(repr=False)
    critical_value: float
    p_value: float
    reject: bool
    h_used: float
    gamma_used: float | None

    def __post_init__(self):
        object.__setattr__(
            self, "bootstrap_draws", _readonly(np.asarray(self.bootstrap_draws, dtype=np.float64))
        )
