"""CSV ingestion for alternative pools and deterministic results export."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .belief import Alternative, Observation, PriorConfig, batch_map_fit
from .simulate import ExperimentResult, GroundTruth

__all__ = [
    "Dataset",
    "DatasetError",
    "ResultRow",
    "RESULTS_HEADER",
    "load_csv",
    "minmax_scale",
    "write_dataset",
    "simulate_truth_from_dataset",
    "rows_from_result",
    "write_results",
]

RESULTS_HEADER = ("policy", "replication", "step", "selected_id", "observed_label", "impl_id", "oc")


class DatasetError(Exception):
    """A data file is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class Dataset:
    """A named pool of alternatives, optionally with observed binary labels."""

    name: str
    alternatives: list[Alternative]
    raw_labels: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.raw_labels is not None and len(self.raw_labels) != len(self.alternatives):
            raise ValueError("raw_labels must align with alternatives")

    @property
    def dim(self) -> int:
        return self.alternatives[0].dim

    def observations(self) -> list[Observation]:
        if self.raw_labels is None:
            raise DatasetError(f"dataset {self.name!r} has no labels")
        return [
            Observation(alt, int(label))
            for alt, label in zip(self.alternatives, self.raw_labels)
        ]


def minmax_scale(feats: np.ndarray) -> np.ndarray:
    """Map each column onto [-1, 1]; constant columns map to 0.

    Idempotent: a column already spanning [-1, 1] is left unchanged.
    """
    feats = np.asarray(feats, dtype=float)
    lo = feats.min(axis=0)
    hi = feats.max(axis=0)
    span = hi - lo
    out = np.zeros_like(feats)
    nonzero = span > 0
    out[:, nonzero] = 2.0 * (feats[:, nonzero] - lo[nonzero]) / span[nonzero] - 1.0
    return out


def _parse_label(value: float, where: str) -> int:
    if value in (-1.0, 1.0):
        return int(value)
    if value == 0.0:
        return -1
    raise DatasetError(f"label must be one of -1, 0, 1 at {where}, got {value!r}")


def load_csv(
    path: str,
    label_column: Optional[str] = None,
    intercept: bool = True,
    scale: str = "none",
) -> Dataset:
    """Read a pool from a headed CSV file.

    Non-label columns become features in column order.  Labels 0/1 are
    mapped to -1/+1 (-1/+1 pass through).  With ``scale="minmax"`` every
    feature is mapped onto [-1, 1] before the optional intercept coordinate
    is prepended; ``scale="none"`` keeps original values.
    """
    if scale not in ("none", "minmax"):
        raise DatasetError(f"unknown scale option {scale!r} (use 'none' or 'minmax')")
    if not os.path.exists(path):
        raise DatasetError(f"dataset file not found: {path}")

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        header = [name.strip() for name in header]
        if label_column is not None and label_column not in header:
            raise DatasetError(f"{path}: no column named {label_column!r} in header {header}")
        label_idx = header.index(label_column) if label_column is not None else None

        rows: list[list[float]] = []
        labels: list[int] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            feats: list[float] = []
            for col, cell in enumerate(row):
                try:
                    value = float(cell)
                except ValueError:
                    raise DatasetError(
                        f"{path}:{lineno}: non-numeric cell {cell!r} in column {header[col]!r}"
                    ) from None
                if not np.isfinite(value):
                    raise DatasetError(
                        f"{path}:{lineno}: non-finite value in column {header[col]!r}"
                    )
                if col == label_idx:
                    labels.append(_parse_label(value, f"{path}:{lineno}"))
                else:
                    feats.append(value)
            rows.append(feats)

    if not rows:
        raise DatasetError(f"{path}: no data rows")
    feats = np.array(rows, dtype=float)
    if scale == "minmax":
        feats = minmax_scale(feats)
    if intercept:
        feats = np.hstack([np.ones((feats.shape[0], 1)), feats])
    alternatives = [Alternative(i, feats[i]) for i in range(feats.shape[0])]
    raw = np.array(labels, dtype=np.int64) if label_idx is not None else None
    name = os.path.splitext(os.path.basename(path))[0]
    return Dataset(name=name, alternatives=alternatives, raw_labels=raw)


def write_dataset(path: str, feats: np.ndarray, columns: Optional[Sequence[str]] = None) -> None:
    """Write a feature matrix as a headed CSV that round-trips bit-exactly.

    Values are written with repr, whose shortest form parses back to the
    identical float64.
    """
    feats = np.asarray(feats, dtype=float)
    if feats.ndim != 2:
        raise ValueError("feats must be a 2-d matrix")
    if columns is None:
        columns = [f"x{j}" for j in range(feats.shape[1])]
    if len(columns) != feats.shape[1]:
        raise ValueError("column names must match feature count")
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in feats:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def simulate_truth_from_dataset(
    dataset: Dataset,
    lambda_fit: float,
    perturb_sigma: float,
    rng: np.random.Generator,
) -> GroundTruth:
    """Hidden weights for a real pool: a regularized fit, then Gaussian noise.

    Fits the logistic MAP on the dataset's own labels with prior precision
    ``lambda_fit`` and perturbs each coordinate with N(0, perturb_sigma^2).
    With ``perturb_sigma`` 0 the fitted vector is returned exactly.
    """
    if perturb_sigma < 0:
        raise ValueError("perturb_sigma must be non-negative")
    obs = dataset.observations()
    prior = PriorConfig(lam=lambda_fit, d=dataset.dim)
    w = batch_map_fit(prior, obs, tol=1e-8, max_iter=200)
    if perturb_sigma > 0:
        w = w + rng.normal(0.0, perturb_sigma, size=w.size)
    return GroundTruth(w)


@dataclass(frozen=True)
class ResultRow:
    """One benchmark record: what a policy chose, saw, and would implement."""

    policy: str
    replication: int
    step: int
    selected_id: int
    observed_label: int
    impl_id: int
    oc: float


def rows_from_result(result: ExperimentResult) -> list[ResultRow]:
    """Flatten an experiment into result rows (step is 1-based)."""
    rows: list[ResultRow] = []
    for policy, traces in result.traces.items():
        for rep, trace in enumerate(traces):
            for n in range(len(trace)):
                rows.append(
                    ResultRow(
                        policy=policy.value,
                        replication=rep,
                        step=n + 1,
                        selected_id=int(trace.selected[n]),
                        observed_label=int(trace.observed[n]),
                        impl_id=int(trace.implemented[n]),
                        oc=float(trace.oc[n]),
                    )
                )
    return rows


def write_results(rows: Iterable[ResultRow], path: str) -> None:
    """Write result rows as CSV, sorted by (policy, replication, step).

    The oc column carries 17 significant digits; identical inputs produce
    byte-identical files.
    """
    ordered = sorted(rows, key=lambda r: (r.policy, r.replication, r.step))
    seen: set[tuple[str, int, int]] = set()
    for row in ordered:
        key = (row.policy, row.replication, row.step)
        if key in seen:
            raise ValueError(f"duplicate result row for (policy, replication, step) = {key}")
        seen.add(key)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(RESULTS_HEADER) + "\n")
        for row in ordered:
            fh.write(
                f"{row.policy},{row.replication},{row.step},"
                f"{row.selected_id},{row.observed_label},{row.impl_id},{row.oc:.17g}\n"
            )


def read_results(path: str) -> list[ResultRow]:
    """Parse a results CSV written by :func:`write_results`."""
    if not os.path.exists(path):
        raise DatasetError(f"results file not found: {path}")
    rows: list[ResultRow] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != RESULTS_HEADER:
            raise DatasetError(f"{path}: unexpected results header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(RESULTS_HEADER):
                raise DatasetError(f"{path}:{lineno}: expected {len(RESULTS_HEADER)} cells")
            rows.append(
                ResultRow(
                    policy=row[0],
                    replication=int(row[1]),
                    step=int(row[2]),
                    selected_id=int(row[3]),
                    observed_label=int(row[4]),
                    impl_id=int(row[5]),
                    oc=float(row[6]),
                )
            )
    return rows
