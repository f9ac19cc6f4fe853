"""Plaintext dataset shape and its CSV wire format.

CSV: first row is the header, the last column must be named `label` for
labeled data, every other column is a real-valued feature. Unlabeled inputs
(prediction requests) simply have no label column. Floats go through
Python's float()/repr(), i.e. correctly rounded parsing and shortest
round-trip printing.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from ..errors import SealnetError


class ParseError(SealnetError):
    pass


@dataclass
class Dataset:
    features: np.ndarray  # (n_rows, dimension) float64
    labels: list[str] | None  # None for unlabeled prediction inputs
    columns: list[str]

    @property
    def dimension(self) -> int:
        return int(self.features.shape[1])

    def __len__(self) -> int:
        return int(self.features.shape[0])

    @property
    def labeled(self) -> bool:
        return self.labels is not None

    def row(self, i: int) -> np.ndarray:
        return self.features[i]


def parse_csv(text: str) -> Dataset:
    lines = [line for line in io.StringIO(text).read().splitlines() if line.strip()]
    if not lines:
        raise ParseError("empty CSV")
    header = [c.strip() for c in lines[0].split(",")]
    if not header or any(not c for c in header):
        raise ParseError("malformed header")
    labeled = header[-1] == "label"
    dim = len(header) - 1 if labeled else len(header)
    if dim == 0:
        raise ParseError("no feature columns")
    rows: list[list[float]] = []
    labels: list[str] | None = [] if labeled else None
    for lineno, line in enumerate(lines[1:], start=2):
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(header):
            raise ParseError(f"line {lineno}: expected {len(header)} cells, got {len(cells)}")
        raw_features = cells[:-1] if labeled else cells
        try:
            rows.append([float(c) for c in raw_features])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
        if labeled:
            if not cells[-1]:
                raise ParseError(f"line {lineno}: empty label")
            labels.append(cells[-1])
    features = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    return Dataset(features=features, labels=labels, columns=header[:-1] if labeled else header)


def to_csv(dataset: Dataset) -> str:
    header = list(dataset.columns)
    if dataset.labeled:
        header = header + ["label"]
    out = [",".join(header)]
    for i in range(len(dataset)):
        cells = [repr(float(v)) for v in dataset.features[i]]
        if dataset.labeled:
            cells.append(dataset.labels[i])
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


def concat_datasets(datasets: list[Dataset]) -> Dataset:
    """Stack labeled datasets in the given order; dimensions must agree."""
    from .trainers import DimensionMismatch, EmptyDataset

    datasets = [d for d in datasets if len(d) > 0]
    if not datasets:
        raise EmptyDataset("no rows to train on")
    dim = datasets[0].dimension
    for d in datasets[1:]:
        if d.dimension != dim:
            raise DimensionMismatch(f"dimensions differ: {d.dimension} vs {dim}")
    features = np.concatenate([d.features for d in datasets], axis=0)
    labels: list[str] = []
    for d in datasets:
        if d.labels is None:
            raise ParseError("cannot concatenate unlabeled data into a training set")
        labels.extend(d.labels)
    return Dataset(features=features, labels=labels, columns=list(datasets[0].columns))
