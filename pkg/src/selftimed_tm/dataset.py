"""Binary-feature datasets for the single-class machine."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .tm import Sample

IRIS_RESOURCE = "iris_binary.txt"


class DatasetError(ValueError):
    pass


@dataclass
class Dataset:
    samples: list[Sample]
    feature_count: int
    source: str = ""
    train_idx: list[int] = field(default_factory=list)
    test_idx: list[int] = field(default_factory=list)

    def __len__(self):
        return len(self.samples)

    @property
    def train(self):
        return [self.samples[i] for i in self.train_idx]

    @property
    def test(self):
        return [self.samples[i] for i in self.test_idx]

    def features(self, idx=None):
        rows = self.samples if idx is None else [self.samples[i] for i in idx]
        return np.array([s.features for s in rows], dtype=np.uint8).reshape(len(rows), self.feature_count)

    def labels(self, idx=None):
        rows = self.samples if idx is None else [self.samples[i] for i in idx]
        return np.array([s.label for s in rows], dtype=bool)


def bundled_iris_path() -> Path:
    return Path(str(resources.files("selftimed_tm.data").joinpath(IRIS_RESOURCE)))


def parse_rows(lines, label_column=-1, target_class=0, source="<memory>"):
    samples = []
    width = None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        cells = [c for c in re.split(r"[,\s]+", line) if c]
        if width is None:
            width = len(cells)
            if width < 2:
                raise DatasetError(f"{source}:{lineno}: need at least one feature and a label")
        elif len(cells) != width:
            raise DatasetError(f"{source}:{lineno}: expected {width} columns, found {len(cells)}")
        try:
            label = cells.pop(label_column)
        except IndexError:
            raise DatasetError(f"{source}:{lineno}: no label column {label_column}") from None
        bits = []
        for col, cell in enumerate(cells):
            if cell not in ("0", "1"):
                raise DatasetError(f"{source}:{lineno}: feature {col} is {cell!r}, not 0/1")
            bits.append(int(cell))
        samples.append(Sample(tuple(bits), label == str(target_class)))
    if not samples:
        raise DatasetError(f"{source}: no samples")
    return samples


def split_indices(count, seed=0, train_fraction=0.8):
    order = np.random.default_rng(seed).permutation(count)
    cut = int(round(train_fraction * count))
    return sorted(order[:cut].tolist()), sorted(order[cut:].tolist())


def load_dataset(path=None, label_column=-1, target_class=0, seed=0, train_fraction=0.8) -> Dataset:
    """Read a 0/1 table (comma- or whitespace-separated) with one label column.

    The label becomes ``label == target_class``. ``path=None`` loads the
    bundled Iris table.
    """
    path = Path(path) if path is not None else bundled_iris_path()
    with open(path, encoding="utf-8") as fh:
        samples = parse_rows(fh, label_column, target_class, str(path))
    train, test = split_indices(len(samples), seed, train_fraction)
    return Dataset(samples, len(samples[0].features), str(path), train, test)


def majority_baseline(samples) -> float:
    labels = np.array([s.label for s in samples], dtype=bool)
    if labels.size == 0:
        raise DatasetError("empty dataset")
    return float(max(labels.mean(), 1 - labels.mean()))
