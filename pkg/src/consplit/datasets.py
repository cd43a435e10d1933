"""Dataset containers, simulated data generation, CSV ingestion and splitting."""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)


class SchemaError(ValueError):
    """Raised when features, labels or group columns do not line up."""


@dataclass(frozen=True)
class DatasetView:
    """Immutable view of a dataset: features, +/-1 labels and group membership bits."""

    features: np.ndarray       # (n, d) float64
    labels: np.ndarray         # (n,) in {-1, +1}
    groups: np.ndarray         # (n, G) bool
    role: str = "train"        # train | val | test

    def __post_init__(self):
        f = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.float64)
        g = np.asarray(self.groups, dtype=bool)
        if f.ndim != 2 or f.shape[0] < 1:
            raise SchemaError(f"features must be a nonempty (n, d) matrix, got {f.shape}")
        if y.shape != (f.shape[0],):
            raise SchemaError(f"labels shape {y.shape} does not match n={f.shape[0]}")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise SchemaError("labels must be -1 or +1")
        if g.ndim != 2 or g.shape[0] != f.shape[0]:
            raise SchemaError(f"groups shape {g.shape} does not match n={f.shape[0]}")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "groups", g)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def num_groups(self) -> int:
        return self.groups.shape[1]

    def subset(self, idx: np.ndarray, role: str | None = None) -> "DatasetView":
        return DatasetView(self.features[idx], self.labels[idx], self.groups[idx],
                           role if role is not None else self.role)


@dataclass(frozen=True)
class SimulatedSpec:
    """Two-Gaussian mixture with RBF features against a second sample of landmarks."""

    n: int = 1000
    sigma: float = 1.0
    mean_neg: tuple = (-1.0, 0.0)
    mean_pos: tuple = (1.0, 0.0)
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


def rbf_features(z: np.ndarray, w: np.ndarray, sigma: float) -> np.ndarray:
    """exp(-||z_i - w_j||^2 / 2 sigma^2) for every point/landmark pair."""
    sq = ((z[:, None, :] - w[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-sq / (2.0 * sigma ** 2))


def generate_simulated(spec: SimulatedSpec):
    """Draw points and landmarks, build RBF features, return equal train/val/test views."""
    rng = np.random.default_rng(spec.seed)
    means = np.array([spec.mean_neg, spec.mean_pos], dtype=float)

    comp_z = rng.integers(0, 2, size=spec.n)
    z = means[comp_z] + rng.standard_normal((spec.n, 2))
    # landmarks come from the same mixture, components resampled independently
    comp_w = rng.integers(0, 2, size=spec.n)
    w = means[comp_w] + rng.standard_normal((spec.n, 2))

    x = rbf_features(z, w, spec.sigma)
    y = np.where(comp_z == 1, 1.0, -1.0)
    groups = np.zeros((spec.n, 0), dtype=bool)

    perm = rng.permutation(spec.n)
    third = spec.n // 3
    parts = (perm[:third], perm[third:2 * third], perm[2 * third:])
    full = DatasetView(x, y, groups)
    return (full.subset(parts[0], "train"),
            full.subset(parts[1], "val"),
            full.subset(parts[2], "test"))


@dataclass(frozen=True)
class GroupDef:
    """Group membership rule: a column equals a value, or sits above a percentile."""

    column: str
    op: str              # "==", ">=", "<", ">=pct", "<pct"
    value: object = None

    def mask(self, frame: pd.DataFrame, thresholds: dict) -> np.ndarray:
        col = frame[self.column]
        if self.op == "==":
            return (col == self.value).to_numpy()
        if self.op == ">=":
            return (col.astype(float) >= float(self.value)).to_numpy()
        if self.op == "<":
            return (col.astype(float) < float(self.value)).to_numpy()
        thr = thresholds[(self.column, float(self.value))]
        vals = col.astype(float).to_numpy()
        # value at the threshold counts as the "high" group
        return vals >= thr if self.op == ">=pct" else vals < thr

    def needs_percentile(self) -> bool:
        return self.op in (">=pct", "<pct")


@dataclass(frozen=True)
class TabularSpec:
    """CSV ingestion recipe: label rule, group rules and feature preprocessing."""

    source: str
    label_column: str
    positive_value: object
    feature_columns: tuple = ()          # empty = all non-label columns
    categorical_columns: tuple = ()
    bucketize_columns: tuple = ()        # numeric columns one-hot encoded by decile
    groups: tuple = ()                   # GroupDef sequence
    num_buckets: int = 10
    role: str = "train"


def _prepare_frame(spec: TabularSpec, path: str) -> pd.DataFrame:
    frame = pd.read_csv(path, na_values=["?"], skipinitialspace=True)
    missing = [c for c in (spec.label_column, *spec.feature_columns,
                           *(g.column for g in spec.groups)) if c not in frame.columns]
    if missing:
        raise SchemaError(f"missing columns in {path}: {missing}")
    before = len(frame)
    frame = frame.dropna().reset_index(drop=True)
    if before - len(frame):
        log.info("dropped %d rows with missing values from %s", before - len(frame), path)
    if len(frame) == 0:
        raise SchemaError(f"no usable rows in {path}")
    return frame


def _fit_encoding(spec: TabularSpec, frame: pd.DataFrame) -> dict:
    cols = list(spec.feature_columns) if spec.feature_columns else \
        [c for c in frame.columns if c != spec.label_column]
    enc = {"columns": cols, "categories": {}, "bucket_edges": {}, "percentiles": {}}
    for c in cols:
        if c in spec.categorical_columns or frame[c].dtype == object:
            enc["categories"][c] = sorted(frame[c].astype(str).unique())
        elif c in spec.bucketize_columns:
            qs = np.linspace(0, 100, spec.num_buckets + 1)[1:-1]
            enc["bucket_edges"][c] = np.unique(np.percentile(frame[c].astype(float), qs))
    for g in spec.groups:
        if g.needs_percentile():
            key = (g.column, float(g.value))
            enc["percentiles"][key] = float(np.percentile(frame[g.column].astype(float),
                                                          float(g.value)))
    return enc


def _encode(spec: TabularSpec, frame: pd.DataFrame, enc: dict, role: str) -> DatasetView:
    blocks = []
    for c in enc["columns"]:
        if c in enc["categories"]:
            cats = enc["categories"][c]
            vals = frame[c].astype(str).to_numpy()
            blocks.append((vals[:, None] == np.array(cats)[None, :]).astype(float))
        elif c in enc["bucket_edges"]:
            edges = enc["bucket_edges"][c]
            idx = np.searchsorted(edges, frame[c].astype(float).to_numpy(), side="right")
            onehot = np.zeros((len(frame), len(edges) + 1))
            onehot[np.arange(len(frame)), idx] = 1.0
            blocks.append(onehot)
        else:
            blocks.append(frame[c].astype(float).to_numpy()[:, None])
    features = np.hstack(blocks) if blocks else np.zeros((len(frame), 0))
    labels = np.where(frame[spec.label_column] == spec.positive_value, 1.0, -1.0)
    if spec.groups:
        groups = np.column_stack([g.mask(frame, enc["percentiles"]) for g in spec.groups])
    else:
        groups = np.zeros((len(frame), 0), dtype=bool)
    log.info("loaded %d rows, %d features, %d groups (%s)",
             len(frame), features.shape[1], groups.shape[1], role)
    return DatasetView(features, labels, groups, role)


def load_tabular(spec: TabularSpec, test_source: str | None = None):
    """Load a CSV into a DatasetView; optionally encode a test CSV with the same recipe.

    Encodings (one-hot categories, bucket edges, group percentiles) are fit on the
    primary source only and reused on the test file.
    """
    frame = _prepare_frame(spec, spec.source)
    enc = _fit_encoding(spec, frame)
    train = _encode(spec, frame, enc, spec.role)
    if test_source is None:
        return train
    test = _encode(spec, _prepare_frame(spec, test_source), enc, "test")
    return train, test


def split(data: DatasetView, mode: str, seed: int):
    """Return (train, val) views: disjoint random halves, or two aliases of the full set."""
    if mode == "one_dataset":
        whole = np.arange(data.n)
        return data.subset(whole, "train"), data.subset(whole, "val")
    if mode != "two_dataset":
        raise ValueError(f"unknown dataset mode {mode!r}")
    perm = np.random.default_rng(seed).permutation(data.n)
    half = data.n // 2
    return data.subset(perm[:half], "train"), data.subset(perm[half:], "val")


_CACHE_MAGIC = b"CSPLIT1\n"


def save_cache(data: DatasetView, path: str | Path) -> None:
    """Binary cache: header + row-major float64 features + label bytes + group bitmap."""
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(f"{data.role} {data.n} {data.dim} {data.num_groups}\n".encode())
        fh.write(data.features.astype("<f8").tobytes())
        fh.write(np.where(data.labels > 0, 1, 0).astype(np.uint8).tobytes())
        fh.write(np.packbits(data.groups, axis=None).tobytes())


def load_cache(path: str | Path) -> DatasetView:
    with open(path, "rb") as fh:
        if fh.read(len(_CACHE_MAGIC)) != _CACHE_MAGIC:
            raise SchemaError(f"{path} is not a dataset cache")
        role, n, d, g = fh.readline().decode().split()
        n, d, g = int(n), int(d), int(g)
        features = np.frombuffer(fh.read(n * d * 8), dtype="<f8").reshape(n, d)
        labels = np.where(np.frombuffer(fh.read(n), dtype=np.uint8) > 0, 1.0, -1.0)
        bits = np.unpackbits(np.frombuffer(fh.read(), dtype=np.uint8))[:n * g]
        groups = bits.reshape(n, g).astype(bool) if g else np.zeros((n, 0), bool)
    return DatasetView(features.copy(), labels, groups, role)
