"""Labelled multivariate data sets: synthesis, normalisation, I/O and the
coordinate-wise encoding consumed by the ordering network."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgument, ParseError, DataError


@dataclass(eq=False)
class DataSet:
    """m points in n dimensions with dense class labels 1..K."""

    points: np.ndarray
    labels: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.array(self.points, dtype=np.float64)
        self.labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        if self.points.ndim != 2:
            raise DataError(f"points must be a 2-D matrix, got shape {self.points.shape}")
        m, n = self.points.shape
        if m < 2 or n < 2:
            raise DataError(f"need at least 2 points and 2 coordinates, got {m}x{n}")
        if self.labels.shape[0] != m:
            raise DataError(f"{self.labels.shape[0]} labels for {m} points")
        if not np.all(np.isfinite(self.points)):
            raise DataError("points contain non-finite values")
        K = int(self.labels.max()) if m else 0
        if self.labels.min() < 1 or set(np.unique(self.labels).tolist()) != set(range(1, K + 1)):
            raise DataError("labels must be dense class ids 1..K with every class present")

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def K(self) -> int:
        return int(self.labels.max())

    def __eq__(self, other):
        if not isinstance(other, DataSet):
            return NotImplemented
        return (
            np.array_equal(self.points, other.points)
            and np.array_equal(self.labels, other.labels)
            and self.meta == other.meta
        )

    def to_dict(self) -> dict:
        return {
            "points": self.points.tolist(),
            "labels": self.labels.tolist(),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DataSet":
        try:
            return cls(doc["points"], doc["labels"], dict(doc.get("meta", {})))
        except KeyError as exc:
            raise DataError(f"dataset document is missing key {exc}") from None


@dataclass(eq=False)
class ClusterCenters:
    centers: np.ndarray      # K x n
    assignment: np.ndarray   # length m, row index into centers


@dataclass(eq=False)
class CoordinateEncoding:
    """tokens[i, j] = (value of point j on coordinate i, its class centre on i)."""

    tokens: np.ndarray       # n x m x 2

    @property
    def n(self) -> int:
        return self.tokens.shape[0]

    @property
    def m(self) -> int:
        return self.tokens.shape[1]


def _class_sizes(m, K):
    base, extra = divmod(m, K)
    return [base + (1 if k < extra else 0) for k in range(K)]


def synth_dataset(m, n, K, sigma_range=(0.1, 0.3), mean_range=(10.0, 100.0), seed=0) -> DataSet:
    """Gaussian blobs, one per class, with classes as even in size as possible.

    Each class k gets a mean drawn from ``Uniform(mean_range)^n`` and a single
    standard deviation drawn from ``Uniform(sigma_range)``.
    """
    if K < 1 or m < K:
        raise InvalidArgument(f"need m >= K >= 1, got m={m}, K={K}")
    if n < 2:
        raise InvalidArgument(f"need n >= 2, got {n}")
    for name, (lo, hi) in (("sigma_range", sigma_range), ("mean_range", mean_range)):
        if hi < lo:
            raise InvalidArgument(f"{name} is empty: [{lo}, {hi}]")
    if sigma_range[0] < 0:
        raise InvalidArgument("sigma_range must be non-negative")
    rng = np.random.default_rng(seed)
    means = rng.uniform(mean_range[0], mean_range[1], size=(K, n))
    sigmas = rng.uniform(sigma_range[0], sigma_range[1], size=K)
    labels = np.repeat(np.arange(1, K + 1), _class_sizes(m, K))
    noise = rng.standard_normal((m, n))
    points = means[labels - 1] + sigmas[labels - 1, None] * noise
    meta = {"source": "synthetic", "seed": int(seed), "sigma_range": list(sigma_range),
            "mean_range": list(mean_range), "class_means": means.tolist(),
            "class_sigmas": sigmas.tolist()}
    return DataSet(points, labels, meta)


def synth_collection(count, m, n, K, seed=0, **kwargs) -> list[DataSet]:
    """``count`` independent sets; set i uses a seed derived from (seed, i)."""
    seeds = np.random.SeedSequence(seed).generate_state(count)
    return [synth_dataset(m, n, K, seed=int(s), **kwargs) for s in seeds]


def normalize(d: DataSet) -> DataSet:
    """Per-column min-max scaling to [0, 1]; constant columns map to 0.5."""
    lo = d.points.min(axis=0)
    hi = d.points.max(axis=0)
    span = hi - lo
    out = np.full_like(d.points, 0.5)
    ok = span > 0
    out[:, ok] = (d.points[:, ok] - lo[ok]) / span[ok]
    return DataSet(out, d.labels.copy(), dict(d.meta))


def compute_cluster_centers(d: DataSet) -> ClusterCenters:
    K = d.K
    centers = np.zeros((K, d.n))
    for k in range(1, K + 1):
        centers[k - 1] = d.points[d.labels == k].mean(axis=0)
    return ClusterCenters(centers, d.labels - 1)


def encode_coordinates(d: DataSet, c: ClusterCenters | None = None) -> CoordinateEncoding:
    if c is None:
        c = compute_cluster_centers(d)
    per_point_centers = c.centers[c.assignment]          # m x n
    tokens = np.stack([d.points.T, per_point_centers.T], axis=-1)
    return CoordinateEncoding(np.ascontiguousarray(tokens))


def prepare(d: DataSet) -> tuple[DataSet, CoordinateEncoding]:
    """Normalise and encode in one go; the form every optimiser works on."""
    dn = normalize(d)
    return dn, encode_coordinates(dn)


# ---------------------------------------------------------------- I/O

def load_csv(path, label_column: str) -> DataSet:
    """Read a header-row CSV; every column except ``label_column`` is a feature.

    Labels are remapped to 1..K in order of first appearance and the raw
    label strings are kept in ``meta["label_names"]``.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty CSV file") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise ParseError(f"{path}: label column {label_column!r} not found", row=1)
        li = header.index(label_column)
        feature_names = [h for i, h in enumerate(header) if i != li]
        rows, raw_labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}: expected {len(header)} fields, found {len(row)}", row=lineno)
            values = []
            for i, cell in enumerate(row):
                if i == li:
                    continue
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(f"{path}: non-numeric value {cell!r}",
                                     row=lineno, column=header[i]) from None
            rows.append(values)
            raw_labels.append(row[li].strip())
    if not rows:
        raise ParseError(f"{path}: no data rows")
    names: dict[str, int] = {}
    labels = [names.setdefault(lab, len(names) + 1) for lab in raw_labels]
    meta = {"source": str(path), "label_names": list(names), "feature_names": feature_names}
    return DataSet(np.array(rows), labels, meta)


def save_json(d: DataSet, path) -> None:
    Path(path).write_text(json.dumps(d.to_dict()), encoding="utf-8")


def load_json(path) -> DataSet:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc.msg}", row=exc.lineno) from None
    return DataSet.from_dict(doc)


def save_collection(sets, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in sets:
            fh.write(json.dumps(d.to_dict()))
            fh.write("\n")


def load_collection(path) -> list[DataSet]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(DataSet.from_dict(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: invalid JSON: {exc.msg}", row=lineno) from None
    return out


def load_any(path) -> list[DataSet]:
    """A single ``.json`` dataset or a ``.jsonl`` collection, as a list."""
    path = Path(path)
    if path.suffix == ".jsonl":
        return load_collection(path)
    return [load_json(path)]
