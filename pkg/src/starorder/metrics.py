"""Class-separation scores for orderings: shape-based silhouette for star
glyphs, Davies-Bouldin ratio for RadViz."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import DataSet, normalize
from .errors import DegenerateInput, InvalidArgument
from .geometry import DEFAULT_H, check_ordering, glyph_distance_matrix


@dataclass
class SilhouetteReport:
    s: np.ndarray
    class_means: np.ndarray
    sc: float


def silhouette_values(dm: np.ndarray, labels) -> SilhouetteReport:
    """Per-point silhouette values plus per-class means and their maximum.

    A point alone in its class gets s = 0, as does a point whose intra- and
    nearest-other-class mean distances are both zero.
    """
    dm = np.asarray(dm, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    m = labels.shape[0]
    if dm.shape != (m, m):
        raise InvalidArgument(f"distance matrix shape {dm.shape} does not match {m} labels")
    K = int(labels.max())
    if K < 2:
        raise InvalidArgument("silhouette needs at least two classes")
    onehot = labels[:, None] == np.arange(1, K + 1)[None, :]
    sizes = onehot.sum(axis=0)
    if np.any(sizes == 0):
        raise InvalidArgument("labels must be dense 1..K")
    sums = dm @ onehot                                   # m x K
    own = labels - 1
    own_size = sizes[own]
    with np.errstate(invalid="ignore", divide="ignore"):
        a = sums[np.arange(m), own] / (own_size - 1)
    other = sums / sizes
    other[np.arange(m), own] = np.inf
    b = other.min(axis=1)
    denom = np.maximum(a, b)
    s = np.zeros(m)
    ok = (own_size > 1) & (denom > 0)
    s[ok] = (b[ok] - a[ok]) / denom[ok]
    class_means = np.array([s[own == k].mean() for k in range(K)])
    return SilhouetteReport(s, class_means, float(class_means.max()))


def silhouette_coefficient(report: SilhouetteReport) -> float:
    return float(np.max(report.class_means))


class ExactDistance:
    """Pairwise shape distances computed from shape-context descriptors."""

    name = "exact"

    def __init__(self, h: int = DEFAULT_H):
        self.h = h

    def distance_matrix(self, values, order):
        return glyph_distance_matrix(values, order, self.h)


def sc_of_ordering(d: DataSet, order, dist=None) -> float:
    """Silhouette coefficient of the star-glyph set drawn under ``order``."""
    dist = dist or ExactDistance()
    dn = normalize(d)
    order = check_ordering(order, dn.n)
    dm = dist.distance_matrix(dn.points, order)
    return silhouette_values(dm, dn.labels).sc


# ---------------------------------------------------------------- RadViz

@dataclass
class RadVizLayout:
    anchors: np.ndarray      # n x 2, anchors[i] is ordering position i
    projected: np.ndarray    # m x 2


def radviz_anchors(n):
    theta = 2.0 * np.pi * np.arange(n) / n
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def radviz_project(d: DataSet, order) -> RadVizLayout:
    """Each point lands at the value-weighted mean of the anchors; constant
    rows (including all-zero ones) land exactly at the origin. Expects
    values already in [0, 1]."""
    order = check_ordering(order, d.n)
    anchors = radviz_anchors(d.n)
    w = d.points[:, order]
    total = w.sum(axis=1)
    proj = np.zeros((d.m, 2))
    # the anchors only sum to zero up to rounding, so constant rows are special-cased
    nz = (total > 0) & np.any(w != w[:, :1], axis=1)
    proj[nz] = (w[nz] @ anchors) / total[nz, None]
    return RadVizLayout(anchors, proj)


def davies_bouldin(points, labels) -> float:
    """Mean over clusters of the worst (s_k + s_l) / |c_k - c_l| ratio.

    Coincident centroids make their pair ratio infinite.
    """
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    K = len(classes)
    if K < 2:
        raise InvalidArgument("Davies-Bouldin index needs at least two clusters")
    cents = np.array([points[labels == k].mean(axis=0) for k in classes])
    spread = np.array([
        np.linalg.norm(points[labels == k] - cents[i], axis=1).mean()
        for i, k in enumerate(classes)
    ])
    sep = np.linalg.norm(cents[:, None, :] - cents[None, :, :], axis=-1)
    num = spread[:, None] + spread[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(sep > 0, num / np.where(sep > 0, sep, 1.0), np.inf)
    np.fill_diagonal(ratio, -np.inf)
    return float(ratio.max(axis=1).mean())


def db_ratio(d: DataSet, order, normalized: bool = False) -> float:
    """DB index of the n-D data over DB index of its RadViz projection.

    Both sides use the min-max normalised data that RadViz draws. Higher
    is better.
    """
    dn = d if normalized else normalize(d)
    top = davies_bouldin(dn.points, dn.labels)
    if not np.isfinite(top):
        raise DegenerateInput("class centroids coincide in the original space")
    bottom = davies_bouldin(radviz_project(dn, order).projected, dn.labels)
    if not np.isfinite(bottom):
        return 0.0
    if bottom == 0:
        if top == 0:
            raise DegenerateInput("zero-spread clusters in both spaces; ratio undefined")
        return float("inf")
    return top / bottom


# ---------------------------------------------------------------- objectives

class SCObjective:
    """Callable ``f(normalized_dataset, order) -> float``, higher is better."""

    name = "sc"

    def __init__(self, dist=None):
        self.dist = dist or ExactDistance()

    def __call__(self, dn: DataSet, order) -> float:
        dm = self.dist.distance_matrix(dn.points, np.asarray(order))
        return silhouette_values(dm, dn.labels).sc


class DBRatioObjective:
    name = "db_ratio"

    def __call__(self, dn: DataSet, order) -> float:
        return db_ratio(dn, np.asarray(order), normalized=True)


def make_objective(name: str = "sc", dist=None):
    if name == "sc":
        return SCObjective(dist)
    if name in ("db_ratio", "db", "dbratio"):
        return DBRatioObjective()
    raise InvalidArgument(f"unknown objective {name!r} (expected 'sc' or 'db_ratio')")
