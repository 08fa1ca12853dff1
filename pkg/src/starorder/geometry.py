"""Star-glyph geometry and shape-context distances.

A glyph with values v and ordering o puts coordinate o[i] on the ray at
angle 2*pi*i/n (counter-clockwise from +x) with radius
``r_floor + (1 - r_floor) * v[o[i]]``. The closed polygon is resampled at h
arc-length-uniform points starting from the position-0 vertex, and every
sample gets a 5 (log radius) x 12 (angle) histogram of where the other
samples lie. Two glyphs are compared index-wise with the chi-squared cost.

Batch kernels exist in two flavours (numba loops / numpy vectorised); see
``starorder._jit`` for how one is chosen.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _jit
from ._jit import njit
from .errors import GeometryError, InvalidArgument

R_FLOOR = 1e-3
N_RADIUS = 5
N_ANGLE = 12
N_BINS = N_RADIUS * N_ANGLE
INNER_FRACTION = 0.125          # innermost radius edge as a fraction of R
DEFAULT_H = 80

# Neighbours lying on a bin edge up to float noise go to the upper bin; edges
# joining equal-radius vertices often point exactly along an angle-bin edge.
BIN_SNAP = 1e-9

_LOG_SPAN = math.log(1.0 / INNER_FRACTION)
_ANGLE_SCALE = N_ANGLE / (2.0 * math.pi)
_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class StarGlyph:
    values: np.ndarray
    order: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        order = np.asarray(self.order, dtype=np.int64)
        check_ordering(order, values.shape[0])
        if np.any(values < 0) or np.any(values > 1):
            raise InvalidArgument("glyph values must lie in [0, 1]")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "order", order)


def check_ordering(order, n):
    order = np.asarray(order)
    if order.shape != (n,) or not np.array_equal(np.sort(order), np.arange(n)):
        raise InvalidArgument(f"ordering {order.tolist()} is not a permutation of 0..{n - 1}")
    return order


def build_polygon(glyph: StarGlyph, r_floor: float = R_FLOOR) -> np.ndarray:
    """Vertices (n x 2) in position order; the polygon is implicitly closed."""
    return _polygon(glyph.values[glyph.order], r_floor)


def _polygon(ordered_values, r_floor=R_FLOOR):
    n = ordered_values.shape[0]
    radius = r_floor + (1.0 - r_floor) * ordered_values
    theta = _TWO_PI * np.arange(n) / n
    return np.stack([radius * np.cos(theta), radius * np.sin(theta)], axis=-1)


def sample_contour(vertices: np.ndarray, h: int = DEFAULT_H) -> np.ndarray:
    """h points equally spaced along the closed polygon, starting at vertex 0."""
    vertices = np.asarray(vertices, dtype=np.float64)
    if h < vertices.shape[0]:
        raise InvalidArgument(f"h={h} must be at least the vertex count {vertices.shape[0]}")
    out = np.empty((h, 2))
    if not _sample_into(vertices, h, out):
        raise GeometryError("polygon has zero perimeter")
    return out


def _sample_into(vertices, h, out):
    nxt = np.roll(vertices, -1, axis=0)
    seg = np.hypot(nxt[:, 0] - vertices[:, 0], nxt[:, 1] - vertices[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if not total > 0:
        return False
    s = np.arange(h) * (total / h)
    edge = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    length = seg[edge]
    frac = np.where(length > 0, (s - cum[edge]) / np.where(length > 0, length, 1.0), 0.0)
    out[:] = vertices[edge] + frac[:, None] * (nxt[edge] - vertices[edge])
    return True


def shape_context(samples: np.ndarray) -> np.ndarray:
    """Normalised log-polar histograms, one row of 60 bins per sample point.

    Bin index is ``radius_bin * 12 + angle_bin``. Angles are measured in the
    absolute frame; an angle within ``BIN_SNAP`` bins below an edge counts
    as lying on it. Radius edges are geometric between R/8 and R, where R is
    twice the mean pairwise sample distance; neighbours outside that range
    fall into the innermost or outermost radius bin.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[0] < 2:
        raise InvalidArgument("need at least two sample points")
    return _descriptors(samples[None])[0]


def chi2_cost(h1, h2) -> float:
    h1 = np.asarray(h1, dtype=np.float64)
    h2 = np.asarray(h2, dtype=np.float64)
    den = h1 + h2
    num = (h1 - h2) ** 2
    mask = den > 0
    return 0.5 * float(np.sum(num[mask] / den[mask]))


def shape_distance(d1: np.ndarray, d2: np.ndarray) -> float:
    """Mean chi-squared cost over index-corresponding histogram rows."""
    d1 = np.asarray(d1, dtype=np.float64)
    d2 = np.asarray(d2, dtype=np.float64)
    if d1.shape != d2.shape:
        raise InvalidArgument(f"descriptor shapes differ: {d1.shape} vs {d2.shape}")
    den = d1 + d2
    safe = np.where(den > 0, den, 1.0)
    return float(0.5 * np.sum((d1 - d2) ** 2 / safe) / d1.shape[0])


# ---------------------------------------------------------------- batch API

def glyph_samples(values: np.ndarray, order=None, h: int = DEFAULT_H,
                  r_floor: float = R_FLOOR) -> np.ndarray:
    """Contour samples (G x h x 2) for every row of ``values`` under ``order``."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    G, n = values.shape
    order = np.arange(n) if order is None else check_ordering(order, n)
    if h < n:
        raise InvalidArgument(f"h={h} must be at least the coordinate count {n}")
    ordered = np.ascontiguousarray(values[:, order])
    out = np.empty((G, h, 2))
    if _jit.use_jit():
        ok = _samples_nb(ordered, h, r_floor, out)
    else:
        ok = all(_sample_into(_polygon(row, r_floor), h, out[g]) for g, row in enumerate(ordered))
    if not ok:
        raise GeometryError("glyph polygon has zero perimeter")
    return out


def glyph_descriptors(values: np.ndarray, order=None, h: int = DEFAULT_H,
                      r_floor: float = R_FLOOR) -> np.ndarray:
    """Shape-context descriptors (G x h x 60) for every row of ``values``."""
    return _descriptors(glyph_samples(values, order, h, r_floor))


def descriptor_distances(desc: np.ndarray) -> np.ndarray:
    """Symmetric G x G matrix of shape distances between descriptors."""
    desc = np.ascontiguousarray(desc, dtype=np.float64)
    if _jit.use_jit():
        return _pairwise_nb(desc)
    return _pairwise_np(desc)


def glyph_distance_matrix(values, order=None, h: int = DEFAULT_H) -> np.ndarray:
    return descriptor_distances(glyph_descriptors(values, order, h))


def _descriptors(samples):
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    G, h, _ = samples.shape
    out = np.zeros((G, h, N_BINS))
    if _jit.use_jit():
        ok = _descriptors_nb(samples, out)
    else:
        ok = _descriptors_np(samples, out)
    if not ok:
        raise GeometryError("all contour samples coincide; shape context undefined")
    return out


# ---------------------------------------------------------------- numpy kernels

def _descriptors_np(samples, out, chunk=64):
    G, h, _ = samples.shape
    off = ~np.eye(h, dtype=bool)
    for start in range(0, G, chunk):
        pts = samples[start:start + chunk]
        g = pts.shape[0]
        # dx[g, t, s] = x_s - x_t: neighbour s seen from centre t
        dx = pts[:, None, :, 0] - pts[:, :, None, 0]
        dy = pts[:, None, :, 1] - pts[:, :, None, 1]
        r = np.sqrt(dx * dx + dy * dy)
        mean = np.sum(np.triu(r, 1), axis=(1, 2)) / (h * (h - 1) / 2)
        R = 2.0 * mean
        if np.any(~(R > 0)):
            return False
        rmin = INNER_FRACTION * R
        ratio = r / rmin[:, None, None]
        with np.errstate(divide="ignore"):
            u = np.log(ratio) / _LOG_SPAN
        rb = np.floor(N_RADIUS * u)
        rb = np.where(ratio < 1.0, 0, np.where(r >= R[:, None, None], N_RADIUS - 1, rb))
        rb = np.clip(rb, 0, N_RADIUS - 1).astype(np.int64)
        th = np.arctan2(dy, dx)
        th = np.where(th < 0, th + _TWO_PI, th)
        ab = np.floor(th * _ANGLE_SCALE + BIN_SNAP).astype(np.int64) % N_ANGLE
        idx = rb * N_ANGLE + ab
        rows = (np.arange(g)[:, None, None] * h + np.arange(h)[None, :, None]) * N_BINS
        flat = (rows + idx)[:, off]
        counts = np.bincount(flat.ravel(), minlength=g * h * N_BINS)
        out[start:start + g] = counts.reshape(g, h, N_BINS) / (h - 1)
    return True


def _pairwise_np(desc, chunk=16):
    G, h, B = desc.shape
    D = np.zeros((G, G))
    for i in range(G - 1):
        rest = desc[i + 1:]
        for s in range(0, rest.shape[0], chunk):
            b = rest[s:s + chunk]
            a = desc[i][None]
            den = a + b
            num = (a - b) ** 2
            val = 0.5 * np.sum(num / np.where(den > 0, den, 1.0), axis=(1, 2)) / h
            D[i, i + 1 + s:i + 1 + s + b.shape[0]] = val
    return D + D.T


# ---------------------------------------------------------------- numba kernels

@njit
def _samples_nb(ordered, h, r_floor, out):
    G, n = ordered.shape
    vx = np.empty(n)
    vy = np.empty(n)
    seg = np.empty(n)
    cum = np.empty(n + 1)
    for g in range(G):
        for i in range(n):
            rad = r_floor + (1.0 - r_floor) * ordered[g, i]
            th = 2.0 * np.pi * i / n
            vx[i] = rad * np.cos(th)
            vy[i] = rad * np.sin(th)
        cum[0] = 0.0
        for i in range(n):
            j = (i + 1) % n
            seg[i] = np.hypot(vx[j] - vx[i], vy[j] - vy[i])
            cum[i + 1] = cum[i] + seg[i]
        total = cum[n]
        if not total > 0:
            return False
        step = total / h
        e = 0
        for k in range(h):
            s = k * step
            while e < n - 1 and cum[e + 1] <= s:
                e += 1
            j = (e + 1) % n
            frac = (s - cum[e]) / seg[e] if seg[e] > 0 else 0.0
            out[g, k, 0] = vx[e] + frac * (vx[j] - vx[e])
            out[g, k, 1] = vy[e] + frac * (vy[j] - vy[e])
    return True


@njit
def _descriptors_nb(samples, out):
    G, h, _ = samples.shape
    r = np.empty((h, h))
    log_span = np.log(1.0 / 0.125)
    angle_scale = 12 / (2.0 * np.pi)
    snap = BIN_SNAP
    two_pi = 2.0 * np.pi
    denom = float(h - 1)
    for g in range(G):
        total = 0.0
        for t in range(h):
            r[t, t] = 0.0
            for s in range(t + 1, h):
                dx = samples[g, s, 0] - samples[g, t, 0]
                dy = samples[g, s, 1] - samples[g, t, 1]
                d = np.sqrt(dx * dx + dy * dy)
                r[t, s] = d
                r[s, t] = d
        # summation order differs from numpy's pairwise sum; kernels agree to ~1e-15
        for t in range(h):
            for s in range(t + 1, h):
                total += r[t, s]
        R = 2.0 * total / (h * (h - 1) / 2)
        if not R > 0:
            return False
        rmin = 0.125 * R
        for t in range(h):
            for s in range(h):
                if s == t:
                    continue
                d = r[t, s]
                ratio = d / rmin
                if ratio < 1.0:
                    rb = 0
                elif d >= R:
                    rb = 4
                else:
                    rb = int(np.floor(5 * (np.log(ratio) / log_span)))
                    if rb > 4:
                        rb = 4
                    elif rb < 0:
                        rb = 0
                dx = samples[g, s, 0] - samples[g, t, 0]
                dy = samples[g, s, 1] - samples[g, t, 1]
                th = np.arctan2(dy, dx)
                if th < 0:
                    th += two_pi
                ab = int(np.floor(th * angle_scale + snap)) % 12
                out[g, t, rb * 12 + ab] += 1.0
            for b in range(60):
                out[g, t, b] /= denom
    return True


@njit
def _pairwise_nb(desc):
    G, h, B = desc.shape
    D = np.zeros((G, G))
    for i in range(G):
        for j in range(i + 1, G):
            acc = 0.0
            for t in range(h):
                for b in range(B):
                    a = desc[i, t, b]
                    c = desc[j, t, b]
                    den = a + c
                    if den > 0:
                        diff = a - c
                        acc += diff * diff / den
            D[i, j] = 0.5 * acc / h
            D[j, i] = D[i, j]
    return D
