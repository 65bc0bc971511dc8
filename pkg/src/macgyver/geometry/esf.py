"""Ensemble-of-shape-functions descriptor (640-D) for point clouds.

The descriptor is 10 concatenated 64-bin histograms computed from randomly
sampled point triples of a cloud that has been centroid-centered and scaled
to a unit bounding box:

    0..2   D2 distances between point pairs, split in / out / mixed
    3      D2 occupancy ratio of the traced pair line
    4..6   A3 angles of point triples, split in / out / mixed
    7..9   D3 sqrt triangle areas, split in / out / mixed

The in / out / mixed split comes from tracing each segment through a 64^3
occupancy voxel grid of the cloud: a segment whose sampled voxels are all
occupied is "in", one that only touches its endpoint voxels is "out",
anything else "mixed". Each sub-histogram is normalized to sum to 1; an
empty sub-histogram stays all zero.

Everything is driven by one seeded generator, so descriptors are
bit-reproducible for a fixed (cloud, sample_count, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud

GRID_SIZE = 64
BIN_COUNT = 64
SUBHIST_COUNT = 10
DESCRIPTOR_SIZE = SUBHIST_COUNT * BIN_COUNT
DEFAULT_SAMPLE_COUNT = 20_000

# samples taken along each traced segment; coarse DDA is enough at 64^3
_LINE_SAMPLES = 32
# max pair distance / sqrt(triangle area) inside a unit bounding box
_MAX_DIST = np.sqrt(3.0)
_MAX_SQRT_AREA = np.sqrt(np.sqrt(3.0) / 2.0)

_NAMES = (
    "d2_in", "d2_out", "d2_mixed", "d2_ratio",
    "a3_in", "a3_out", "a3_mixed",
    "d3_in", "d3_out", "d3_mixed",
)


@dataclass(frozen=True)
class EsfDescriptor:
    """640 values: 10 sub-histograms of 64 bins, each summing to 1 (or 0)."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (DESCRIPTOR_SIZE,):
            raise ValueError(f"expected ({DESCRIPTOR_SIZE},) values, got {vals.shape}")
        object.__setattr__(self, "values", vals)

    def subhistogram(self, index: int) -> np.ndarray:
        return self.values[index * BIN_COUNT:(index + 1) * BIN_COUNT]

    @staticmethod
    def subhistogram_names() -> tuple:
        return _NAMES

    def l1_distance(self, other: "EsfDescriptor") -> float:
        return float(np.abs(self.values - other.values).sum())


def normalize_cloud(points: np.ndarray) -> np.ndarray:
    """Centroid-center and scale so the longest bounding-box edge is 1."""
    centered = points - points.mean(axis=0)
    extent = centered.max(axis=0) - centered.min(axis=0)
    scale = extent.max()
    if scale > 0.0:
        centered = centered / scale
    return centered


def _voxel_indices(points: np.ndarray, lo: np.ndarray, inv_span: np.ndarray) -> np.ndarray:
    idx = np.floor((points - lo) * inv_span * GRID_SIZE).astype(np.int64)
    return np.clip(idx, 0, GRID_SIZE - 1)


def _sample_triples(rng: np.random.Generator, n_points: int, count: int) -> np.ndarray:
    """count x 3 index rows with three distinct indices each."""
    idx = rng.integers(0, n_points, size=(count, 3))
    while True:
        bad = (idx[:, 0] == idx[:, 1]) | (idx[:, 0] == idx[:, 2]) | (idx[:, 1] == idx[:, 2])
        if not bad.any():
            return idx
        idx[bad] = rng.integers(0, n_points, size=(int(bad.sum()), 3))


def _trace_fractions(a: np.ndarray, b: np.ndarray, grid_flat: np.ndarray,
                     lo: np.ndarray, inv_span: np.ndarray) -> np.ndarray:
    """Occupied fraction of _LINE_SAMPLES interior samples along each a->b segment."""
    out = np.empty(a.shape[0], dtype=np.float64)
    t = (np.arange(_LINE_SAMPLES, dtype=np.float64) + 0.5) / _LINE_SAMPLES
    chunk = 4096
    for start in range(0, a.shape[0], chunk):
        sl = slice(start, min(start + chunk, a.shape[0]))
        # (m, samples, 3) points along the segments
        pts = a[sl, None, :] + t[None, :, None] * (b[sl] - a[sl])[:, None, :]
        vi = _voxel_indices(pts.reshape(-1, 3), lo, inv_span)
        flat = (vi[:, 0] * GRID_SIZE + vi[:, 1]) * GRID_SIZE + vi[:, 2]
        occ = grid_flat[flat].reshape(-1, _LINE_SAMPLES)
        out[sl] = occ.mean(axis=1)
    return out


def _classify(fraction: np.ndarray) -> np.ndarray:
    """0 = in, 1 = out, 2 = mixed, from the traced occupancy fraction."""
    cls = np.full(fraction.shape, 2, dtype=np.int64)
    cls[fraction >= 1.0 - 1.0 / _LINE_SAMPLES] = 0
    cls[fraction <= 4.0 / _LINE_SAMPLES] = 1
    return cls


def _binned(values: np.ndarray, upper: float) -> np.ndarray:
    bins = np.floor(values / upper * BIN_COUNT).astype(np.int64)
    return np.clip(bins, 0, BIN_COUNT - 1)


def compute_esf(cloud: PointCloud, sample_count: int = DEFAULT_SAMPLE_COUNT,
                seed: int = 0) -> EsfDescriptor:
    """Compute the 640-D descriptor from sample_count random point triples."""
    cloud.require_finite()
    cloud.require_min_points()
    if sample_count < 1000:
        raise ValueError(f"sample_count must be >= 1000, got {sample_count}")

    pts = normalize_cloud(cloud.points)
    lo = pts.min(axis=0)
    span = pts.max(axis=0) - lo
    inv_span = np.where(span > 0.0, 1.0 / np.where(span > 0.0, span, 1.0), 0.0)

    grid = np.zeros((GRID_SIZE, GRID_SIZE, GRID_SIZE), dtype=bool)
    vi = _voxel_indices(pts, lo, inv_span)
    grid[vi[:, 0], vi[:, 1], vi[:, 2]] = True
    grid_flat = grid.reshape(-1)

    rng = np.random.Generator(np.random.PCG64(seed))
    triples = _sample_triples(rng, len(pts), sample_count)
    p0, p1, p2 = pts[triples[:, 0]], pts[triples[:, 1]], pts[triples[:, 2]]

    frac01 = _trace_fractions(p0, p1, grid_flat, lo, inv_span)
    frac02 = _trace_fractions(p0, p2, grid_flat, lo, inv_span)
    frac12 = _trace_fractions(p1, p2, grid_flat, lo, inv_span)
    cls01, cls02, cls12 = _classify(frac01), _classify(frac02), _classify(frac12)

    # D2: the p0-p1 edge
    d01 = np.linalg.norm(p1 - p0, axis=1)
    d2_bins = _binned(d01, _MAX_DIST)
    ratio_bins = np.clip((frac01 * BIN_COUNT).astype(np.int64), 0, BIN_COUNT - 1)

    # A3: angle at p0, classified by the opposite edge p1-p2
    u, v = p1 - p0, p2 - p0
    nu = np.linalg.norm(u, axis=1)
    nv = np.linalg.norm(v, axis=1)
    denom = np.where(nu * nv > 0.0, nu * nv, 1.0)
    cosang = np.clip((u * v).sum(axis=1) / denom, -1.0, 1.0)
    a3_bins = _binned(np.arccos(cosang), np.pi)

    # D3: sqrt triangle area; in/out only when all three edges agree
    area = 0.5 * np.linalg.norm(np.cross(u, v), axis=1)
    d3_bins = _binned(np.sqrt(area), _MAX_SQRT_AREA)
    d3_cls = np.full(sample_count, 2, dtype=np.int64)
    all_in = (cls01 == 0) & (cls02 == 0) & (cls12 == 0)
    all_out = (cls01 == 1) & (cls02 == 1) & (cls12 == 1)
    d3_cls[all_in] = 0
    d3_cls[all_out] = 1

    hist = np.zeros((SUBHIST_COUNT, BIN_COUNT), dtype=np.float64)
    for cls_value, sub in ((0, 0), (1, 1), (2, 2)):
        mask = cls01 == cls_value
        hist[sub] = np.bincount(d2_bins[mask], minlength=BIN_COUNT)
    hist[3] = np.bincount(ratio_bins, minlength=BIN_COUNT)
    for cls_value, sub in ((0, 4), (1, 5), (2, 6)):
        mask = cls12 == cls_value
        hist[sub] = np.bincount(a3_bins[mask], minlength=BIN_COUNT)
    for cls_value, sub in ((0, 7), (1, 8), (2, 9)):
        mask = d3_cls == cls_value
        hist[sub] = np.bincount(d3_bins[mask], minlength=BIN_COUNT)

    sums = hist.sum(axis=1, keepdims=True)
    hist = np.divide(hist, sums, out=np.zeros_like(hist), where=sums > 0.0)
    return EsfDescriptor(hist.reshape(-1))
