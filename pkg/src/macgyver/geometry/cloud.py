"""Point-cloud container and ASCII file I/O.

File format: one point per line, three whitespace-separated decimal reals
(meters). Lines starting with '#' are comments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import NonFiniteInput, TooFewPoints

MIN_DESCRIPTOR_POINTS = 10


@dataclass(frozen=True)
class PointCloud:
    """An unordered set of 3-D points with an opaque identifier."""

    points: np.ndarray
    id: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"expected (n, 3) points, got shape {pts.shape}")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)

    def require_finite(self) -> None:
        if not np.isfinite(self.points).all():
            raise NonFiniteInput(f"cloud {self.id!r} contains non-finite coordinates")

    def require_min_points(self, n: int = MIN_DESCRIPTOR_POINTS) -> None:
        if len(self) < n:
            raise TooFewPoints(f"cloud {self.id!r} has {len(self)} points, need >= {n}")

    def translated(self, offset) -> "PointCloud":
        return PointCloud(self.points + np.asarray(offset, dtype=np.float64), self.id)

    def scaled(self, factor: float) -> "PointCloud":
        return PointCloud(self.points * float(factor), self.id)


def load_cloud(path, cloud_id: str | None = None) -> PointCloud:
    """Read an ASCII cloud file; '#' lines are skipped."""
    path = Path(path)
    rows = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 values, got {len(parts)}")
            rows.append([float(v) for v in parts])
    pts = np.asarray(rows, dtype=np.float64).reshape(-1, 3)
    return PointCloud(pts, cloud_id if cloud_id is not None else path.stem)


def save_cloud(cloud: PointCloud, path) -> None:
    """Write with %.17g so coordinates round-trip at double precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for x, y, z in cloud.points:
            fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
