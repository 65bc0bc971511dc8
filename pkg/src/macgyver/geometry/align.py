"""PCA alignment of candidate parts against a reference tool cloud.

Each part is centroid-centered, rotated so its principal axes match those
of its target region of the reference (the whole reference, or its
action-part / handle half split at the centroid along the first principal
axis), then translated onto the region centroid. Axis signs are
disambiguated by requiring a non-negative third moment of the projected
coordinates; near-zero third moments fall back to making the largest
axis component positive. The third axis is the cross product of the first
two, so the rotation is always proper.

Convention: the positive side of the reference's (sign-fixed) first
principal axis is the action-part half, the negative side the handle half.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .cloud import PointCloud

ROLE_ACTION = "action"
ROLE_HANDLE = "handle"
ROLE_WHOLE = "whole"

# per-cloud cap for exact closest-pair search; larger clouds are subsampled
_CLOSEST_PAIR_CAP = 2000
_DEGENERATE_REL_TOL = 1e-12


@dataclass(frozen=True)
class RigidTransform:
    """p -> rotation @ p + translation, with det(rotation) = +1."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        tr = np.asarray(self.translation, dtype=np.float64).reshape(3)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tr)
        if not np.allclose(rot @ rot.T, np.eye(3), atol=1e-6):
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(rot) - 1.0) > 1e-6:
            raise ValueError("rotation determinant is not +1")

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return points @ self.rotation.T + self.translation


@dataclass(frozen=True)
class AlignedAssembly:
    """Transformed parts plus the pairwise intersection points P."""

    parts: tuple  # of (part_id, PointCloud, RigidTransform)
    reference_tool_id: str
    intersections: np.ndarray
    degenerate_part_ids: tuple = ()

    def part_clouds(self) -> list:
        return [cloud for _, cloud, _ in self.parts]


def principal_frame(points: np.ndarray) -> tuple:
    """(eigenvalues desc, column-axis rotation matrix, centroid, degenerate?)."""
    centroid = points.mean(axis=0)
    centered = points - centroid
    cov = centered.T @ centered / max(len(points), 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    axes = eigvecs[:, order]

    scale = max(eigvals[0], 1.0)
    degenerate = eigvals[1] <= _DEGENERATE_REL_TOL * scale

    for k in range(2):
        proj = centered @ axes[:, k]
        m3 = np.mean(proj ** 3)
        if abs(m3) > 1e-12 * max(np.mean(proj ** 2), 1e-30) ** 1.5:
            if m3 < 0.0:
                axes[:, k] = -axes[:, k]
        else:
            # tie: orient so the dominant coordinate of the axis is positive
            j = int(np.argmax(np.abs(axes[:, k])))
            if axes[j, k] < 0.0:
                axes[:, k] = -axes[:, k]
    axes[:, 2] = np.cross(axes[:, 0], axes[:, 1])
    return eigvals, axes, centroid, degenerate


def _reference_region(reference: PointCloud, role: str) -> np.ndarray:
    if role == ROLE_WHOLE:
        return reference.points
    _, axes, centroid, degenerate = principal_frame(reference.points)
    if degenerate:
        return reference.points
    proj = (reference.points - centroid) @ axes[:, 0]
    mask = proj >= 0.0 if role == ROLE_ACTION else proj < 0.0
    region = reference.points[mask]
    if len(region) < 3:  # ill-split reference; fall back to the whole cloud
        return reference.points
    return region


def pca_align(parts, reference: PointCloud, part_roles) -> AlignedAssembly:
    """Align each part onto its role's reference region; compute P for >= 2 parts."""
    parts = list(parts)
    part_roles = list(part_roles)
    if not parts:
        raise ValueError("need at least one part")
    if len(parts) != len(part_roles):
        raise ValueError("one role per part required")
    if len(reference) == 0:
        raise ValueError("reference cloud is empty")
    for role in part_roles:
        if role not in (ROLE_ACTION, ROLE_HANDLE, ROLE_WHOLE):
            raise ValueError(f"unknown role {role!r}")

    aligned = []
    degenerate_ids = []
    for part, role in zip(parts, part_roles):
        part.require_finite()
        region = _reference_region(reference, role)
        _, ref_axes, _, ref_degenerate = principal_frame(region)
        region_centroid = region.mean(axis=0)
        _, part_axes, part_centroid, part_degenerate = principal_frame(part.points)

        if part_degenerate or ref_degenerate:
            rotation = np.eye(3)
            if part_degenerate:
                degenerate_ids.append(part.id)
        else:
            rotation = ref_axes @ part_axes.T
        translation = region_centroid - rotation @ part_centroid
        transform = RigidTransform(rotation, translation)
        moved = PointCloud(transform.apply(part.points), part.id)
        aligned.append((part.id, moved, transform))

    if len(aligned) >= 2:
        intersections = compute_intersections([cloud for _, cloud, _ in aligned])
    else:
        intersections = np.zeros((0, 3))
    return AlignedAssembly(
        parts=tuple(aligned),
        reference_tool_id=reference.id,
        intersections=np.asarray(intersections, dtype=np.float64).reshape(-1, 3),
        degenerate_part_ids=tuple(degenerate_ids),
    )


def _closest_pair_subset(points: np.ndarray) -> np.ndarray:
    if len(points) <= _CLOSEST_PAIR_CAP:
        return points
    rng = np.random.Generator(np.random.PCG64(0))
    keep = rng.choice(len(points), size=_CLOSEST_PAIR_CAP, replace=False)
    return points[np.sort(keep)]


def compute_intersections(clouds) -> np.ndarray:
    """Midpoint of the closest point pair, for every unordered cloud pair."""
    clouds = list(clouds)
    if len(clouds) < 2:
        raise ValueError("need at least two clouds")
    for cloud in clouds:
        if len(cloud) == 0:
            raise ValueError("empty cloud in intersection computation")

    subsets = [_closest_pair_subset(c.points) for c in clouds]
    trees = [cKDTree(s) for s in subsets]
    result = []
    for i in range(len(clouds)):
        for j in range(i + 1, len(clouds)):
            dists, nearest = trees[j].query(subsets[i])
            best = int(np.argmin(dists))
            pa = subsets[i][best]
            pb = subsets[j][nearest[best]]
            result.append((pa + pb) / 2.0)
    return np.asarray(result, dtype=np.float64).reshape(-1, 3)


def merge_clouds(assembly: AlignedAssembly, merged_id: str = "merged") -> PointCloud:
    """Concatenate the transformed part clouds of an assembly."""
    if not assembly.parts:
        raise ValueError("assembly has no parts")
    stacked = np.vstack([cloud.points for _, cloud, _ in assembly.parts])
    return PointCloud(stacked, merged_id)
