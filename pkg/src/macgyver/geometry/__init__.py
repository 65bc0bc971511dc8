"""Point-cloud geometry: shape descriptors, PCA alignment, intersections."""

from .align import (
    ROLE_ACTION,
    ROLE_HANDLE,
    ROLE_WHOLE,
    AlignedAssembly,
    RigidTransform,
    compute_intersections,
    merge_clouds,
    pca_align,
    principal_frame,
)
from .cloud import PointCloud, load_cloud, save_cloud
from .esf import DEFAULT_SAMPLE_COUNT, DESCRIPTOR_SIZE, EsfDescriptor, compute_esf

__all__ = [
    "AlignedAssembly",
    "DEFAULT_SAMPLE_COUNT",
    "DESCRIPTOR_SIZE",
    "EsfDescriptor",
    "PointCloud",
    "RigidTransform",
    "ROLE_ACTION",
    "ROLE_HANDLE",
    "ROLE_WHOLE",
    "compute_esf",
    "compute_intersections",
    "load_cloud",
    "merge_clouds",
    "pca_align",
    "principal_frame",
    "save_cloud",
]
