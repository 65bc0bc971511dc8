"""Deterministic synthetic data: tool clouds, spectra, experiment sets."""

from .experiments import (
    EXPERIMENT_KINDS,
    PlannedObject,
    build_experiment_set,
    corner_magnets,
    magnet_points,
)
from .shapes import (
    ALL_ACTIONS,
    CONSTRUCTION_ACTIONS,
    PART_ROLES,
    SUBSTITUTION_ACTIONS,
    ToolPrototypeSpec,
    blend_with_blob,
    default_spec,
    gen_part_cloud,
    gen_tool_cloud,
    sample_blob,
    sample_bowl,
    sample_box,
    sample_cylinder,
    sample_dimensions,
    sample_sphere,
)
from .spectra import (
    SpectralClassModel,
    class_signature,
    default_class_models,
    gen_spectral_dataset,
    nearest_class_mean_accuracy,
    sample_object_offset,
    sample_reading,
    split_by_object,
)

__all__ = [
    "ALL_ACTIONS",
    "CONSTRUCTION_ACTIONS",
    "EXPERIMENT_KINDS",
    "PART_ROLES",
    "PlannedObject",
    "SUBSTITUTION_ACTIONS",
    "SpectralClassModel",
    "ToolPrototypeSpec",
    "blend_with_blob",
    "build_experiment_set",
    "class_signature",
    "corner_magnets",
    "default_class_models",
    "default_spec",
    "gen_part_cloud",
    "gen_spectral_dataset",
    "gen_tool_cloud",
    "magnet_points",
    "nearest_class_mean_accuracy",
    "sample_blob",
    "sample_bowl",
    "sample_box",
    "sample_cylinder",
    "sample_dimensions",
    "sample_object_offset",
    "sample_reading",
    "sample_sphere",
    "split_by_object",
]
