"""Experiment-set builders: planted ground truth plus distractors.

Each set plants exactly the ground truth its kind requires (one correct
construction pair, one correct substitute, or one of each for arbitration)
and fills the rest with wrong-shape and/or wrong-material distractors.
Oracle flags mark exactly the planted states as successes. Everything is
deterministic per seed, and all files are written under the dataset root:

    <root>/clouds/<case>/<object>.txt
    <root>/spectra/cases/<case>/<object>.csv
    <root>/manifests/<kind>/<case>.json
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import UnknownAction
from ..geometry import PointCloud, save_cloud
from ..pipeline import (
    GroundTruth,
    ManifestObject,
    ObjectSetManifest,
    enumerate_states,
    save_manifest,
    state_key,
)
from ..spectral import ActionMaterialTable, MaterialClass, save_readings
from .shapes import (
    ALL_ACTIONS,
    blend_with_blob,
    gen_part_cloud,
    gen_tool_cloud,
)
from .spectra import default_class_models, sample_object_offset, sample_reading

EXPERIMENT_KINDS = ("construction", "substitution", "arbitration")


@dataclass
class PlannedObject:
    id: str
    cloud: PointCloud
    material: MaterialClass
    pierce_tool: bool = False
    grasp_tool: bool = False
    gripper_width: float = 0.0
    magnets: np.ndarray | None = None  # local coordinates


def magnet_points(cloud: PointCloud) -> np.ndarray:
    """Centroid plus the six bounding-box face centers: one magnet is
    always near whatever end meets the other part."""
    c = cloud.centroid
    lo = cloud.points.min(axis=0)
    hi = cloud.points.max(axis=0)
    pts = [c]
    for axis in range(3):
        for bound in (lo, hi):
            p = c.copy()
            p[axis] = bound[axis]
            pts.append(p)
    return np.asarray(pts)


def corner_magnets(cloud: PointCloud) -> np.ndarray:
    """Only the two extreme bounding-box corners: a deliberately poor layout."""
    return np.asarray([cloud.points.min(axis=0), cloud.points.max(axis=0)])


def _appropriate_material(action: str, table: ActionMaterialTable) -> MaterialClass:
    return sorted(table[action], key=lambda m: m.value)[0]


def _wrong_material(action: str, table: ActionMaterialTable,
                    rng: np.random.Generator) -> MaterialClass:
    wrong = sorted(set(MaterialClass) - set(table[action]), key=lambda m: m.value)
    if not wrong:  # every class appropriate; fall back to any class
        wrong = sorted(MaterialClass, key=lambda m: m.value)
    return wrong[int(rng.integers(0, len(wrong)))]


def _other_action(action: str, rng: np.random.Generator) -> str:
    others = [a for a in ALL_ACTIONS if a != action]
    return others[int(rng.integers(0, len(others)))]


def _distractor_cycle(action: str, table: ActionMaterialTable, count: int,
                      rng: np.random.Generator) -> list:
    """Wrong-shape and wrong-material objects, none forming a working tool."""
    out = []
    for k in range(count):
        sub_seed = int(rng.integers(0, 2**31))
        kind = k % 4
        if kind == 0:  # right-shape head, wrong material, attachable
            cloud = gen_part_cloud(f"{action}-head", seed=sub_seed)
            out.append(PlannedObject("", cloud, _wrong_material(action, table, rng),
                                     magnets=magnet_points(cloud)))
        elif kind == 1:  # attachable blob of an appropriate material
            cloud = gen_part_cloud("distractor-blob", seed=sub_seed)
            out.append(PlannedObject("", cloud, _appropriate_material(action, table),
                                     magnets=magnet_points(cloud)))
        elif kind == 2:  # unattachable cube, wrong material
            cloud = gen_part_cloud("distractor-cube", seed=sub_seed)
            out.append(PlannedObject("", cloud, _wrong_material(action, table, rng)))
        else:  # head for some other action, unattachable
            other = _other_action(action, rng)
            cloud = gen_part_cloud(f"{other}-head", seed=sub_seed)
            out.append(PlannedObject("", cloud, _wrong_material(action, table, rng)))
    return out


def _plan_construction(action, n_objects, table, rng) -> tuple:
    head_cloud = gen_part_cloud(f"{action}-head", seed=int(rng.integers(0, 2**31)))
    handle_cloud = gen_part_cloud("handle", seed=int(rng.integers(0, 2**31)))
    head = PlannedObject("", head_cloud, _appropriate_material(action, table),
                         magnets=magnet_points(head_cloud))
    handle = PlannedObject("", handle_cloud, MaterialClass.WOOD,
                           magnets=magnet_points(handle_cloud))
    distractors = _distractor_cycle(action, table, n_objects - 2, rng)
    return [head, handle, *distractors], GroundTruth(construction=("head", "handle"))


def _plan_substitution(action, n_objects, table, rng) -> tuple:
    tool = gen_tool_cloud(action, seed=int(rng.integers(0, 2**31)))
    planted = PlannedObject("", tool, _appropriate_material(action, table))
    distractors = []
    for k in range(n_objects - 1):
        sub_seed = int(rng.integers(0, 2**31))
        kind = k % 3
        if kind == 0:  # right shape, wrong material
            cloud = gen_tool_cloud(action, seed=sub_seed)
            distractors.append(PlannedObject("", cloud,
                                             _wrong_material(action, table, rng)))
        elif kind == 1:  # wrong shape (a different action's tool), right material
            other = _other_action(action, rng)
            cloud = gen_tool_cloud(other, seed=sub_seed)
            distractors.append(PlannedObject("", cloud,
                                             _appropriate_material(action, table)))
        else:  # blob, wrong material
            cloud = gen_part_cloud("distractor-blob", seed=sub_seed)
            distractors.append(PlannedObject("", cloud,
                                             _wrong_material(action, table, rng)))
    return [planted, *distractors], GroundTruth(substitute_id="sub")


def _plan_arbitration(action, n_objects, table, rng, seed) -> tuple:
    prefer_substitute = seed % 2 == 0
    good_material = _appropriate_material(action, table)

    sub_cloud = gen_tool_cloud(action, seed=int(rng.integers(0, 2**31)))
    head_cloud = gen_part_cloud(f"{action}-head", seed=int(rng.integers(0, 2**31)))
    handle_cloud = gen_part_cloud("handle", seed=int(rng.integers(0, 2**31)))

    if prefer_substitute:
        # degrade the construction: blobbier head, poor magnet placement
        head_cloud = blend_with_blob(head_cloud, 0.35, seed=seed + 1)
        head = PlannedObject("", head_cloud, good_material,
                             magnets=corner_magnets(head_cloud))
        handle = PlannedObject("", handle_cloud, MaterialClass.WOOD,
                               magnets=corner_magnets(handle_cloud))
        substitute = PlannedObject("", sub_cloud, good_material)
        preferred = "substitute"
    else:
        # degrade the substitute: off material and mild shape distortion
        sub_cloud = blend_with_blob(sub_cloud, 0.25, seed=seed + 1)
        substitute = PlannedObject("", sub_cloud, _wrong_material(action, table, rng))
        head = PlannedObject("", head_cloud, good_material,
                             magnets=magnet_points(head_cloud))
        handle = PlannedObject("", handle_cloud, MaterialClass.WOOD,
                               magnets=magnet_points(handle_cloud))
        preferred = "construction"

    distractors = _distractor_cycle(action, table, n_objects - 3, rng)
    objects = [substitute, head, handle, *distractors]
    gt = GroundTruth(substitute_id="sub", construction=("head", "handle"),
                     preferred=preferred)
    return objects, gt


_PLANTED_NAMES = {"construction": ("head", "handle"), "substitution": ("sub",),
                  "arbitration": ("sub", "head", "handle")}


def build_experiment_set(kind: str, action: str, n_objects: int, seed: int,
                         root, table: ActionMaterialTable | None = None,
                         m: int = 2) -> ObjectSetManifest:
    """Generate one experiment case on disk and return its manifest."""
    if kind not in EXPERIMENT_KINDS:
        raise ValueError(f"unknown experiment kind {kind!r}")
    if action not in ALL_ACTIONS:
        raise UnknownAction(f"unknown action {action!r}")
    if n_objects < m + 1:
        raise ValueError(f"need at least {m + 1} objects")
    table = table or ActionMaterialTable()
    root = Path(root)
    rng = np.random.Generator(np.random.PCG64(seed))

    if kind == "construction":
        planned, gt = _plan_construction(action, n_objects, table, rng)
    elif kind == "substitution":
        planned, gt = _plan_substitution(action, n_objects, table, rng)
    else:
        planned, gt = _plan_arbitration(action, n_objects, table, rng, seed)

    # stable ids: planted names first, then dNN distractors
    names = list(_PLANTED_NAMES[kind])
    for i in range(len(planned) - len(names)):
        names.append(f"d{i:02d}")
    for obj, name in zip(planned, names):
        obj.id = name

    case = f"{action.replace('/', '-')}-n{n_objects}-s{seed}"
    cloud_dir = root / "clouds" / kind / case
    spectra_dir = root / "spectra" / "cases" / kind / case
    manifest_path = root / "manifests" / kind / f"{case}.json"

    class_models = default_class_models()
    entries = []
    for obj in planned:
        cloud_file = cloud_dir / f"{obj.id}.txt"
        save_cloud(PointCloud(obj.cloud.points, obj.id), cloud_file)
        model = class_models[obj.material]
        reading = sample_reading(model, rng, sample_object_offset(model, rng), obj.id)
        spectral_file = spectra_dir / f"{obj.id}.csv"
        save_readings([reading], spectral_file)
        entries.append(ManifestObject(
            id=obj.id,
            cloud=os.path.relpath(cloud_file, manifest_path.parent),
            spectral=os.path.relpath(spectral_file, manifest_path.parent),
            pierce_tool=obj.pierce_tool,
            grasp_tool=obj.grasp_tool,
            gripper_width=obj.gripper_width,
            magnets=[] if obj.magnets is None else [list(map(float, p))
                                                    for p in obj.magnets],
            material=obj.material.value,
        ))

    oracle = {}
    for ids in enumerate_states([o.id for o in planned], m):
        key = state_key(ids)
        success = False
        if len(ids) == 1 and gt.substitute_id is not None:
            success = ids[0] == gt.substitute_id
        elif len(ids) > 1 and gt.construction is not None:
            success = tuple(ids) == tuple(gt.construction)
        oracle[key] = success

    manifest = ObjectSetManifest(action=action, objects=entries,
                                 ground_truth=gt, oracle=oracle,
                                 path=manifest_path)
    manifest.validate()
    save_manifest(manifest, manifest_path)
    return manifest
