"""End-to-end candidate evaluation: enumerate, score, arbitrate, rank, validate.

The state space for one query is S = C (all single-object substitutes)
union T (all ordered m-tuples for construction, action part first). Every
state gets a score breakdown; construction attachment scores are
normalized per query batch. Arbitration assigns each state a value under
one of three strategies, ranking sorts descending with stable enumeration
order on ties, and the validation loop walks the ranking against a
manifest oracle until a state succeeds.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ManifestError,
    MissingJointScores,
    MissingModel,
    MissingReference,
    MissingSpectral,
)
from .geometry import (
    ROLE_ACTION,
    ROLE_HANDLE,
    DEFAULT_SAMPLE_COUNT,
    EsfDescriptor,
    PointCloud,
    compute_esf,
    load_cloud,
    merge_clouds,
    pca_align,
)
from .neuralnet import DenseNetwork, DualNetworkModel
from .scoring import (
    DEFAULT_ATTACH_ORDER,
    MATERIAL_RULE_ACTION_PART,
    AttachmentResult,
    AttachType,
    ObjectCapabilities,
    ScoreBreakdown,
    attachment_fit,
    infer_attach_type,
    material_fit,
    normalize_attachments,
    shape_fit_independent,
    shape_fit_joint,
)
from .spectral import SpectralReading, load_readings
from .values import NEG_INF, rank_key

ARBITRATION_STRATEGIES = ("rule", "direct", "subs")
RULE_SUBSTITUTE_VALUE = 10.0
RULE_CONSTRUCTION_VALUE = 0.0
RULE_THRESHOLD = 1.0


@dataclass(frozen=True)
class CandidateObject:
    id: str
    cloud: PointCloud
    capabilities: ObjectCapabilities
    role_hints: tuple = ()


@dataclass
class MacgyverState:
    """One substitute or construction candidate with its evaluation."""

    ids: tuple
    breakdown: ScoreBreakdown | None = None
    attach_type: AttachType | None = None
    attach_points: np.ndarray | None = None
    subs_score: float | None = None  # joint-scored merged cloud, constructions only
    value: object = None
    rank: int | None = None

    @property
    def is_construction(self) -> bool:
        return len(self.ids) > 1

    @property
    def key(self) -> str:
        return "+".join(self.ids)

    @property
    def final(self):
        return self.breakdown.final if self.breakdown is not None else None


def state_key(ids) -> str:
    return "+".join(ids)


def enumerate_states(objects_or_ids, m: int = 2) -> list:
    """All substitutes (id order) then all m-permutations (lexicographic).

    |result| = n + n! / (n - m)!; when m > n there are no construction
    tuples and only the substitutes remain.
    """
    ids = [obj.id if hasattr(obj, "id") else obj for obj in objects_or_ids]
    if len(ids) != len(set(ids)):
        raise ValueError("candidate ids must be unique")
    if not ids:
        raise ValueError("need at least one candidate")
    if m < 2:
        raise ValueError("m must be >= 2")
    ids = sorted(ids)
    states = [(i,) for i in ids]
    if m <= len(ids):
        states.extend(itertools.permutations(ids, m))
    return states


@dataclass
class ScoringContext:
    """Trained models plus configuration for scoring one action's query."""

    action: str
    material_model: DualNetworkModel
    joint_model: DualNetworkModel | None = None
    part_networks: dict = field(default_factory=dict)
    pierce_net: DenseNetwork | None = None
    references: list = field(default_factory=list)
    esf_samples: int = DEFAULT_SAMPLE_COUNT
    esf_seed: int = 0
    reference_seed: int = 0
    attach_seed: int = 0
    attach_order: tuple = DEFAULT_ATTACH_ORDER
    material_rule: str = MATERIAL_RULE_ACTION_PART

    def descriptor(self, cloud: PointCloud, cache: dict | None = None) -> EsfDescriptor:
        if cache is not None and cloud.id in cache:
            return cache[cloud.id]
        desc = compute_esf(cloud, self.esf_samples, self.esf_seed)
        if cache is not None:
            cache[cloud.id] = desc
        return desc

    def sample_reference(self) -> PointCloud:
        if not self.references:
            raise MissingReference(f"no reference tools for action {self.action!r}")
        rng = np.random.Generator(np.random.PCG64(self.reference_seed))
        return self.references[int(rng.integers(0, len(self.references)))]


@dataclass
class QueryResult:
    """States of one query in enumeration order, with scoring metadata."""

    action: str
    states: list
    reference_id: str | None
    reference_seed: int

    def by_key(self) -> dict:
        return {s.key: s for s in self.states}


def _reading(obj: CandidateObject) -> SpectralReading:
    reading = obj.capabilities.spectral
    if reading is None:
        raise MissingSpectral(f"object {obj.id!r} has no spectral reading")
    return reading


def _score_substitute(obj: CandidateObject, ctx: ScoringContext,
                      esf_cache: dict) -> MacgyverState:
    if ctx.joint_model is None:
        raise MissingJointScores(f"no joint shape model for action {ctx.action!r}")
    desc = ctx.descriptor(obj.cloud, esf_cache)
    shape = shape_fit_joint(ctx.joint_model, desc)
    material = material_fit(ctx.action, ctx.material_model, _reading(obj),
                            ctx.material_rule)
    return MacgyverState(
        ids=(obj.id,),
        breakdown=ScoreBreakdown(shape=shape, material=material),
    )


def _construction_parts(ids, objects_by_id, ctx: ScoringContext, reference):
    parts = [objects_by_id[i].cloud for i in ids]
    roles = [ROLE_ACTION] + [ROLE_HANDLE] * (len(ids) - 1)
    return pca_align(parts, reference, roles)


def evaluate_query(objects, ctx: ScoringContext, m: int = 2,
                   include_substitutes: bool = True,
                   include_constructions: bool = True,
                   joint_for_constructions: bool = False) -> QueryResult:
    """Score every state of one query; construction attachments are
    batch-normalized across the query's tuples."""
    objects = list(objects)
    objects_by_id = {obj.id: obj for obj in objects}
    all_states = enumerate_states(objects, m)
    states = [s for s in all_states
              if (len(s) == 1 and include_substitutes)
              or (len(s) > 1 and include_constructions)]

    esf_cache: dict = {}
    capabilities = {obj.id: obj.capabilities for obj in objects}
    evaluated = []

    construction_ids = [s for s in states if len(s) > 1]
    reference = None
    assemblies = {}
    attachments = []
    if construction_ids:
        reference = ctx.sample_reference()
        for ids in construction_ids:
            assembly = _construction_parts(ids, objects_by_id, ctx, reference)
            assemblies[ids] = assembly
            attach_type = infer_attach_type(ids, capabilities, ctx.attach_order)
            attachments.append(attachment_fit(
                ids, attach_type, capabilities, assembly,
                pierce_net=ctx.pierce_net, seed=ctx.attach_seed,
            ))
        normalized = normalize_attachments(attachments)
        attach_by_ids = dict(zip(construction_ids,
                                 zip(attachments, normalized)))

    for ids in states:
        if len(ids) == 1:
            evaluated.append(_score_substitute(objects_by_id[ids[0]], ctx, esf_cache))
            continue
        assembly = assemblies[ids]
        attach_result, attach_score = attach_by_ids[ids]
        descs = [ctx.descriptor(objects_by_id[i].cloud, esf_cache) for i in ids]
        shape = shape_fit_independent(descs, ctx.action, ctx.part_networks)
        readings = [_reading(objects_by_id[i]) for i in ids]
        material = material_fit(ctx.action, ctx.material_model, readings,
                                ctx.material_rule)
        subs_score = None
        if joint_for_constructions:
            if ctx.joint_model is None:
                raise MissingJointScores(
                    f"no joint shape model for action {ctx.action!r}")
            merged = merge_clouds(assembly, merged_id="+".join(ids))
            merged_desc = compute_esf(merged, ctx.esf_samples, ctx.esf_seed)
            subs_score = shape_fit_joint(ctx.joint_model, merged_desc) + material
        evaluated.append(MacgyverState(
            ids=tuple(ids),
            breakdown=ScoreBreakdown(shape=shape, material=material,
                                     attachment=attach_score),
            attach_type=attach_result.attach_type,
            attach_points=attach_result.closest_points,
            subs_score=subs_score,
        ))

    return QueryResult(
        action=ctx.action,
        states=evaluated,
        reference_id=reference.id if reference is not None else None,
        reference_seed=ctx.reference_seed,
    )


def evaluate_state(obj_or_ids, objects, ctx: ScoringContext,
                   attachment_score=None) -> ScoreBreakdown:
    """Score a single state outside a batch.

    For constructions, attachment_score should be the batch-normalized
    value; if omitted, the state's raw attachment is normalized against a
    batch of itself.
    """
    ids = (obj_or_ids,) if isinstance(obj_or_ids, str) else tuple(obj_or_ids)
    objects_by_id = {obj.id: obj for obj in objects}
    esf_cache: dict = {}
    if len(ids) == 1:
        return _score_substitute(objects_by_id[ids[0]], ctx, esf_cache).breakdown
    reference = ctx.sample_reference()
    assembly = _construction_parts(ids, objects_by_id, ctx, reference)
    capabilities = {obj.id: obj.capabilities for obj in objects}
    attach_type = infer_attach_type(ids, capabilities, ctx.attach_order)
    result = attachment_fit(ids, attach_type, capabilities, assembly,
                            pierce_net=ctx.pierce_net, seed=ctx.attach_seed)
    if attachment_score is None:
        attachment_score = normalize_attachments([result])[0]
    descs = [ctx.descriptor(objects_by_id[i].cloud, esf_cache) for i in ids]
    shape = shape_fit_independent(descs, ctx.action, ctx.part_networks)
    readings = [_reading(objects_by_id[i]) for i in ids]
    material = material_fit(ctx.action, ctx.material_model, readings,
                            ctx.material_rule)
    return ScoreBreakdown(shape=shape, material=material, attachment=attachment_score)


# -- arbitration / ranking / validation ---------------------------------------


def arbitrate(strategy: str, states) -> list:
    """Per-state values under a named strategy; NEG_INF marks losers."""
    if strategy not in ARBITRATION_STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; pick from {ARBITRATION_STRATEGIES}")
    values = []
    for state in states:
        final = state.final
        if strategy == "rule":
            if final is NEG_INF:
                values.append(NEG_INF)
            elif not state.is_construction and final > RULE_THRESHOLD:
                values.append(RULE_SUBSTITUTE_VALUE)
            elif state.is_construction and final > RULE_THRESHOLD:
                values.append(RULE_CONSTRUCTION_VALUE)
            else:
                values.append(NEG_INF)
        elif strategy == "direct":
            values.append(final)
        else:  # subs
            if not state.is_construction:
                values.append(final)
            elif final is NEG_INF:
                values.append(NEG_INF)
            else:
                if state.subs_score is None:
                    raise MissingJointScores(
                        "substitution-based arbitration needs joint scores "
                        "for constructions (run with joint_for_constructions)")
                values.append(state.subs_score + state.breakdown.attachment)
    return values


def rank(states, values) -> list:
    """Sort descending by value, stable on enumeration order; 1-based ranks."""
    states = list(states)
    values = list(values)
    if len(states) != len(values):
        raise ValueError("one value per state required")
    order = sorted(range(len(states)), key=lambda i: rank_key(values[i]), reverse=True)
    ranked = []
    for position, idx in enumerate(order, start=1):
        state = states[idx]
        state.value = values[idx]
        state.rank = position
        ranked.append(state)
    return ranked


def validate_loop(ranked_states, oracle) -> tuple:
    """Walk the ranking until the oracle reports success.

    NEG_INF-valued states can never succeed (they cannot be built). Returns
    (first successful state or None, attempts); a full miss costs |S| attempts.
    """
    ranked_states = list(ranked_states)
    for attempts, state in enumerate(ranked_states, start=1):
        if state.key not in oracle:
            raise ManifestError(f"oracle has no entry for state {state.key!r}")
        if oracle[state.key] and state.value is not NEG_INF:
            return state, attempts
    return None, len(ranked_states)


# -- manifests -----------------------------------------------------------------


@dataclass
class ManifestObject:
    id: str
    cloud: str
    spectral: str
    pierce_tool: bool = False
    grasp_tool: bool = False
    gripper_width: float = 0.0
    magnets: list = field(default_factory=list)
    material: str | None = None


@dataclass
class GroundTruth:
    substitute_id: str | None = None
    construction: tuple | None = None
    preferred: str | None = None  # "substitute" | "construction"


@dataclass
class ObjectSetManifest:
    """Declarative experiment case: objects, ground truth, oracle flags."""

    action: str
    objects: list
    ground_truth: GroundTruth
    oracle: dict
    path: Path | None = None

    def object_ids(self) -> list:
        return [obj.id for obj in self.objects]

    def validate(self) -> None:
        ids = self.object_ids()
        if len(ids) != len(set(ids)):
            raise ManifestError("duplicate object ids in manifest")
        gt = self.ground_truth
        if gt.substitute_id is not None and gt.substitute_id not in ids:
            raise ManifestError(f"ground-truth substitute {gt.substitute_id!r} unknown")
        if gt.construction is not None:
            for pid in gt.construction:
                if pid not in ids:
                    raise ManifestError(f"ground-truth construction part {pid!r} unknown")
        if gt.preferred not in (None, "substitute", "construction"):
            raise ManifestError(f"bad preferred tag {gt.preferred!r}")


def save_manifest(manifest: ObjectSetManifest, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    gt = {}
    if manifest.ground_truth.substitute_id is not None:
        gt["substitute_id"] = manifest.ground_truth.substitute_id
    if manifest.ground_truth.construction is not None:
        gt["construction"] = list(manifest.ground_truth.construction)
    if manifest.ground_truth.preferred is not None:
        gt["preferred"] = manifest.ground_truth.preferred
    doc = {
        "action": manifest.action,
        "objects": [
            {
                "id": o.id,
                "cloud": o.cloud,
                "spectral": o.spectral,
                "pierce_tool": o.pierce_tool,
                "grasp_tool": o.grasp_tool,
                "gripper_width": o.gripper_width,
                "magnets": [list(map(float, m)) for m in o.magnets],
                **({"material": o.material} if o.material else {}),
            }
            for o in manifest.objects
        ],
        "ground_truth": gt,
        "oracle": {k: bool(v) for k, v in sorted(manifest.oracle.items())},
    }
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def load_manifest(path) -> ObjectSetManifest:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"bad manifest JSON in {path}: {exc}") from exc
    try:
        objects = [
            ManifestObject(
                id=o["id"],
                cloud=o["cloud"],
                spectral=o["spectral"],
                pierce_tool=bool(o.get("pierce_tool", False)),
                grasp_tool=bool(o.get("grasp_tool", False)),
                gripper_width=float(o.get("gripper_width", 0.0)),
                magnets=[list(map(float, m)) for m in o.get("magnets", [])],
                material=o.get("material"),
            )
            for o in doc["objects"]
        ]
        gt_doc = doc.get("ground_truth", {})
        ground_truth = GroundTruth(
            substitute_id=gt_doc.get("substitute_id"),
            construction=tuple(gt_doc["construction"]) if gt_doc.get("construction") else None,
            preferred=gt_doc.get("preferred"),
        )
        manifest = ObjectSetManifest(
            action=doc["action"],
            objects=objects,
            ground_truth=ground_truth,
            oracle={k: bool(v) for k, v in doc.get("oracle", {}).items()},
            path=path,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"malformed manifest {path}: {exc}") from exc
    manifest.validate()
    return manifest


def resolve_manifest(manifest: ObjectSetManifest) -> list:
    """Load each manifest object's cloud and first spectral reading."""
    base = manifest.path.parent if manifest.path is not None else Path(".")
    objects = []
    for entry in manifest.objects:
        cloud_path = base / entry.cloud
        spectral_path = base / entry.spectral
        if not cloud_path.exists():
            raise ManifestError(f"cloud file missing: {cloud_path}")
        if not spectral_path.exists():
            raise ManifestError(f"spectral file missing: {spectral_path}")
        cloud = load_cloud(cloud_path, entry.id)
        readings = load_readings(spectral_path, entry.id)
        if not readings:
            raise ManifestError(f"no readings in {spectral_path}")
        caps = ObjectCapabilities(
            is_pierce_tool=entry.pierce_tool,
            is_grasp_tool=entry.grasp_tool,
            gripper_width=entry.gripper_width,
            magnet_locations=np.asarray(entry.magnets, dtype=np.float64).reshape(-1, 3),
            spectral=readings[0],
        )
        objects.append(CandidateObject(entry.id, cloud, caps))
    return objects


# -- model bundle ---------------------------------------------------------------


@dataclass
class ModelBundle:
    """Everything trained, keyed by action where applicable."""

    material: dict = field(default_factory=dict)
    joint_shape: dict = field(default_factory=dict)
    part_networks: dict = field(default_factory=dict)
    pierce: DenseNetwork | None = None
    references: dict = field(default_factory=dict)

    def context(self, action: str, **overrides) -> ScoringContext:
        if action not in self.material:
            raise MissingModel(f"no material model for action {action!r}")
        ctx = ScoringContext(
            action=action,
            material_model=self.material[action],
            joint_model=self.joint_shape.get(action),
            part_networks=self.part_networks,
            pierce_net=self.pierce,
            references=self.references.get(action, []),
        )
        for key, value in overrides.items():
            setattr(ctx, key, value)
        return ctx
