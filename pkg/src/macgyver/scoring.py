"""Fitness scorers: material fit, shape fit, and attachment fit.

Attachment fit follows the align -> intersect -> attach pipeline: the
candidate parts are PCA-aligned to a reference tool, the per-pair closest
point centroids P become the target attachment locations, and the score is
a fixed per-type cost alpha plus the summed Euclidean distance from each
part's best attachment candidate to P. Pierce attachments cost alpha = 0.5,
grasp and magnetic attachments cost nothing. Raw scores are batch-negated
and normalized to [-1, 0] across all construction candidates of one query,
so smaller attachment effort ranks closer to zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyBatch, MissingNetwork, MissingSpectral
from .geometry import AlignedAssembly, EsfDescriptor, PointCloud
from .neuralnet import DenseNetwork, DualNetworkModel, embedding_score
from .spectral import SpectralReading
from .values import NEG_INF, UNATTACHABLE

from enum import Enum

PIERCE_ALPHA = 0.5
GRASP_ALPHA = 0.0
MAGNETIC_ALPHA = 0.0
DEFAULT_ATTACH_ORDER = ("pierce", "grasp", "magnetic")

MATERIAL_RULE_ACTION_PART = "action-part"
MATERIAL_RULE_MEAN = "mean"


class AttachType(Enum):
    PIERCE = "pierce"
    GRASP = "grasp"
    MAGNETIC = "magnetic"
    NONE = "none"


@dataclass(frozen=True)
class ObjectCapabilities:
    """A-priori attachment capabilities plus the object's spectral scan."""

    is_pierce_tool: bool = False
    is_grasp_tool: bool = False
    gripper_width: float = 0.0
    magnet_locations: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    spectral: SpectralReading | None = None

    def __post_init__(self):
        mags = np.asarray(self.magnet_locations, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "magnet_locations", mags)
        if self.is_grasp_tool and self.gripper_width <= 0.0:
            raise ValueError("grasp tools need gripper_width > 0")


@dataclass(frozen=True)
class AttachmentResult:
    raw_score: object  # non-negative float, or UNATTACHABLE
    closest_points: np.ndarray
    attach_type: AttachType
    alpha: float

    @property
    def attachable(self) -> bool:
        return self.raw_score is not UNATTACHABLE


@dataclass(frozen=True)
class ScoreBreakdown:
    """Per-state component scores; attachment is None for substitutes."""

    shape: float
    material: float
    attachment: object = None  # normalized float <= 0, UNATTACHABLE, or None

    @property
    def final(self):
        if self.attachment is UNATTACHABLE:
            return NEG_INF
        total = self.shape + self.material
        if self.attachment is not None:
            total += self.attachment
        return total


# -- material ----------------------------------------------------------------


def material_fit(action: str, model: DualNetworkModel, readings,
                 rule: str = MATERIAL_RULE_ACTION_PART) -> float:
    """Similarity of the state's material to the action embedding.

    readings: one SpectralReading for a substitute, or the tuple's readings
    ordered action part first. The default rule scores only the action
    part; rule="mean" averages over all parts instead.
    """
    if model.embedding is None:
        raise MissingNetwork(f"material model for {action!r} has no embedding")
    if isinstance(readings, SpectralReading):
        readings = [readings]
    readings = list(readings)
    if not readings or any(r is None for r in readings):
        raise MissingSpectral(f"missing spectral reading for action {action!r}")
    if rule == MATERIAL_RULE_ACTION_PART:
        readings = readings[:1]
    elif rule != MATERIAL_RULE_MEAN:
        raise ValueError(f"unknown material rule {rule!r}")
    scores = [embedding_score(model, model.embedding, r.values) for r in readings]
    return float(np.mean(scores))


# -- shape -------------------------------------------------------------------


def shape_fit_independent(descriptors, action: str, part_networks: dict,
                          action_part_count: int = 1) -> float:
    """Product of per-part network confidences, action parts first."""
    descriptors = list(descriptors)
    if action not in part_networks:
        raise MissingNetwork(f"no part network for action {action!r}")
    if "handle" not in part_networks:
        raise MissingNetwork("no handle part network")
    score = 1.0
    for pos, desc in enumerate(descriptors):
        net = part_networks[action] if pos < action_part_count else part_networks["handle"]
        confidence = float(net.forward(desc.values)[0])
        score *= confidence
    return score


def shape_fit_joint(model: DualNetworkModel, descriptor: EsfDescriptor) -> float:
    """Similarity of a (possibly merged) cloud's descriptor to the action embedding."""
    if model.embedding is None:
        raise MissingNetwork("joint shape model has no embedding")
    return embedding_score(model, model.embedding, descriptor.values)


# -- pierce ------------------------------------------------------------------


def pierceability(reading: SpectralReading, classifier: DenseNetwork) -> bool:
    """True iff the classifier confidence is >= 0.5 (boundary counts as pierceable)."""
    confidence = float(classifier.forward(reading.values)[0])
    return confidence >= 0.5


# -- grasp -------------------------------------------------------------------

_NORMAL_NEIGHBORS = 16
_ANTIPODAL_DOT = -0.8
_LINE_DOT = 0.8
_MAX_GRASP_PAIRS = 50_000


def estimate_normals(points: np.ndarray, k: int = _NORMAL_NEIGHBORS) -> np.ndarray:
    """Unit normals from local PCA, oriented away from the cloud centroid."""
    n = len(points)
    k = min(k, n)
    tree = cKDTree(points)
    _, idx = tree.query(points, k=k)
    if k == 1:
        idx = idx[:, None]
    hoods = points[idx]  # (n, k, 3)
    centered = hoods - hoods.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered) / k
    _, vecs = np.linalg.eigh(cov)
    normals = vecs[:, :, 0]  # smallest-eigenvalue direction
    outward = points - points.mean(axis=0)
    flip = np.einsum("ni,ni->n", normals, outward) < 0.0
    normals[flip] = -normals[flip]
    return normals


def grasp_sample(cloud: PointCloud, gripper_width: float, seed: int = 0) -> np.ndarray:
    """Antipodal surface-pair grasp candidates, clustered to unique midpoints.

    Accepts point pairs closer than the gripper width whose normals are
    near-opposite and near-parallel to the connecting line; midpoints are
    leader-clustered with radius gripper_width / 2 and the cluster
    centroids returned. Empty result means no grasp fits.
    """
    cloud.require_min_points()
    if gripper_width <= 0.0:
        raise ValueError("gripper_width must be > 0")
    points = cloud.points
    normals = estimate_normals(points)

    tree = cKDTree(points)
    pairs = tree.query_pairs(r=gripper_width, output_type="ndarray")
    if len(pairs) == 0:
        return np.zeros((0, 3))

    pi, pj = points[pairs[:, 0]], points[pairs[:, 1]]
    diffs = pj - pi
    dist = np.linalg.norm(diffs, axis=1)
    valid = dist > 1e-9
    u = np.zeros_like(diffs)
    u[valid] = diffs[valid] / dist[valid, None]
    ni, nj = normals[pairs[:, 0]], normals[pairs[:, 1]]
    accept = (
        valid
        & (np.einsum("ni,ni->n", ni, nj) <= _ANTIPODAL_DOT)
        & (np.abs(np.einsum("ni,ni->n", ni, u)) >= _LINE_DOT)
        & (np.abs(np.einsum("ni,ni->n", nj, u)) >= _LINE_DOT)
    )
    midpoints = (pi[accept] + pj[accept]) / 2.0
    if len(midpoints) == 0:
        return np.zeros((0, 3))
    if len(midpoints) > _MAX_GRASP_PAIRS:
        rng = np.random.Generator(np.random.PCG64(seed))
        keep = rng.choice(len(midpoints), size=_MAX_GRASP_PAIRS, replace=False)
        midpoints = midpoints[np.sort(keep)]

    radius = gripper_width / 2.0
    leaders = []
    members = []
    for mp in midpoints:
        placed = False
        for ci, leader in enumerate(leaders):
            if np.linalg.norm(mp - leader) <= radius:
                members[ci].append(mp)
                placed = True
                break
        if not placed:
            leaders.append(mp)
            members.append([mp])
    return np.asarray([np.mean(group, axis=0) for group in members])


# -- attachment --------------------------------------------------------------


def infer_attach_type(part_ids, capabilities: dict,
                      order=DEFAULT_ATTACH_ORDER) -> AttachType:
    """First feasible attachment type in the configured preference order."""
    caps = [capabilities[pid] for pid in part_ids]
    feasible = {
        "pierce": len(caps) >= 2 and any(c.is_pierce_tool for c in caps),
        "grasp": len(caps) >= 2 and any(c.is_grasp_tool for c in caps),
        "magnetic": len(caps) >= 2 and all(len(c.magnet_locations) > 0 for c in caps),
    }
    for name in order:
        if feasible.get(name, False):
            return AttachType(name)
    return AttachType.NONE


def _distance_to_targets(targets: np.ndarray, candidates: np.ndarray):
    """(min distance, closest candidate) from a candidate set to the target set P."""
    d = np.linalg.norm(candidates[:, None, :] - targets[None, :, :], axis=2)
    per_candidate = d.min(axis=1)
    best = int(np.argmin(per_candidate))
    return float(per_candidate[best]), candidates[best]


def _unattachable(attach_type: AttachType, targets: np.ndarray) -> AttachmentResult:
    return AttachmentResult(UNATTACHABLE, np.asarray(targets, dtype=np.float64),
                            attach_type, 0.0)


def attachment_fit(part_ids, attach_type: AttachType, capabilities: dict,
                   assembly: AlignedAssembly, pierce_net: DenseNetwork | None = None,
                   seed: int = 0) -> AttachmentResult:
    """Attachment cost of an aligned candidate tuple.

    Per-part attachment candidates depend on the type: pierce uses the
    targets P themselves (pierceable target material required), grasp uses
    sampled grasp midpoints on the grasped part, magnetic uses each part's
    declared magnets mapped through its alignment transform. Unattachable
    tuples get the UNATTACHABLE sentinel with A_close falling back to P.
    """
    part_ids = list(part_ids)
    targets = assembly.intersections
    if len(targets) == 0:
        raise ValueError("assembly carries no intersection targets")

    transforms = {pid: tf for pid, _, tf in assembly.parts}
    clouds = {pid: cloud for pid, cloud, _ in assembly.parts}

    if attach_type is AttachType.NONE:
        return _unattachable(attach_type, targets)

    if attach_type is AttachType.PIERCE:
        if pierce_net is None:
            raise MissingNetwork("pierce attachment needs a pierceability classifier")
        tool_id = next((p for p in part_ids if capabilities[p].is_pierce_tool), None)
        if tool_id is None:
            return _unattachable(attach_type, targets)
        targets_ok = True
        for pid in part_ids:
            if pid == tool_id:
                continue
            reading = capabilities[pid].spectral
            if reading is None:
                raise MissingSpectral(f"object {pid!r} has no spectral reading")
            if not pierceability(reading, pierce_net):
                targets_ok = False
        if not targets_ok:
            return _unattachable(attach_type, targets)
        candidate_sets = {pid: targets for pid in part_ids}
        alpha = PIERCE_ALPHA
    elif attach_type is AttachType.GRASP:
        tool_id = next((p for p in part_ids if capabilities[p].is_grasp_tool), None)
        if tool_id is None:
            return _unattachable(attach_type, targets)
        grasped = next((p for p in part_ids if p != tool_id), tool_id)
        grasps = grasp_sample(clouds[grasped], capabilities[tool_id].gripper_width, seed)
        if len(grasps) == 0:
            return _unattachable(attach_type, targets)
        candidate_sets = {pid: grasps for pid in part_ids}
        alpha = GRASP_ALPHA
    else:  # magnetic
        candidate_sets = {}
        for pid in part_ids:
            mags = capabilities[pid].magnet_locations
            if len(mags) == 0:
                return _unattachable(attach_type, targets)
            candidate_sets[pid] = transforms[pid].apply(mags)
        alpha = MAGNETIC_ALPHA

    raw = alpha
    closest = []
    for pid in part_ids:
        dist, best = _distance_to_targets(targets, candidate_sets[pid])
        raw += dist
        closest.append(best)
    return AttachmentResult(float(raw), np.asarray(closest), attach_type, alpha)


def normalize_attachments(results) -> list:
    """Batch-normalize raw scores to [-1, 0]; unattachables pass through.

    gamma is the largest finite raw score in the batch; each finite score
    becomes -raw / gamma (all zero stays zero).
    """
    results = list(results)
    if not results:
        raise EmptyBatch("no attachment results to normalize")
    finite = [r.raw_score for r in results if r.attachable]
    gamma = max(finite) if finite else 0.0
    out = []
    for r in results:
        if not r.attachable:
            out.append(UNATTACHABLE)
        elif gamma <= 0.0:
            out.append(0.0)
        else:
            out.append(-r.raw_score / gamma)
    return out
