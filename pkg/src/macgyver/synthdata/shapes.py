"""Seeded parametric surface samplers for prototype tools and parts.

All tools are generated in a canonical pose: the handle runs along the
negative x axis and the action part sits at the positive-x end. Dimensions
are drawn per seed from the recipe's ranges, so every seed yields a
distinct but plausible instance. Generation is bit-deterministic per
(recipe, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import UnknownAction
from ..geometry import PointCloud

CONSTRUCTION_ACTIONS = ("hit", "scoop/contain", "flip", "screw", "rake", "squeegee")
SUBSTITUTION_ACTIONS = ("hit", "cut", "scoop/contain", "flip", "poke", "rake")
ALL_ACTIONS = ("hit", "cut", "scoop/contain", "flip", "poke", "rake", "screw", "squeegee")

DEFAULT_DENSITY = 2000


# -- primitive surface samplers ------------------------------------------------


def sample_box(rng: np.random.Generator, n: int, size) -> np.ndarray:
    """Uniform samples on the surface of an origin-centered box."""
    sx, sy, sz = size
    areas = np.array([sy * sz, sy * sz, sx * sz, sx * sz, sx * sy, sx * sy])
    face = rng.choice(6, size=n, p=areas / areas.sum())
    u = rng.uniform(-0.5, 0.5, size=(n, 2))
    pts = np.empty((n, 3))
    half = np.array([sx, sy, sz]) / 2.0
    for f in range(6):
        m = face == f
        axis = f // 2
        sign = 1.0 if f % 2 == 0 else -1.0
        others = [a for a in range(3) if a != axis]
        pts[m, axis] = sign * half[axis]
        pts[m, others[0]] = u[m, 0] * (2 * half[others[0]])
        pts[m, others[1]] = u[m, 1] * (2 * half[others[1]])
    return pts


def sample_cylinder(rng: np.random.Generator, n: int, radius: float, length: float,
                    caps: bool = True) -> np.ndarray:
    """Cylinder along x, centered at the origin."""
    lateral = 2.0 * np.pi * radius * length
    cap = np.pi * radius * radius
    total = lateral + (2 * cap if caps else 0.0)
    n_lat = int(round(n * lateral / total)) if total > 0 else n
    n_cap = n - n_lat
    theta = rng.uniform(0.0, 2.0 * np.pi, n_lat)
    x = rng.uniform(-length / 2.0, length / 2.0, n_lat)
    side = np.column_stack([x, radius * np.cos(theta), radius * np.sin(theta)])
    if n_cap <= 0:
        return side
    theta_c = rng.uniform(0.0, 2.0 * np.pi, n_cap)
    r_c = radius * np.sqrt(rng.uniform(0.0, 1.0, n_cap))
    x_c = np.where(rng.random(n_cap) < 0.5, -length / 2.0, length / 2.0)
    caps_pts = np.column_stack([x_c, r_c * np.cos(theta_c), r_c * np.sin(theta_c)])
    return np.vstack([side, caps_pts])


def sample_sphere(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * radius


def sample_bowl(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    """Open hemispherical shell, opening toward +z."""
    v = sample_sphere(rng, n, radius)
    v[:, 2] = -np.abs(v[:, 2])
    return v


def sample_wedge(rng: np.random.Generator, n: int, length: float, depth: float,
                 thickness: float) -> np.ndarray:
    """Blade: length along x, tapering in y-thickness toward the -z edge."""
    x = rng.uniform(0.0, length, n)
    z = rng.uniform(-depth / 2.0, depth / 2.0, n)
    side = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    # thickness shrinks linearly from the spine (+z) to the edge (-z)
    t = thickness * (z + depth / 2.0) / depth
    y = side * t / 2.0
    return np.column_stack([x, y, z])


def sample_tapered_rod(rng: np.random.Generator, n: int, r_base: float, r_tip: float,
                       length: float) -> np.ndarray:
    """Cone frustum along x; thick end at -x, tip at +x."""
    x = rng.uniform(0.0, 1.0, n)
    r = r_base + (r_tip - r_base) * x
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    return np.column_stack([
        (x - 0.5) * length, r * np.cos(theta), r * np.sin(theta),
    ])


def sample_cross_tip(rng: np.random.Generator, n: int, length: float, span: float,
                     thickness: float) -> np.ndarray:
    """Two orthogonal thin plates along x (a driver tip profile)."""
    n1 = n // 2
    p1 = sample_box(rng, n1, (length, span, thickness))
    p2 = sample_box(rng, n - n1, (length, thickness, span))
    pts = np.vstack([p1, p2])
    pts[:, 0] += length / 2.0
    return pts


def sample_toothed_plate(rng: np.random.Generator, n: int, width: float, depth: float,
                         thickness: float, teeth: int, tooth_len: float) -> np.ndarray:
    """Rake head: a bar along y with teeth extending toward +x."""
    n_bar = int(n * 0.6)
    bar = sample_box(rng, n_bar, (depth, width, thickness))
    bar[:, 0] += depth / 2.0
    n_teeth = n - n_bar
    per = max(n_teeth // teeth, 1)
    tooth_w = width / (2 * teeth)
    chunks = [bar]
    centers = np.linspace(-width / 2.0 + tooth_w, width / 2.0 - tooth_w, teeth)
    for t in range(teeth):
        count = per if t < teeth - 1 else n_teeth - per * (teeth - 1)
        tooth = sample_box(rng, max(count, 1), (tooth_len, tooth_w, thickness))
        tooth[:, 0] += depth + tooth_len / 2.0
        tooth[:, 1] += centers[t]
        chunks.append(tooth)
    return np.vstack(chunks)[:n]


def sample_blob(rng: np.random.Generator, n: int, scale: float) -> np.ndarray:
    """Bumpy ellipsoid: a deterministic 'unhelpful object' distractor."""
    dirs = sample_sphere(rng, n, 1.0)
    axes = rng.uniform(0.5, 1.0, 3)
    centers = sample_sphere(rng, 4, 1.0)
    amps = rng.uniform(0.05, 0.25, 4)
    r = np.ones(n)
    for c, a in zip(centers, amps):
        cos = dirs @ c
        r += a * np.exp(-(1.0 - cos) / 0.3)
    return dirs * r[:, None] * axes[None, :] * scale


# -- tool recipes ---------------------------------------------------------------


@dataclass(frozen=True)
class ToolPrototypeSpec:
    """Parametric recipe: dimension ranges (meters) and point density."""

    action: str
    ranges: dict = field(default_factory=dict)
    density: int = DEFAULT_DENSITY

    def __post_init__(self):
        if self.density < 1000:
            raise ValueError("density must be >= 1000 points")


_DEFAULT_RANGES = {
    "hit": {
        "handle_radius": (0.010, 0.015), "handle_length": (0.18, 0.26),
        "head_x": (0.030, 0.050), "head_y": (0.080, 0.120), "head_z": (0.030, 0.045),
    },
    "scoop/contain": {
        "handle_radius": (0.006, 0.010), "handle_length": (0.10, 0.16),
        "bowl_radius": (0.040, 0.060),
    },
    "flip": {
        "handle_radius": (0.006, 0.010), "handle_length": (0.12, 0.18),
        "plate_x": (0.070, 0.100), "plate_y": (0.080, 0.120), "plate_t": (0.004, 0.006),
    },
    "squeegee": {
        "handle_radius": (0.006, 0.010), "handle_length": (0.10, 0.16),
        "plate_x": (0.030, 0.050), "plate_y": (0.150, 0.220), "plate_t": (0.002, 0.004),
    },
    "screw": {
        "handle_radius": (0.012, 0.018), "handle_length": (0.08, 0.12),
        "tip_length": (0.040, 0.060), "tip_span": (0.010, 0.014), "tip_t": (0.002, 0.003),
    },
    "rake": {
        "handle_radius": (0.006, 0.010), "handle_length": (0.14, 0.20),
        "head_width": (0.120, 0.180), "head_depth": (0.015, 0.025),
        "head_t": (0.004, 0.006), "tooth_len": (0.030, 0.050),
    },
    "cut": {
        "handle_radius": (0.008, 0.012), "handle_length": (0.09, 0.13),
        "blade_length": (0.080, 0.120), "blade_depth": (0.025, 0.035),
        "blade_t": (0.003, 0.005),
    },
    "poke": {
        "base_radius": (0.010, 0.014), "tip_radius": (0.001, 0.003),
        "length": (0.15, 0.22),
    },
}


def default_spec(action: str) -> ToolPrototypeSpec:
    if action not in _DEFAULT_RANGES:
        raise UnknownAction(f"no tool recipe for action {action!r}")
    return ToolPrototypeSpec(action, dict(_DEFAULT_RANGES[action]))


def sample_dimensions(spec: ToolPrototypeSpec, rng: np.random.Generator) -> dict:
    """Draw one concrete dimension per range, in sorted-key order."""
    return {
        key: float(rng.uniform(lo, hi))
        for key, (lo, hi) in sorted(spec.ranges.items())
    }


def _handle_cloud(rng, n, dims) -> np.ndarray:
    pts = sample_cylinder(rng, n, dims["handle_radius"], dims["handle_length"])
    pts[:, 0] -= dims["handle_length"] / 2.0  # handle spans [-L, 0]
    return pts


def _head_cloud(action: str, rng, n, dims) -> np.ndarray:
    if action == "hit":
        pts = sample_box(rng, n, (dims["head_x"], dims["head_y"], dims["head_z"]))
        pts[:, 0] += dims["head_x"] / 2.0
        return pts
    if action == "scoop/contain":
        pts = sample_bowl(rng, n, dims["bowl_radius"])
        pts[:, 0] += dims["bowl_radius"]
        return pts
    if action in ("flip", "squeegee"):
        pts = sample_box(rng, n, (dims["plate_x"], dims["plate_y"], dims["plate_t"]))
        pts[:, 0] += dims["plate_x"] / 2.0
        return pts
    if action == "screw":
        return sample_cross_tip(rng, n, dims["tip_length"], dims["tip_span"], dims["tip_t"])
    if action == "rake":
        return sample_toothed_plate(rng, n, dims["head_width"], dims["head_depth"],
                                    dims["head_t"], teeth=5, tooth_len=dims["tooth_len"])
    if action == "cut":
        pts = sample_wedge(rng, n, dims["blade_length"], dims["blade_depth"], dims["blade_t"])
        return pts
    raise UnknownAction(f"no head recipe for action {action!r}")


def gen_tool_cloud(action: str, spec: ToolPrototypeSpec | None = None,
                   seed: int = 0) -> PointCloud:
    """A whole prototype tool in canonical pose, deterministic per seed."""
    spec = spec or default_spec(action)
    rng = np.random.Generator(np.random.PCG64(seed))
    dims = sample_dimensions(spec, rng)
    n = spec.density
    if action == "poke":
        pts = sample_tapered_rod(rng, n, dims["base_radius"], dims["tip_radius"],
                                 dims["length"])
    else:
        n_head = n // 2
        head = _head_cloud(action, rng, n_head, dims)
        handle = _handle_cloud(rng, n - n_head, dims)
        pts = np.vstack([head, handle])
    safe = action.replace("/", "-")
    return PointCloud(pts, f"proto-{safe}-{seed}")


PART_ROLES = tuple(
    [f"{a}-head" for a in ALL_ACTIONS if a != "poke"]
    + ["poke-head", "handle", "distractor-blob", "distractor-cube", "distractor-sphere"]
)


def gen_part_cloud(role: str, spec: ToolPrototypeSpec | None = None,
                   seed: int = 0) -> PointCloud:
    """An isolated part or distractor shape, deterministic per seed."""
    rng = np.random.Generator(np.random.PCG64(seed))
    if role == "handle":
        radius = rng.uniform(0.008, 0.014)
        length = rng.uniform(0.16, 0.26)
        pts = sample_cylinder(rng, DEFAULT_DENSITY, radius, length)
    elif role.endswith("-head"):
        action = role[:-len("-head")]
        if action == "poke":
            pts = sample_tapered_rod(rng, DEFAULT_DENSITY,
                                     rng.uniform(0.010, 0.014),
                                     rng.uniform(0.001, 0.003),
                                     rng.uniform(0.15, 0.22))
        else:
            tool_spec = spec or default_spec(action)
            dims = sample_dimensions(tool_spec, rng)
            pts = _head_cloud(action, rng, DEFAULT_DENSITY, dims)
            pts -= pts.mean(axis=0)
    elif role == "distractor-blob":
        pts = sample_blob(rng, DEFAULT_DENSITY, rng.uniform(0.03, 0.06))
    elif role == "distractor-cube":
        s = rng.uniform(0.04, 0.08)
        pts = sample_box(rng, DEFAULT_DENSITY, (s, s, s))
    elif role == "distractor-sphere":
        pts = sample_sphere(rng, DEFAULT_DENSITY, rng.uniform(0.03, 0.06))
    else:
        raise UnknownAction(f"unknown part role {role!r}")
    return PointCloud(pts, f"part-{role.replace('/', '-')}-{seed}")


def blend_with_blob(cloud: PointCloud, alpha: float, seed: int = 0) -> PointCloud:
    """Morph a cloud toward a size-matched blob; degrades shape quality."""
    rng = np.random.Generator(np.random.PCG64(seed))
    scale = float(np.abs(cloud.points - cloud.centroid).max())
    blob = sample_blob(rng, len(cloud), max(scale, 1e-3)) + cloud.centroid
    mixed = (1.0 - alpha) * cloud.points + alpha * blob[rng.permutation(len(cloud))]
    return PointCloud(mixed, cloud.id + f"-blend{alpha:g}")
