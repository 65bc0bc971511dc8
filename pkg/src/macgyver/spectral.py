"""Spectral readings, material classes, and the action/material table.

A reading is a 331-channel reflected-intensity vector. The table maps each
action tag to the set of material classes considered appropriate for it;
labeled training pairs for the similarity network are positive exactly when
both readings' materials are appropriate for the action.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import InsufficientData, UnknownAction

SPECTRUM_SIZE = 331


class MaterialClass(Enum):
    METAL = "metal"
    WOOD = "wood"
    PLASTIC = "plastic"
    PAPER = "paper"
    FOAM = "foam"


PIERCEABLE_CLASSES = frozenset({MaterialClass.PAPER, MaterialClass.FOAM})

# Only partial rows of the appropriateness table are fixed by the source
# study ("hit" pairings); the rest are project defaults and every row can
# be overridden from a JSON table file.
DEFAULT_ACTION_MATERIALS = {
    "hit": {MaterialClass.METAL, MaterialClass.WOOD},
    "cut": {MaterialClass.METAL},
    "scoop/contain": {MaterialClass.METAL, MaterialClass.PLASTIC, MaterialClass.WOOD},
    "flip": {MaterialClass.METAL, MaterialClass.PLASTIC, MaterialClass.WOOD},
    "poke": {MaterialClass.METAL, MaterialClass.WOOD, MaterialClass.PLASTIC},
    "rake": {MaterialClass.METAL, MaterialClass.WOOD, MaterialClass.PLASTIC},
    "screw": {MaterialClass.METAL},
    "squeegee": {MaterialClass.PLASTIC, MaterialClass.FOAM},
}


@dataclass(frozen=True)
class SpectralReading:
    values: np.ndarray
    object_id: str = ""
    scan_location_id: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if vals.shape != (SPECTRUM_SIZE,):
            raise ValueError(f"expected {SPECTRUM_SIZE} channels, got {vals.shape}")
        if not np.isfinite(vals).all():
            raise ValueError("spectral reading contains non-finite values")
        object.__setattr__(self, "values", vals)


class ActionMaterialTable:
    """Immutable action -> appropriate-material-set mapping."""

    def __init__(self, entries=None):
        source = DEFAULT_ACTION_MATERIALS if entries is None else entries
        table = {}
        for action, classes in source.items():
            classes = frozenset(classes)
            if not classes:
                raise ValueError(f"action {action!r} has an empty material set")
            table[action] = classes
        self._table = table

    def actions(self) -> tuple:
        return tuple(sorted(self._table))

    def __contains__(self, action: str) -> bool:
        return action in self._table

    def __getitem__(self, action: str) -> frozenset:
        try:
            return self._table[action]
        except KeyError:
            raise UnknownAction(f"no material entry for action {action!r}") from None

    @staticmethod
    def load(path) -> "ActionMaterialTable":
        raw = json.loads(Path(path).read_text())
        entries = {
            action: {MaterialClass(name) for name in names}
            for action, names in raw.items()
        }
        return ActionMaterialTable(entries)

    def save(self, path) -> None:
        payload = {
            action: sorted(cls.value for cls in classes)
            for action, classes in self._table.items()
        }
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


@dataclass(frozen=True)
class LabeledPair:
    first: SpectralReading
    second: SpectralReading
    label: int
    action: str


def is_pair_positive(action: str, a: MaterialClass, b: MaterialClass,
                     table: ActionMaterialTable) -> bool:
    """True iff both materials are appropriate for the action."""
    appropriate = table[action]
    return a in appropriate and b in appropriate


def make_training_pairs(dataset, action: str, table: ActionMaterialTable,
                        pair_count: int, seed: int = 0) -> list:
    """Draw class-balanced labeled reading pairs (with replacement).

    dataset: sequence of (SpectralReading, MaterialClass). Positives pair two
    appropriate readings. Negatives anchor one inappropriate reading and draw
    the partner from a different material class whenever one exists: a
    tied-weight distance head scores two near-identical readings at the
    constant sigma(beta), so same-class-inappropriate pairs are unlearnable
    and add nothing to the embedding-similarity objective. When no negative
    is achievable every pair is positive; when no positive is achievable the
    dataset is unusable and InsufficientData is raised.
    """
    dataset = list(dataset)
    if len(dataset) < 2:
        raise InsufficientData("need at least two readings")
    appropriate = table[action]

    good = [i for i, (_, cls) in enumerate(dataset) if cls in appropriate]
    bad = [i for i, (_, cls) in enumerate(dataset) if cls not in appropriate]
    if not good:
        raise InsufficientData(f"no appropriate-material reading for {action!r}")
    by_class: dict = {}
    for i, (_, cls) in enumerate(dataset):
        by_class.setdefault(cls, []).append(i)

    rng = np.random.Generator(np.random.PCG64(seed))
    n_positive = (pair_count + 1) // 2 if bad else pair_count
    n_negative = pair_count - n_positive

    pairs = []
    for _ in range(n_positive):
        i, j = rng.choice(good), rng.choice(good)
        pairs.append((int(i), int(j)))
    for _ in range(n_negative):
        i = int(rng.choice(bad))
        anchor_cls = dataset[i][1]
        others = [k for cls, idxs in by_class.items() if cls is not anchor_cls
                  for k in idxs]
        j = int(rng.choice(others)) if others else int(rng.integers(0, len(dataset)))
        if rng.random() < 0.5:
            i, j = j, i
        pairs.append((i, j))

    order = rng.permutation(len(pairs))
    out = []
    for k in order:
        i, j = pairs[k]
        reading_i, cls_i = dataset[i]
        reading_j, cls_j = dataset[j]
        label = int(is_pair_positive(action, cls_i, cls_j, table))
        out.append(LabeledPair(reading_i, reading_j, label, action))
    return out


def load_readings(path, object_id: str = "") -> list:
    """Read spectra: one reading per line, 331 comma-separated reals."""
    path = Path(path)
    readings = []
    with path.open() as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            vals = np.fromstring(line, sep=",")
            if vals.shape != (SPECTRUM_SIZE,):
                raise ValueError(f"{path}:{lineno + 1}: expected {SPECTRUM_SIZE} values")
            readings.append(SpectralReading(vals, object_id or path.stem, str(lineno)))
    return readings


def save_readings(readings, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for reading in readings:
            fh.write(",".join(f"{v:.17g}" for v in reading.values) + "\n")
