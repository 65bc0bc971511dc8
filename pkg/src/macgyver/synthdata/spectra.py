"""Synthetic spectral data shaped like a 5-class spectrometer corpus.

Each material class gets a fixed smooth signature (a mixture of Gaussian
bumps over the 331 channels). Every object of a class carries a constant
offset vector (an overall reflectance level plus a spectral tilt, the two
dominant ways physically distinct objects of one material differ);
individual scans add white noise on top. The object/scan hierarchy makes
held-out-object generalization measurable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..spectral import SPECTRUM_SIZE, MaterialClass, SpectralReading

DEFAULT_OBJECTS_PER_CLASS = 12
DEFAULT_SAMPLES_PER_OBJECT = 50
DEFAULT_NOISE_SCALE = 0.015
DEFAULT_OBJECT_OFFSET_SCALE = 0.35

_CLASS_SEEDS = {
    MaterialClass.METAL: 101,
    MaterialClass.WOOD: 102,
    MaterialClass.PLASTIC: 103,
    MaterialClass.PAPER: 104,
    MaterialClass.FOAM: 105,
}

_TILT = np.linspace(-1.0, 1.0, SPECTRUM_SIZE)


@dataclass(frozen=True)
class SpectralClassModel:
    material: MaterialClass
    mean: np.ndarray
    noise_scale: float = DEFAULT_NOISE_SCALE
    object_offset_scale: float = DEFAULT_OBJECT_OFFSET_SCALE

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        if mean.shape != (SPECTRUM_SIZE,):
            raise ValueError(f"class mean must have {SPECTRUM_SIZE} channels")
        if self.noise_scale < 0.0 or self.object_offset_scale < 0.0:
            raise ValueError("noise scales must be >= 0")
        object.__setattr__(self, "mean", mean)


def class_signature(material: MaterialClass) -> np.ndarray:
    """Fixed per-class mean: 3-5 Gaussian bumps on a per-class baseline."""
    rng = np.random.Generator(np.random.PCG64(_CLASS_SEEDS[material]))
    x = np.arange(SPECTRUM_SIZE, dtype=np.float64)
    mean = np.full(SPECTRUM_SIZE, 0.4 + 1.2 * rng.random())
    for _ in range(int(rng.integers(3, 6))):
        center = rng.uniform(0.0, SPECTRUM_SIZE - 1)
        width = rng.uniform(8.0, 35.0)
        amp = rng.uniform(0.8, 2.5) * (1.0 if rng.random() < 0.7 else -1.0)
        mean += amp * np.exp(-((x - center) ** 2) / (2.0 * width * width))
    return mean


def default_class_models(noise_scale: float = DEFAULT_NOISE_SCALE,
                         object_offset_scale: float = DEFAULT_OBJECT_OFFSET_SCALE) -> dict:
    return {
        material: SpectralClassModel(material, class_signature(material),
                                     noise_scale, object_offset_scale)
        for material in MaterialClass
    }


def sample_object_offset(model: SpectralClassModel,
                         rng: np.random.Generator) -> np.ndarray:
    """Constant per-object offset: reflectance level plus spectral tilt."""
    level = rng.normal(0.0, model.object_offset_scale)
    tilt = rng.normal(0.0, model.object_offset_scale)
    return level + tilt * _TILT


def sample_reading(model: SpectralClassModel, rng: np.random.Generator,
                   object_offset, object_id: str,
                   scan_id: str = "0") -> SpectralReading:
    values = model.mean + object_offset + rng.normal(0.0, model.noise_scale,
                                                     SPECTRUM_SIZE)
    return SpectralReading(values, object_id, scan_id)


def gen_spectral_dataset(class_models: dict | None = None,
                         objects_per_class: int = DEFAULT_OBJECTS_PER_CLASS,
                         samples_per_object: int = DEFAULT_SAMPLES_PER_OBJECT,
                         seed: int = 0) -> list:
    """(SpectralReading, MaterialClass) rows: classes x objects x scans."""
    class_models = class_models or default_class_models()
    if len(class_models) != len(MaterialClass):
        raise ValueError("need one class model per material class")
    rng = np.random.Generator(np.random.PCG64(seed))
    rows = []
    for material in sorted(class_models, key=lambda m: m.value):
        model = class_models[material]
        for obj in range(objects_per_class):
            offset = sample_object_offset(model, rng)
            object_id = f"{material.value}-{obj:02d}"
            for scan in range(samples_per_object):
                rows.append((sample_reading(model, rng, offset, object_id, str(scan)),
                             material))
    return rows


def split_by_object(dataset, holdout_per_class: int = 3):
    """Deterministic train/test split holding out whole objects per class."""
    by_class: dict = {}
    for reading, material in dataset:
        by_class.setdefault(material, {}).setdefault(reading.object_id, []).append(
            (reading, material))
    train, test = [], []
    for material in sorted(by_class, key=lambda m: m.value):
        objects = sorted(by_class[material])
        held = set(objects[-holdout_per_class:]) if holdout_per_class > 0 else set()
        for obj in objects:
            target = test if obj in held else train
            target.extend(by_class[material][obj])
    return train, test


def nearest_class_mean_accuracy(dataset) -> float:
    """Oracle check: classify readings by nearest class-mean signature."""
    means = {m: class_signature(m) for m in MaterialClass}
    classes = sorted(means, key=lambda m: m.value)
    stack = np.stack([means[m] for m in classes])
    correct = 0
    for reading, material in dataset:
        d = np.linalg.norm(stack - reading.values[None, :], axis=1)
        if classes[int(np.argmin(d))] is material:
            correct += 1
    return correct / len(dataset)
