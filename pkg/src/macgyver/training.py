"""Training orchestration: synthetic pools in, trained model bundle out.

Four model families are trained here: per-action material similarity
models (331-D spectral twins, L1 head), per-action joint shape models
(640-D descriptor twins, squared-L1 head), per-part binary shape networks
(descriptor in, suitability confidence out), and the pierceability
classifier. Every trainer is deterministic for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import compute_esf
from .neuralnet import (
    DenseNetwork,
    DualNetworkModel,
    TrainConfig,
    compute_embedding,
    train_binary,
    train_dual,
)
from .pipeline import ModelBundle
from .spectral import ActionMaterialTable, PIERCEABLE_CLASSES, make_training_pairs
from .synthdata import (
    ALL_ACTIONS,
    gen_part_cloud,
    gen_spectral_dataset,
    gen_tool_cloud,
    split_by_object,
)


@dataclass
class TrainerSizes:
    """Pool and epoch sizes; defaults balance quality against runtime."""

    material_pairs: int = 3000
    material_epochs: int = 30
    material_batch: int = 64
    joint_pairs: int = 700
    joint_epochs: int = 25
    joint_batch: int = 64
    part_examples_per_role: int = 24
    part_epochs: int = 150
    pierce_epochs: int = 8
    references_per_action: int = 5
    esf_samples: int = 6000
    holdout_objects: int = 3


# -- material -------------------------------------------------------------------


def train_material_model(dataset, table: ActionMaterialTable, action: str,
                         sizes: TrainerSizes, seed: int = 0) -> DualNetworkModel:
    """Dual network on labeled reading pairs, embedding from the positives."""
    config = TrainConfig(epochs=sizes.material_epochs, batch_size=sizes.material_batch,
                         seed=seed)
    pairs = make_training_pairs(dataset, action, table, sizes.material_pairs, seed=seed)
    model = train_dual(pairs, config, metric_exponent=1)
    appropriate = table[action]
    positives = np.stack([r.values for r, cls in dataset if cls in appropriate])
    model.embedding = compute_embedding(model, positives, action)
    return model


# -- pierceability ----------------------------------------------------------------


def train_pierce_classifier(dataset, sizes: TrainerSizes, seed: int = 0) -> DenseNetwork:
    features = np.stack([r.values for r, _ in dataset])
    labels = np.asarray([1.0 if cls in PIERCEABLE_CLASSES else 0.0
                         for _, cls in dataset])
    config = TrainConfig(epochs=sizes.pierce_epochs, batch_size=256,
                         dropout=0.0, seed=seed)
    return train_binary(features, labels, hidden_dims=(256,), activation="relu",
                        config=config)


# -- part shape networks -----------------------------------------------------------


def part_shape_pool(actions, per_role: int, esf_samples: int, seed: int = 0) -> dict:
    """role -> list of descriptors; shared across all part networks."""
    pool: dict = {}
    roles = [f"{a}-head" for a in actions] + ["handle", "distractor-blob",
                                              "distractor-cube", "distractor-sphere"]
    for role in roles:
        descs = []
        for k in range(per_role):
            cloud = gen_part_cloud(role, seed=seed * 10_000 + k)
            descs.append(compute_esf(cloud, esf_samples, seed=0).values)
        pool[role] = descs
    return pool


def _balanced_binary_set(positives, negatives, rng) -> tuple:
    n = len(positives)
    if len(negatives) > n:
        idx = rng.choice(len(negatives), size=n, replace=False)
        negatives = [negatives[i] for i in np.sort(idx)]
    features = np.stack(positives + negatives)
    labels = np.concatenate([np.ones(len(positives)), np.zeros(len(negatives))])
    return features, labels


def train_part_networks(actions, sizes: TrainerSizes, seed: int = 0,
                        pool: dict | None = None) -> dict:
    """One suitability network per action head role plus one handle network."""
    actions = list(actions)
    pool = pool or part_shape_pool(actions, sizes.part_examples_per_role,
                                   sizes.esf_samples, seed)
    distractors = (pool["distractor-blob"] + pool["distractor-cube"]
                   + pool["distractor-sphere"])
    config = TrainConfig(epochs=sizes.part_epochs, batch_size=32, dropout=0.0,
                         learning_rate=0.001, seed=seed)
    networks = {}
    rng = np.random.Generator(np.random.PCG64(seed + 17))
    for action in actions:
        positives = pool[f"{action}-head"]
        negatives = [d for a in actions if a != action for d in pool[f"{a}-head"]]
        negatives = negatives + pool["handle"] + distractors
        features, labels = _balanced_binary_set(positives, negatives, rng)
        networks[action] = train_binary(features, labels, hidden_dims=(256, 64),
                                        activation="relu", config=config)
    head_negatives = [d for a in actions for d in pool[f"{a}-head"]] + distractors
    features, labels = _balanced_binary_set(pool["handle"], head_negatives, rng)
    networks["handle"] = train_binary(features, labels, hidden_dims=(256, 64),
                                      activation="relu", config=config)
    return networks


# -- joint shape models --------------------------------------------------------------


def joint_shape_pool(actions, per_action: int, esf_samples: int, seed: int = 0) -> dict:
    """action -> descriptors of whole prototype tools, plus distractor clouds."""
    pool: dict = {}
    for action in actions:
        descs = []
        for k in range(per_action):
            cloud = gen_tool_cloud(action, seed=seed * 10_000 + 100 + k)
            descs.append(compute_esf(cloud, esf_samples, seed=0).values)
        pool[action] = descs
    distractors = []
    for k in range(per_action):
        for role in ("distractor-blob", "distractor-cube", "distractor-sphere"):
            cloud = gen_part_cloud(role, seed=seed * 10_000 + 500 + k)
            distractors.append(compute_esf(cloud, esf_samples, seed=0).values)
    pool["__distractors__"] = distractors
    return pool


def _balanced_feature_pairs(features, flags, pair_count: int, rng) -> list:
    """(a, b, label) tuples, about half positive, drawn with replacement."""
    flags = np.asarray(flags, dtype=bool)
    pos_idx = np.flatnonzero(flags)
    neg_idx = np.flatnonzero(~flags)
    if pos_idx.size == 0 or neg_idx.size == 0:
        raise ValueError("need both positive and negative feature examples")
    pairs = []
    n_pos = (pair_count + 1) // 2
    for _ in range(n_pos):
        i, j = rng.choice(pos_idx), rng.choice(pos_idx)
        pairs.append((features[i], features[j], 1))
    for _ in range(pair_count - n_pos):
        i = rng.choice(neg_idx)
        j = rng.integers(0, len(features))
        a, b = (features[j], features[i]) if rng.random() < 0.5 else (features[i], features[j])
        pairs.append((a, b, 0))
    order = rng.permutation(len(pairs))
    return [pairs[k] for k in order]


def train_joint_model(action: str, pool: dict, sizes: TrainerSizes,
                      seed: int = 0) -> DualNetworkModel:
    positives = pool[action]
    negatives = [d for a in pool if a not in (action, "__distractors__")
                 for d in pool[a]] + pool["__distractors__"]
    features = positives + negatives
    flags = [True] * len(positives) + [False] * len(negatives)
    rng = np.random.Generator(np.random.PCG64(seed + 31))
    pairs = _balanced_feature_pairs(features, flags, sizes.joint_pairs, rng)
    config = TrainConfig(epochs=sizes.joint_epochs, batch_size=sizes.joint_batch,
                         seed=seed)
    model = train_dual(pairs, config, metric_exponent=2)
    model.embedding = compute_embedding(model, np.stack(positives), action)
    return model


# -- references / full bundle -----------------------------------------------------------


def build_references(actions, per_action: int, seed: int = 0) -> dict:
    return {
        action: [gen_tool_cloud(action, seed=seed * 10_000 + 1000 + k)
                 for k in range(per_action)]
        for action in actions
    }


def train_bundle(actions=ALL_ACTIONS, table: ActionMaterialTable | None = None,
                 sizes: TrainerSizes | None = None, seed: int = 0,
                 spectral_dataset=None, log=None) -> ModelBundle:
    """Train every component for the given actions into one bundle."""
    actions = list(actions)
    table = table or ActionMaterialTable()
    sizes = sizes or TrainerSizes()
    say = log or (lambda msg: None)

    if spectral_dataset is None:
        spectral_dataset = gen_spectral_dataset(seed=seed)
    train_split, _ = split_by_object(spectral_dataset, sizes.holdout_objects)

    bundle = ModelBundle()
    say(f"training pierceability classifier on {len(train_split)} readings")
    bundle.pierce = train_pierce_classifier(train_split, sizes, seed)

    say("building part-shape descriptor pool")
    pool = part_shape_pool(actions, sizes.part_examples_per_role,
                           sizes.esf_samples, seed)
    say("training part-shape networks")
    bundle.part_networks = train_part_networks(actions, sizes, seed, pool)

    say("building joint-shape descriptor pool")
    jpool = joint_shape_pool(actions, sizes.part_examples_per_role,
                             sizes.esf_samples, seed)
    for action in actions:
        say(f"training material model: {action}")
        bundle.material[action] = train_material_model(train_split, table, action,
                                                       sizes, seed)
        say(f"training joint shape model: {action}")
        bundle.joint_shape[action] = train_joint_model(action, jpool, sizes, seed)

    bundle.references = build_references(actions, sizes.references_per_action, seed)
    return bundle
