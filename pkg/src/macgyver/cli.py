"""Command-line interface: data generation, training, ranking, benchmarks.

Commands are deterministic given their inputs and --seed: repeated runs
produce byte-identical artifacts, except for the timestamped header line
of text reports. Exit codes: 0 success, 1 threshold violation, 2 usage
error, 3 data/model error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .bench import check_thresholds, run_benchmark, write_reports
from .errors import IoError, MacgyverError, ManifestError
from .geometry import save_cloud
from .neuralnet import load_model, save_model
from .pipeline import (
    ModelBundle,
    arbitrate,
    evaluate_query,
    load_manifest,
    rank,
    resolve_manifest,
    validate_loop,
)
from .spectral import ActionMaterialTable, MaterialClass, load_readings
from .synthdata import (
    CONSTRUCTION_ACTIONS,
    SUBSTITUTION_ACTIONS,
    build_experiment_set,
    default_class_models,
    gen_spectral_dataset,
)
from .training import (
    TrainerSizes,
    build_references,
    joint_shape_pool,
    part_shape_pool,
    train_bundle,
    train_joint_model,
    train_material_model,
    train_part_networks,
    train_pierce_classifier,
)
from .values import NEG_INF

DEFAULT_SETS_PER_ACTION = 5
DEFAULT_OBJECTS_PER_SET = 10
KIND_ACTIONS = {
    "construction": CONSTRUCTION_ACTIONS,
    "substitution": SUBSTITUTION_ACTIONS,
    "arbitration": CONSTRUCTION_ACTIONS,
}
COMPONENTS = ("material", "joint-shape", "part-shape", "pierce", "all")


def safe_action(action: str) -> str:
    return action.replace("/", "-")


def _say(msg: str) -> None:
    print(msg, flush=True)


# -- dataset helpers ----------------------------------------------------------


def _smm50_dir(root: Path) -> Path:
    return root / "spectra" / "smm50"


def load_smm50(root: Path) -> list:
    """Read the on-disk spectral corpus back as (reading, class) rows."""
    base = _smm50_dir(root)
    if not base.is_dir():
        raise IoError(f"no spectral corpus under {base}; run gen-data first")
    rows = []
    for class_dir in sorted(base.iterdir()):
        if not class_dir.is_dir():
            continue
        material = MaterialClass(class_dir.name)
        for csv in sorted(class_dir.glob("*.csv")):
            for reading in load_readings(csv, object_id=csv.stem):
                rows.append((reading, material))
    if not rows:
        raise IoError(f"no readings found under {base}")
    return rows


def _prototype_dir(root: Path, action: str) -> Path:
    return root / "clouds" / "prototypes" / safe_action(action)


def load_references(root: Path, actions) -> dict:
    refs = {}
    for action in actions:
        proto_dir = _prototype_dir(root, action)
        clouds = []
        if proto_dir.is_dir():
            from .geometry import load_cloud

            clouds = [load_cloud(p) for p in sorted(proto_dir.glob("*.txt"))]
        refs[action] = clouds
    return refs


def _table_path(root: Path) -> Path:
    return root / "tables" / "materials.json"


def load_table(root: Path) -> ActionMaterialTable:
    path = _table_path(root)
    return ActionMaterialTable.load(path) if path.exists() else ActionMaterialTable()


def load_bundle(models_dir: Path, root: Path, actions) -> ModelBundle:
    bundle = ModelBundle()
    for action in actions:
        mat = models_dir / f"material-{safe_action(action)}.json"
        if mat.exists():
            bundle.material[action] = load_model(mat)
        joint = models_dir / f"joint-shape-{safe_action(action)}.json"
        if joint.exists():
            bundle.joint_shape[action] = load_model(joint)
        part = models_dir / f"part-{safe_action(action)}.json"
        if part.exists():
            bundle.part_networks[action] = load_model(part)
    handle = models_dir / "part-handle.json"
    if handle.exists():
        bundle.part_networks["handle"] = load_model(handle)
    pierce = models_dir / "pierce.json"
    if pierce.exists():
        bundle.pierce = load_model(pierce)
    bundle.references = load_references(root, actions)
    return bundle


def _write_training_log(model, path: Path) -> None:
    info = getattr(model, "training", None)
    if info is None:
        return
    doc = {"seed": info.seed, "lr": info.lr, "l2": info.l2, "epochs": info.epochs,
           "epoch_losses": info.epoch_losses}
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


# -- commands -------------------------------------------------------------------


def cmd_gen_data(args) -> int:
    root = Path(args.root)
    root.mkdir(parents=True, exist_ok=True)
    seed = args.seed
    table = ActionMaterialTable()
    table.save(_table_path(root))
    _say(f"wrote {_table_path(root)}")

    dataset = gen_spectral_dataset(default_class_models(), seed=seed)
    by_object: dict = {}
    for reading, material in dataset:
        by_object.setdefault((material, reading.object_id), []).append(reading)
    for (material, object_id), readings in sorted(by_object.items(),
                                                  key=lambda kv: (kv[0][0].value, kv[0][1])):
        out = _smm50_dir(root) / material.value / f"{object_id}.csv"
        from .spectral import save_readings

        save_readings(readings, out)
    _say(f"wrote {len(by_object)} spectral object files "
         f"({len(dataset)} readings) under {_smm50_dir(root)}")

    actions = sorted({a for kind in args.kinds for a in KIND_ACTIONS[kind]})
    references = build_references(actions, per_action=5, seed=seed)
    proto_count = 0
    for action, clouds in references.items():
        for k, cloud in enumerate(clouds):
            save_cloud(cloud, _prototype_dir(root, action) / f"proto-{k}.txt")
            proto_count += 1
    _say(f"wrote {proto_count} prototype clouds")

    manifest_count = 0
    for kind in args.kinds:
        for action in KIND_ACTIONS[kind]:
            for case in range(args.sets):
                build_experiment_set(kind, action, args.objects,
                                     seed=seed * 100 + case, root=root, table=table)
                manifest_count += 1
        _say(f"wrote {args.sets * len(KIND_ACTIONS[kind])} {kind} manifests")
    _say(f"dataset complete: {manifest_count} manifests under {root / 'manifests'}")
    return 0


def cmd_train(args) -> int:
    root = Path(args.root)
    models_dir = Path(args.models)
    models_dir.mkdir(parents=True, exist_ok=True)
    table = load_table(root)
    actions = args.actions or list(table.actions())
    sizes = TrainerSizes(esf_samples=args.esf_samples)
    seed = args.seed

    def save_with_log(model, stem: str) -> None:
        save_model(model, models_dir / f"{stem}.json")
        _write_training_log(model, models_dir / f"{stem}.log.json")
        _say(f"wrote {models_dir / (stem + '.json')}")

    if args.component in ("material", "all"):
        dataset = load_smm50(root)
        from .synthdata import split_by_object

        train_split, _ = split_by_object(dataset, sizes.holdout_objects)
        for action in actions:
            _say(f"training material model for {action!r}")
            model = train_material_model(train_split, table, action, sizes, seed)
            save_with_log(model, f"material-{safe_action(action)}")
    if args.component in ("pierce", "all"):
        dataset = load_smm50(root)
        from .synthdata import split_by_object

        train_split, _ = split_by_object(dataset, sizes.holdout_objects)
        _say("training pierceability classifier")
        save_with_log(train_pierce_classifier(train_split, sizes, seed), "pierce")
    if args.component in ("part-shape", "all"):
        _say("building part-shape descriptor pool")
        pool = part_shape_pool(actions, sizes.part_examples_per_role,
                               sizes.esf_samples, seed)
        nets = train_part_networks(actions, sizes, seed, pool)
        for name, net in nets.items():
            stem = "part-handle" if name == "handle" else f"part-{safe_action(name)}"
            save_with_log(net, stem)
    if args.component in ("joint-shape", "all"):
        _say("building joint-shape descriptor pool")
        pool = joint_shape_pool(actions, sizes.part_examples_per_role,
                                sizes.esf_samples, seed)
        for action in actions:
            _say(f"training joint shape model for {action!r}")
            save_with_log(train_joint_model(action, pool, sizes, seed),
                          f"joint-shape-{safe_action(action)}")
    return 0


def _format_value(v) -> str:
    if v is NEG_INF:
        return "-inf"
    if v is None:
        return "-"
    return f"{v:.4f}"


def cmd_rank(args) -> int:
    root = Path(args.root)
    manifest = load_manifest(args.manifest)
    table = load_table(root)
    bundle = load_bundle(Path(args.models), root, list(table.actions()))
    objects = resolve_manifest(manifest)
    ctx = bundle.context(manifest.action, esf_samples=args.esf_samples,
                         reference_seed=args.seed, attach_seed=args.seed)
    mode = args.mode
    result = evaluate_query(
        objects, ctx, m=args.m,
        include_substitutes=mode in ("substitute", "macgyver"),
        include_constructions=mode in ("construct", "macgyver"),
        joint_for_constructions=mode == "macgyver" and args.strategy == "subs",
    )
    strategy = args.strategy if mode == "macgyver" else "direct"
    ranked = rank(result.states, arbitrate(strategy, result.states))

    print(f"action: {manifest.action}  mode: {mode}  strategy: {strategy}  "
          f"reference: {result.reference_id or '-'}")
    header = f"{'rank':>4}  {'state':<24} {'type':<9} {'shape':>8} {'mat':>8} " \
             f"{'attach':>8} {'final':>9} {'value':>9}  {'t_att':<8} attach points"
    print(header)
    for state in ranked:
        b = state.breakdown
        att = ("-" if b.attachment is None
               else _format_value(b.attachment))
        points = "-"
        if state.attach_points is not None and len(state.attach_points):
            points = "; ".join(
                "(" + ", ".join(f"{c:.3f}" for c in p) + ")"
                for p in state.attach_points)
        print(f"{state.rank:>4}  {state.key:<24} "
              f"{'construct' if state.is_construction else 'subs':<9} "
              f"{b.shape:>8.4f} {b.material:>8.4f} {att:>8} "
              f"{_format_value(state.final):>9} {_format_value(state.value):>9}  "
              f"{state.attach_type.value if state.attach_type else '-':<8} {points}")
    if manifest.oracle:
        found, attempts = validate_loop(ranked, manifest.oracle)
        print(f"validation: {'success at rank ' + str(attempts) if found else 'no solution'}"
              f" ({attempts} attempts)")
    return 0


def cmd_bench(args) -> int:
    root = Path(args.root)
    table = load_table(root)
    bundle = load_bundle(Path(args.models), root, list(table.actions()))
    manifest_dir = root / "manifests" / args.kind
    manifests = sorted(manifest_dir.glob("*.json"))
    if not manifests:
        raise ManifestError(f"no manifests under {manifest_dir}; run gen-data first")
    strategies = None
    if args.kind == "arbitration":
        strategies = (["rule", "direct", "subs", "random"] if args.strategy == "all"
                      else [args.strategy, "random"])
    report = run_benchmark(args.kind, manifests, bundle, strategy=args.strategy,
                           seed=args.seed, esf_samples=args.esf_samples,
                           strategies=strategies, jobs=args.jobs,
                           log=_say if args.verbose else None)
    out_dir = Path(args.out) if args.out else root / "reports"
    json_path, txt_path = write_reports(report, out_dir, f"{args.kind}-report")
    _say(f"wrote {json_path} and {txt_path}")

    if args.threshold_file:
        thresholds = json.loads(Path(args.threshold_file).read_text())
        violations = check_thresholds(report, thresholds)
        if violations:
            for v in violations:
                print(f"threshold violation: {v}", file=sys.stderr)
            return 1
    return 0


# -- entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="macgyver",
        description="Rank tool substitutes and two-part constructions for an action.",
    )
    default_root = os.environ.get("MACGYVER_ROOT", "dataset")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate the synthetic dataset tree")
    p.add_argument("--root", default=default_root)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sets", type=int, default=DEFAULT_SETS_PER_ACTION)
    p.add_argument("--objects", type=int, default=DEFAULT_OBJECTS_PER_SET)
    p.add_argument("--kinds", default="construction,substitution,arbitration",
                   type=lambda s: s.split(","))
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train models from the dataset")
    p.add_argument("--root", default=default_root)
    p.add_argument("--models", default="models")
    p.add_argument("--component", choices=COMPONENTS, default="all")
    p.add_argument("--actions", type=lambda s: s.split(","), default=None,
                   help="comma-separated actions (default: all table rows)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--esf-samples", type=int, default=6000)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("rank", help="rank one manifest's candidates")
    p.add_argument("--root", default=default_root)
    p.add_argument("--models", default="models")
    p.add_argument("--manifest", required=True)
    p.add_argument("--mode", choices=("substitute", "construct", "macgyver"),
                   default="macgyver")
    p.add_argument("--strategy", choices=("rule", "direct", "subs"), default="direct")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--esf-samples", type=int, default=6000)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("bench", help="run a benchmark and write reports")
    p.add_argument("--root", default=default_root)
    p.add_argument("--models", default="models")
    p.add_argument("--kind", choices=("construction", "substitution", "arbitration"),
                   required=True)
    p.add_argument("--strategy", default="direct",
                   choices=("rule", "direct", "subs", "all"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=5,
                   help="reported hits@k cutoff (1 and 5 always included)")
    p.add_argument("--esf-samples", type=int, default=6000)
    p.add_argument("--out", default=None)
    p.add_argument("--threshold-file", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MacgyverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
