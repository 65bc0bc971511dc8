"""Benchmark harnesses and evaluation metrics.

Three desk-scale benchmarks run the full pipeline over generated
experiment manifests: construction ranking (tuples only), substitution
ranking (single objects only), and arbitration (full state space under one
or more value-function strategies, including a seeded random baseline).

Reports carry per-case ranks plus aggregate metrics, as machine-readable
JSON and an aligned text table. REFERENCE_FIXTURES holds the metric values
reported by the original physical-object study; they appear in reports as
context only and are never pass/fail targets, because those objects and
scans are not reproducible here.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyCases, ManifestError
from .pipeline import (
    ModelBundle,
    ObjectSetManifest,
    arbitrate,
    evaluate_query,
    load_manifest,
    rank,
    resolve_manifest,
    state_key,
    validate_loop,
)
from .values import NEG_INF

BENCHMARK_KINDS = ("construction", "substitution", "arbitration")
ARBITRATION_WITH_BASELINE = ("rule", "direct", "subs", "random")

REFERENCE_FIXTURES = {
    "construction": {
        "avg_rank": 5.84, "rank_pct": 5.72, "hits5": 0.67, "completion": 0.9667,
        "random_rank_pct": 49.9,
    },
    "substitution": {
        "avg_rank": 2.0, "hits1": 0.53, "hits5": 0.86,
        "random_hits1": 0.05, "random_hits5": 0.14,
    },
    "arbitration": {
        "pct_correct": {"direct": 0.8333, "subs": 0.60, "rule": 0.20,
                        "random": 0.3667},
    },
}


# -- metrics -------------------------------------------------------------------


def average_rank(ranks) -> float:
    ranks = list(ranks)
    if not ranks:
        raise EmptyCases("no ranks to average")
    if any(r < 1 for r in ranks):
        raise ValueError("ranks are 1-based")
    return float(np.mean(ranks))


def hits_at_k(ranks, k: int) -> float:
    ranks = list(ranks)
    if k < 1:
        raise ValueError("k must be >= 1")
    if not ranks:
        return 0.0
    return float(np.mean([1.0 if r <= k else 0.0 for r in ranks]))


def rank_percent(ranks, sizes) -> float:
    """Mean of rank / |S| over cases, as a percentage in (0, 100]."""
    ranks, sizes = list(ranks), list(sizes)
    if not ranks:
        raise EmptyCases("no ranks")
    return float(np.mean([100.0 * r / s for r, s in zip(ranks, sizes)]))


def completion_rate(found_flags) -> float:
    flags = list(found_flags)
    if not flags:
        return 0.0
    return float(np.mean([1.0 if f else 0.0 for f in flags]))


def percent_correct(choices) -> float:
    """Fraction of cases where the strategy preferred the ground-truth option."""
    choices = list(choices)
    if not choices:
        return 0.0
    return float(np.mean([1.0 if c else 0.0 for c in choices]))


def random_rank_baseline(sizes, trials: int, seed: int = 0) -> float:
    """Mean rank% of a uniformly random ranking over the given state counts."""
    rng = np.random.Generator(np.random.PCG64(seed))
    pcts = []
    for _ in range(trials):
        for size in sizes:
            r = int(rng.integers(1, size + 1))
            pcts.append(100.0 * r / size)
    return float(np.mean(pcts))


# -- report containers ------------------------------------------------------------


@dataclass
class CaseResult:
    manifest: str
    rank: int
    total_states: int
    attempts: int
    found: bool
    correct: bool | None = None  # arbitration only

    def payload(self) -> dict:
        doc = {
            "manifest": self.manifest,
            "rank": self.rank,
            "|S|": self.total_states,
            "attempts": self.attempts,
            "found": self.found,
        }
        if self.correct is not None:
            doc["correct"] = self.correct
        return doc


def _aggregates(cases, with_correct: bool = False) -> dict:
    ranks = [c.rank for c in cases]
    sizes = [c.total_states for c in cases]
    agg = {
        "avg_rank": average_rank(ranks),
        "rank_pct": rank_percent(ranks, sizes),
        "hits1": hits_at_k(ranks, 1),
        "hits5": hits_at_k(ranks, 5),
        "completion": completion_rate([c.found for c in cases]),
    }
    if with_correct:
        agg["pct_correct"] = percent_correct([c.correct for c in cases])
    return agg


@dataclass
class RankingReport:
    kind: str
    seed: int
    cases: list
    runtime_seconds: float = 0.0
    random_baseline: dict | None = None

    @property
    def aggregates(self) -> dict:
        return _aggregates(self.cases)

    def payload(self) -> dict:
        doc = {
            "kind": self.kind,
            "seed": self.seed,
            "cases": [c.payload() for c in self.cases],
            "aggregates": self.aggregates,
            "reference_fixtures": REFERENCE_FIXTURES.get(self.kind, {}),
        }
        if self.random_baseline is not None:
            doc["random_baseline"] = self.random_baseline
        return doc


@dataclass
class ArbitrationReport:
    kind: str
    seed: int
    strategies: dict = field(default_factory=dict)  # name -> list[CaseResult]
    runtime_seconds: float = 0.0

    def payload(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "strategies": {
                name: {
                    "cases": [c.payload() for c in cases],
                    "aggregates": _aggregates(cases, with_correct=True),
                }
                for name, cases in sorted(self.strategies.items())
            },
            "reference_fixtures": REFERENCE_FIXTURES["arbitration"],
        }


# -- harness -------------------------------------------------------------------


def _load(manifest) -> ObjectSetManifest:
    return manifest if isinstance(manifest, ObjectSetManifest) else load_manifest(manifest)


def _case_name(manifest: ObjectSetManifest) -> str:
    return manifest.path.stem if manifest.path is not None else manifest.action


def _ground_truth_key(manifest: ObjectSetManifest, kind: str) -> str:
    gt = manifest.ground_truth
    if kind == "construction":
        if gt.construction is None:
            raise ManifestError(f"{_case_name(manifest)}: no construction ground truth")
        return state_key(gt.construction)
    if kind == "substitution":
        if gt.substitute_id is None:
            raise ManifestError(f"{_case_name(manifest)}: no substitute ground truth")
        return gt.substitute_id
    if gt.preferred == "construction":
        return state_key(gt.construction)
    if gt.preferred == "substitute":
        return gt.substitute_id
    raise ManifestError(f"{_case_name(manifest)}: arbitration needs a preferred option")


def _rank_of(ranked, key: str) -> int:
    for state in ranked:
        if state.key == key:
            return state.rank
    raise ManifestError(f"state {key!r} missing from ranking")


def _map_cases(tasks, jobs: int) -> list:
    """Run per-case closures, optionally on a thread pool; order preserved."""
    if jobs <= 1:
        return [task() for task in tasks]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(task) for task in tasks]
        return [f.result() for f in futures]


def run_benchmark(kind: str, manifests, bundle: ModelBundle, strategy: str = "direct",
                  seed: int = 0, esf_samples: int = 6000, random_trials: int = 200,
                  strategies=None, jobs: int = 1, log=None):
    """Run one benchmark over manifests; returns the matching report type."""
    if kind not in BENCHMARK_KINDS:
        raise ValueError(f"unknown benchmark kind {kind!r}")
    say = log or (lambda msg: None)
    manifests = [_load(m) for m in manifests]
    if not manifests:
        raise EmptyCases("no manifests supplied")
    start = time.perf_counter()

    if kind in ("construction", "substitution"):

        def make_task(index, manifest):
            def task():
                say(f"[{kind}] {_case_name(manifest)}")
                objects = resolve_manifest(manifest)
                ctx = bundle.context(manifest.action, esf_samples=esf_samples,
                                     reference_seed=seed * 1000 + index,
                                     attach_seed=seed)
                result = evaluate_query(
                    objects, ctx,
                    include_substitutes=kind == "substitution",
                    include_constructions=kind == "construction",
                )
                ranked = rank(result.states, arbitrate("direct", result.states))
                gt_key = _ground_truth_key(manifest, kind)
                found_state, attempts = validate_loop(ranked, manifest.oracle)
                return CaseResult(
                    manifest=_case_name(manifest),
                    rank=_rank_of(ranked, gt_key),
                    total_states=len(ranked),
                    attempts=attempts,
                    found=found_state is not None,
                )
            return task

        cases = _map_cases([make_task(i, m) for i, m in enumerate(manifests)], jobs)
        report = RankingReport(kind=kind, seed=seed, cases=cases)
        report.random_baseline = {
            "rank_pct": random_rank_baseline([c.total_states for c in cases],
                                             random_trials, seed),
            "trials": random_trials,
        }
        report.runtime_seconds = time.perf_counter() - start
        return report

    # arbitration
    chosen = list(strategies) if strategies else [strategy]
    need_joint = "subs" in chosen

    def make_arb_task(index, manifest):
        def task():
            say(f"[arbitration] {_case_name(manifest)}")
            gt = manifest.ground_truth
            if gt.substitute_id is None or gt.construction is None or gt.preferred is None:
                raise ManifestError(f"{_case_name(manifest)}: incomplete arbitration truth")
            objects = resolve_manifest(manifest)
            ctx = bundle.context(manifest.action, esf_samples=esf_samples,
                                 reference_seed=seed * 1000 + index, attach_seed=seed)
            result = evaluate_query(objects, ctx, joint_for_constructions=need_joint)
            preferred_key = _ground_truth_key(manifest, kind)
            other_key = (gt.substitute_id if gt.preferred == "construction"
                         else state_key(gt.construction))
            case_rng = np.random.Generator(np.random.PCG64(seed * 77 + index))
            per_strategy = {}
            for name in chosen:
                if name == "random":
                    values = list(case_rng.random(len(result.states)))
                else:
                    values = arbitrate(name, result.states)
                ranked = rank(result.states, values)
                by_key = {s.key: s for s in ranked}
                correct = _value_gt(by_key[preferred_key].value, by_key[other_key].value)
                found_state, attempts = validate_loop(ranked, manifest.oracle)
                per_strategy[name] = CaseResult(
                    manifest=_case_name(manifest),
                    rank=_rank_of(ranked, preferred_key),
                    total_states=len(ranked),
                    attempts=attempts,
                    found=found_state is not None,
                    correct=correct,
                )
            return per_strategy
        return task

    results = _map_cases([make_arb_task(i, m) for i, m in enumerate(manifests)], jobs)
    report = ArbitrationReport(kind=kind, seed=seed,
                               strategies={name: [] for name in chosen})
    for per_strategy in results:
        for name, case in per_strategy.items():
            report.strategies[name].append(case)
    report.runtime_seconds = time.perf_counter() - start
    return report


def _value_gt(a, b) -> bool:
    """Strict value comparison with NEG_INF below every float."""
    if a is NEG_INF:
        return False
    if b is NEG_INF:
        return True
    return a > b


# -- thresholds / rendering ----------------------------------------------------


def check_thresholds(report, thresholds: dict) -> list:
    """Compare report aggregates to floors/ceilings; returns violations."""
    if isinstance(report, ArbitrationReport):
        aggs = {f"{name}.{k}": v
                for name, cases in report.strategies.items()
                for k, v in _aggregates(cases, with_correct=True).items()}
    else:
        aggs = report.aggregates
    violations = []
    for key, bound in thresholds.items():
        direction, _, metric = key.partition("_")
        if direction not in ("min", "max") or metric not in aggs:
            violations.append(f"unknown threshold key {key!r}")
            continue
        value = aggs[metric]
        if direction == "min" and value < bound:
            violations.append(f"{metric} = {value:.4f} below floor {bound}")
        if direction == "max" and value > bound:
            violations.append(f"{metric} = {value:.4f} above ceiling {bound}")
    return violations


def _format_table(rows, headers) -> str:
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) if rows else len(str(h))
              for i, h in enumerate(headers)]
    def fmt(row):
        return "  ".join(str(v).ljust(w) for v, w in zip(row, widths)).rstrip()
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(r) for r in rows)
    return "\n".join(lines)


def render_text(report, timestamp: str | None = None) -> str:
    """Human-readable table; the header line is the only timestamped part."""
    head = [f"# generated: {timestamp or time.strftime('%Y-%m-%d %H:%M:%S')}"
            f" (runtime {report.runtime_seconds:.1f}s)"]
    body = []
    if isinstance(report, ArbitrationReport):
        body.append(f"arbitration benchmark, seed {report.seed}")
        for name, cases in sorted(report.strategies.items()):
            agg = _aggregates(cases, with_correct=True)
            body.append("")
            body.append(f"strategy: {name}")
            rows = [[c.manifest, c.rank, c.total_states, c.attempts,
                     "yes" if c.found else "no",
                     "yes" if c.correct else "no"] for c in cases]
            body.append(_format_table(rows, ["case", "rank", "|S|", "attempts",
                                             "found", "correct"]))
            body.append(
                f"aggregates: pct_correct={agg['pct_correct']:.4f} "
                f"avg_rank={agg['avg_rank']:.2f} rank%={agg['rank_pct']:.2f} "
                f"hits@5={agg['hits5']:.4f}"
            )
        ref = REFERENCE_FIXTURES["arbitration"]["pct_correct"]
        body.append("")
        body.append("reference fixtures (original physical-object study; context only): "
                    + " ".join(f"{k}={v:.4f}" for k, v in sorted(ref.items())))
    else:
        agg = report.aggregates
        body.append(f"{report.kind} benchmark, seed {report.seed}")
        rows = [[c.manifest, c.rank, c.total_states, c.attempts,
                 "yes" if c.found else "no"] for c in report.cases]
        body.append(_format_table(rows, ["case", "rank", "|S|", "attempts", "found"]))
        body.append(
            f"aggregates: avg_rank={agg['avg_rank']:.2f} rank%={agg['rank_pct']:.2f} "
            f"hits@1={agg['hits1']:.4f} hits@5={agg['hits5']:.4f} "
            f"completion={agg['completion']:.4f}"
        )
        if report.random_baseline:
            body.append(f"random baseline rank%={report.random_baseline['rank_pct']:.2f} "
                        f"({report.random_baseline['trials']} trials)")
        ref = REFERENCE_FIXTURES.get(report.kind, {})
        if ref:
            body.append("reference fixtures (original physical-object study; "
                        "context only): "
                        + " ".join(f"{k}={v}" for k, v in sorted(ref.items())))
    return "\n".join(head + body) + "\n"


def write_reports(report, out_dir, stem: str) -> tuple:
    """Write <stem>.json (deterministic) and <stem>.txt (timestamped header)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / f"{stem}.json"
    txt_path = out_dir / f"{stem}.txt"
    json_path.write_text(json.dumps(report.payload(), indent=1, sort_keys=True) + "\n")
    txt_path.write_text(render_text(report))
    return json_path, txt_path
