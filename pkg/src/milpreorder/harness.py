"""Experiment harness: sample labeling, k-shot evaluation, perturbation
study, and the benchmark driver.

Everything here runs through an adapter's ``solve`` method, so the whole
module works identically against a real solver or the deterministic mock.
Timing-sensitive procedures (sample generation, perturbation study) run
sequentially; only the benchmark driver fans out across a worker pool.
"""

from __future__ import annotations

import json
import logging
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adapters import ERROR, SolveRecord, tag_record
from .features import cluster_instance
from .model import MilpInstance, Permutation, apply_constraint_permutation
from .pointer import (
    NEGATIVE,
    POSITIVE,
    PointerNetParams,
    TrainingSample,
    sample_permutation,
)
from .seeding import rng_for, substream
from .strategies import expand_cluster_order, resolve_strategy

log = logging.getLogger(__name__)

SAMPLES_FORMAT_VERSION = "clcr-samples/1"


@dataclass
class LabeledDataset:
    """Training samples plus enough provenance to recompute every label."""

    samples: list[TrainingSample]
    provenance: list[dict]
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "version": SAMPLES_FORMAT_VERSION,
            "meta": self.meta,
            "samples": [
                {
                    "instance": s.instance,
                    "descriptors": [[float(v) for v in row] for row in s.descriptors],
                    "perm": list(s.perm.order),
                    "label": s.label,
                    "reward": s.reward,
                    "provenance": prov,
                }
                for s, prov in zip(self.samples, self.provenance)
            ],
        }

    @staticmethod
    def from_json(data: dict) -> "LabeledDataset":
        if data.get("version") != SAMPLES_FORMAT_VERSION:
            raise ValueError(f"unsupported dataset version {data.get('version')!r}")
        samples, provenance = [], []
        for item in data["samples"]:
            samples.append(
                TrainingSample(
                    instance=item["instance"],
                    descriptors=np.array(item["descriptors"], dtype=float),
                    perm=Permutation(tuple(item["perm"])),
                    label=item["label"],
                    reward=float(item["reward"]),
                )
            )
            provenance.append(item["provenance"])
        return LabeledDataset(samples=samples, provenance=provenance, meta=dict(data.get("meta", {})))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True))

    @staticmethod
    def load(path) -> "LabeledDataset":
        return LabeledDataset.from_json(json.loads(Path(path).read_text()))


def _median(values) -> float:
    return float(statistics.median(values))


def _solve_repeats(adapter, inst, seeds, strategy: str, digest: str) -> list[SolveRecord]:
    return [tag_record(adapter.solve(inst, seed=s), strategy, digest) for s in seeds]


def generate_samples(
    adapter,
    inst: MilpInstance,
    num_perms: int = 20,
    repeats: int = 3,
    margin_rel: float = 0.01,
    k: int = 10,
    seed: int = 0,
) -> LabeledDataset:
    """Label random cluster orderings by their timing effect (Eq.-style reward).

    The unpermuted instance's median time over `repeats` runs is the
    baseline; each sampled cluster permutation is solved `repeats` times and
    rewarded with baseline - permuted_median. Rewards beyond the relative
    margin become positive/negative samples; the rest are discarded.
    Any Error-status run discards that permutation with a logged warning.
    """
    if num_perms < 1 or repeats < 1:
        raise ValueError("num_perms and repeats must be >= 1")
    clustering, descriptors = cluster_instance(inst, k_requested=k, seed=substream(seed, "cluster"))
    desc_matrix = np.stack([d.summary for d in descriptors])

    base_seeds = [substream(seed, "baseline", r) for r in range(repeats)]
    base_records = _solve_repeats(adapter, inst, base_seeds, "none", Permutation.identity(inst.num_cons).digest())
    if any(r.status == ERROR for r in base_records):
        raise RuntimeError(f"baseline solve failed on {inst.name}")
    baseline = _median([r.t_total for r in base_records])
    margin = margin_rel * baseline

    samples: list[TrainingSample] = []
    provenance: list[dict] = []
    for p in range(num_perms):
        rng = rng_for(seed, "perm", p)
        cluster_perm = Permutation(tuple(int(i) for i in rng.permutation(clustering.k)))
        expanded = expand_cluster_order(clustering, cluster_perm)
        permuted_inst = apply_constraint_permutation(inst, expanded)
        run_seeds = [substream(seed, "perm", p, r) for r in range(repeats)]
        records = _solve_repeats(adapter, permuted_inst, run_seeds, "sample", expanded.digest())
        if any(r.status == ERROR for r in records):
            log.warning("discarding permutation %d of %s: Error-status run", p, inst.name)
            continue
        permuted = _median([r.t_total for r in records])
        reward = baseline - permuted
        if reward > margin:
            label = POSITIVE
        elif reward < -margin:
            label = NEGATIVE
        else:
            continue
        samples.append(
            TrainingSample(
                instance=inst.name,
                descriptors=desc_matrix,
                perm=cluster_perm,
                label=label,
                reward=reward,
            )
        )
        provenance.append(
            {
                "instance": inst.name,
                "cluster_perm": list(cluster_perm.order),
                "constraint_perm": list(expanded.order),
                "baseline_time": baseline,
                "permuted_time": permuted,
                "repeats": repeats,
                "margin": margin,
            }
        )
    meta = {
        "instance": inst.name,
        "k": clustering.k,
        "num_perms": num_perms,
        "repeats": repeats,
        "margin_rel": margin_rel,
        "seed": seed,
        "solver": getattr(adapter, "name", "unknown"),
        "timeout_s": getattr(adapter, "timeout_s", None),
    }
    return LabeledDataset(samples=samples, provenance=provenance, meta=meta)


def evaluate_kshot(
    adapter,
    inst: MilpInstance,
    params: PointerNetParams,
    shots: int = 5,
    seed: int = 0,
    k: int | None = None,
    perm_sink=None,
) -> tuple[SolveRecord, list[SolveRecord]]:
    """Sample `shots` orderings from the pointer net, solve each once, keep the best.

    Best means minimal t_total, ties broken by fewer LP iterations. If every
    shot errors, the first error record is returned as the result.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if k is None:
        k = int(params.config.get("k", 10))
    clustering, descriptors = cluster_instance(inst, k_requested=k, seed=substream(seed, "cluster"))

    records = []
    for shot in range(shots):
        sample = sample_permutation(params, descriptors, seed=substream(seed, "shot", shot))
        expanded = expand_cluster_order(clustering, sample.perm)
        if perm_sink is not None:
            perm_sink(expanded)
        permuted_inst = apply_constraint_permutation(inst, expanded)
        record = tag_record(
            adapter.solve(permuted_inst, seed=substream(seed, "solve", shot)),
            "clcr", expanded.digest(),
        )
        records.append(record)

    ok = [r for r in records if r.status != ERROR]
    if not ok:
        return records[0], records
    best = min(ok, key=lambda r: (r.t_total, r.n_iter))
    return best, records


@dataclass
class PerturbationResult:
    mean: float
    stdev: float
    cv: float
    num_ok: int
    num_error: int
    records: list[SolveRecord]

    def to_json(self) -> dict:
        return {
            "mean": self.mean,
            "stdev": self.stdev,
            "cv": self.cv,
            "num_ok": self.num_ok,
            "num_error": self.num_error,
        }


def perturbation_study(
    adapter, inst: MilpInstance, num_seeds: int = 100, seed: int = 0
) -> PerturbationResult:
    """Solve under num_seeds random full-constraint permutations, one run each.

    Reports mean, population standard deviation, and coefficient of
    variation of t_total over the non-error runs; error runs are excluded
    from the statistics but counted.
    """
    if num_seeds < 1:
        raise ValueError("num_seeds must be >= 1")
    records = []
    for i in range(num_seeds):
        rng = rng_for(seed, "perturb", i)
        perm = Permutation(tuple(int(j) for j in rng.permutation(inst.num_cons)))
        permuted = apply_constraint_permutation(inst, perm)
        record = tag_record(
            adapter.solve(permuted, seed=substream(seed, "solve", i)),
            "random", perm.digest(),
        )
        records.append(record)
    times = [r.t_total for r in records if r.status != ERROR]
    n_err = len(records) - len(times)
    if not times:
        return PerturbationResult(float("nan"), float("nan"), float("nan"), 0, n_err, records)
    mean = float(np.mean(times))
    stdev = float(np.std(times))  # population: a single run reports 0
    cv = stdev / mean if mean > 0 else 0.0
    return PerturbationResult(mean, stdev, cv, len(times), n_err, records)


@dataclass
class BenchRun:
    """One runs.csv row: the per-repeat outcome of (instance, strategy)."""

    record: SolveRecord
    repeat: int
    shots_budget_s: float | None = None  # total k-shot cost, clcr only


def _bench_one(
    adapter,
    inst: MilpInstance,
    strategy: str,
    repeat: int,
    seed: int,
    params,
    shots: int,
    k: int,
    perm_sink,
) -> BenchRun:
    run_seed = substream(seed, inst.name, strategy, repeat)
    if strategy == "clcr":
        best, all_records = evaluate_kshot(
            adapter, inst, params, shots=shots, seed=run_seed, k=k, perm_sink=perm_sink
        )
        budget = sum(r.t_total for r in all_records if r.t_total is not None)
        return BenchRun(record=best, repeat=repeat, shots_budget_s=budget)

    if strategy == "random":
        perm = resolve_strategy("random", seed=substream(run_seed, "shuffle"))(inst)
    else:
        perm = resolve_strategy(strategy, seed=substream(seed, inst.name, "cluster"), k=k, params=params)(inst)
    perm_sink(perm)
    permuted = apply_constraint_permutation(inst, perm)
    record = tag_record(adapter.solve(permuted, seed=run_seed), strategy, perm.digest())
    return BenchRun(record=record, repeat=repeat)


def run_benchmark(
    adapter,
    instances: list[MilpInstance],
    strategies: list[str],
    repeats: int = 3,
    out_dir=None,
    seed: int = 0,
    params: PointerNetParams | None = None,
    shots: int = 5,
    k: int = 10,
    workers: int = 1,
) -> list[BenchRun]:
    """Solve every (instance, strategy, repeat) cell and persist raw results.

    Deterministic strategies reuse one permutation across repeats (repeats
    vary the solver seed); 'random' redraws per repeat; 'clcr' runs k-shot
    per repeat and keeps the best record. Every applied permutation is
    persisted under out_dir/permutations keyed by its digest so any row can
    be re-run bit-exactly.
    """
    if not instances or not strategies:
        raise ValueError("need at least one instance and one strategy")
    if "clcr" in strategies and params is None:
        raise ValueError("strategy 'clcr' needs trained parameters")

    out_path = Path(out_dir) if out_dir is not None else None
    perm_dir = None
    if out_path is not None:
        perm_dir = out_path / "permutations"
        perm_dir.mkdir(parents=True, exist_ok=True)

    def perm_sink(perm: Permutation):
        if perm_dir is not None:
            target = perm_dir / f"{perm.digest()}.json"
            if not target.exists():
                target.write_text(json.dumps(perm.to_json(), sort_keys=True))

    tasks = [
        (inst, strategy, repeat)
        for inst in instances
        for strategy in strategies
        for repeat in range(repeats)
    ]

    def run(task):
        inst, strategy, repeat = task
        return _bench_one(adapter, inst, strategy, repeat, seed, params, shots, k, perm_sink)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(run, tasks))
    else:
        runs = [run(task) for task in tasks]

    if out_path is not None:
        records_dir = out_path / "records"
        records_dir.mkdir(parents=True, exist_ok=True)
        for run_item in runs:
            rec = run_item.record
            name = f"{rec.instance}__{rec.strategy}__{run_item.repeat}.json"
            payload = rec.to_json()
            payload["repeat"] = run_item.repeat
            payload["shots_budget_s"] = run_item.shots_budget_s
            (records_dir / name).write_text(json.dumps(payload, sort_keys=True))
    return runs
