"""Command-line interface.

One executable, seven subcommands covering the full pipeline:

  generate   write synthetic instances (MPS + JSON)
  reorder    apply a named strategy to one instance
  samples    label random cluster orderings by solver timing
  train      fit the pointer network on a labeled dataset
  eval       k-shot inference on instances with a trained checkpoint
  perturb    random-permutation variability study
  bench      strategy comparison benchmark with reports and figures

Config precedence is CLI flag > --config file (JSON or TOML) > built-in
default, and every run dumps its effective config next to its outputs.
Exit code 0 means no Error-status solver runs and no failed stages.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import harness, pointer, report
from .adapters import ERROR, load_adapter
from .generators import gen_random_milp, gen_set_cover
from .model import (
    MilpInstance,
    apply_constraint_permutation,
    dumps_instance,
    loads_instance,
)
from .mps import parse_mps, write_mps
from .seeding import rng_for, substream
from .strategies import STRATEGY_NAMES, resolve_strategy

DEFAULTS = {
    "seed": 0,
    "out": "out",
    "workers": 1,
    "k": 10,
    "epochs": 1000,
    "batch_size": 8,
    "lr": 1e-3,
    "embed_dim": 128,
    "hidden_dim": 128,
    "timeout_s": 600.0,
    "repeats": 3,
    "num_perms": 20,
    "margin_rel": 0.01,
    "shots": 5,
    "num_seeds": 100,
    "adapter": "mock",
    "train_fraction": 0.8,
}


def _load_config_file(path: str) -> dict:
    p = Path(path)
    if p.suffix == ".toml":
        if sys.version_info >= (3, 11):
            import tomllib
        else:
            import tomli as tomllib
        return tomllib.loads(p.read_text())
    return json.loads(p.read_text())


def _effective(args: argparse.Namespace, keys) -> dict:
    """Merge CLI > config file > defaults for the given keys."""
    file_cfg = _load_config_file(args.config) if args.config else {}
    merged = {}
    for key in keys:
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            merged[key] = cli_val
        elif key in file_cfg:
            merged[key] = file_cfg[key]
        else:
            merged[key] = DEFAULTS.get(key)
    return merged


def _dump_effective(cfg: dict, command: str, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {"command": command, **cfg}
    (out_dir / "effective_config.json").write_text(json.dumps(payload, indent=2, sort_keys=True))


def load_instance(path) -> MilpInstance:
    p = Path(path)
    if p.suffix == ".json":
        return loads_instance(p.read_text())
    return parse_mps(p.read_text())


def load_instances(path) -> list[MilpInstance]:
    p = Path(path)
    if not p.is_dir():
        return [load_instance(p)]
    # one instance per stem: a generated pair (x.mps + x.json) loads once,
    # and non-instance JSON (e.g. a dumped effective config) is skipped
    by_stem: dict[str, Path] = {}
    for f in sorted(p.glob("*.mps")):
        by_stem[f.stem] = f
    for f in sorted(p.glob("*.json")):
        if f.stem in by_stem:
            continue
        try:
            if json.loads(f.read_text()).get("version") == "milp-json/1":
                by_stem[f.stem] = f
        except (json.JSONDecodeError, AttributeError):
            continue
    if not by_stem:
        raise FileNotFoundError(f"no .mps or .json instances under {p}")
    return [load_instance(f) for _, f in sorted(by_stem.items())]


def cmd_generate(args) -> int:
    cfg = _effective(args, ["seed", "out"])
    cfg.update(
        kind=args.kind, count=args.count, rows=args.rows, cols=args.cols,
        density=args.density, cost_min=args.cost_min, cost_max=args.cost_max,
        n=args.n, m=args.m, int_fraction=args.int_fraction,
    )
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    for i in range(cfg["count"]):
        inst_seed = substream(cfg["seed"], "generate", i)
        if cfg["kind"] == "set-cover":
            inst = gen_set_cover(
                rows=cfg["rows"], cols=cfg["cols"], density=cfg["density"],
                cost_range=(cfg["cost_min"], cfg["cost_max"]), seed=inst_seed,
            )
            name = f"setcover_{i:03d}"
        else:
            inst = gen_random_milp(
                n=cfg["n"], m=cfg["m"],
                integrality_fraction=cfg["int_fraction"], seed=inst_seed,
            )
            name = f"randmilp_{i:03d}"
        inst = dataclasses.replace(inst, name=name)
        (out / f"{inst.name}.mps").write_text(write_mps(inst))
        (out / f"{inst.name}.json").write_text(dumps_instance(inst))
    _dump_effective(cfg, "generate", out)
    print(f"wrote {cfg['count']} {cfg['kind']} instances to {out}")
    return 0


def cmd_reorder(args) -> int:
    cfg = _effective(args, ["seed", "out", "k"])
    cfg.update(instance=args.instance, strategy=args.strategy, checkpoint=args.checkpoint)
    inst = load_instance(cfg["instance"])
    params = pointer.load_checkpoint(cfg["checkpoint"]) if cfg["checkpoint"] else None
    strategy = resolve_strategy(cfg["strategy"], seed=cfg["seed"], k=cfg["k"], params=params)
    perm = strategy(inst)
    reordered = apply_constraint_permutation(inst, perm)

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{inst.name}__{cfg['strategy']}"
    (out / f"{stem}.mps").write_text(write_mps(reordered))
    (out / f"{stem}.perm.json").write_text(json.dumps(perm.to_json(), sort_keys=True))
    _dump_effective(cfg, "reorder", out)
    print(f"wrote {stem}.mps (+ permutation) to {out}")
    return 0


def cmd_samples(args) -> int:
    keys = ["seed", "out", "k", "num_perms", "repeats", "margin_rel", "adapter", "timeout_s"]
    cfg = _effective(args, keys)
    cfg.update(instances=args.instances)
    adapter = load_adapter(cfg["adapter"], timeout_s=cfg["timeout_s"])
    instances = load_instances(cfg["instances"])

    merged_samples, merged_prov = [], []
    for i, inst in enumerate(instances):
        ds = harness.generate_samples(
            adapter, inst, num_perms=cfg["num_perms"], repeats=cfg["repeats"],
            margin_rel=cfg["margin_rel"], k=cfg["k"],
            seed=substream(cfg["seed"], "samples", inst.name),
        )
        merged_samples.extend(ds.samples)
        merged_prov.extend(ds.provenance)
    dataset = harness.LabeledDataset(
        samples=merged_samples,
        provenance=merged_prov,
        meta={
            "instances": [inst.name for inst in instances],
            "k": cfg["k"], "num_perms": cfg["num_perms"], "repeats": cfg["repeats"],
            "margin_rel": cfg["margin_rel"], "seed": cfg["seed"],
            "solver": getattr(adapter, "name", "unknown"), "timeout_s": cfg["timeout_s"],
        },
    )
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    dataset.save(out / "samples.json")
    _dump_effective(cfg, "samples", out)
    n_pos = sum(1 for s in dataset.samples if s.label == pointer.POSITIVE)
    print(f"labeled {len(dataset.samples)} samples ({n_pos} positive) -> {out / 'samples.json'}")
    return 0


def _split_by_instance(dataset: harness.LabeledDataset, train_fraction: float, seed: int):
    names = sorted({s.instance for s in dataset.samples})
    rng = np.random.default_rng(substream(seed, "split"))
    rng.shuffle(names)
    n_train = max(1, int(round(train_fraction * len(names))))
    train_names = set(names[:n_train])
    train = [s for s in dataset.samples if s.instance in train_names]
    val = [s for s in dataset.samples if s.instance not in train_names]
    return train, val


def cmd_train(args) -> int:
    keys = ["seed", "out", "k", "epochs", "batch_size", "lr", "embed_dim",
            "hidden_dim", "train_fraction"]
    cfg = _effective(args, keys)
    cfg.update(dataset=args.dataset)
    dataset = harness.LabeledDataset.load(cfg["dataset"])
    if not dataset.samples:
        print("error: dataset has no samples", file=sys.stderr)
        return 1

    train_set, val_set = _split_by_instance(dataset, cfg["train_fraction"], cfg["seed"])
    d_in = train_set[0].descriptors.shape[1]
    params = pointer.init_params(
        d_in=d_in, embed_dim=cfg["embed_dim"], hidden_dim=cfg["hidden_dim"],
        seed=substream(cfg["seed"], "init"),
        config={"k": cfg["k"], "epochs": cfg["epochs"], "batch_size": cfg["batch_size"],
                "lr": cfg["lr"], "seed": cfg["seed"]},
    )
    train_cfg = pointer.TrainConfig(
        epochs=cfg["epochs"], batch_size=cfg["batch_size"], lr=cfg["lr"],
        seed=substream(cfg["seed"], "train"),
    )
    trained, log = pointer.train(params, train_set, train_cfg, val_dataset=val_set or None)

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    pointer.save_checkpoint(trained, out / "checkpoint.json")
    with (out / "training_log.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["epoch", "mean_loss", "mean_pos_logprob",
                            "mean_neg_logprob", "val_loss"],
            lineterminator="\n",
        )
        writer.writeheader()
        for entry in log:
            writer.writerow({k: entry.get(k) for k in writer.fieldnames})
    report.fig_training_curve(log, out / "training_curve.png")
    _dump_effective(cfg, "train", out)
    print(f"trained on {len(train_set)} samples ({len(val_set)} held out) -> {out / 'checkpoint.json'}")
    return 0


def cmd_eval(args) -> int:
    keys = ["seed", "out", "k", "shots", "adapter", "timeout_s"]
    cfg = _effective(args, keys)
    cfg.update(instances=args.instances, checkpoint=args.checkpoint)
    adapter = load_adapter(cfg["adapter"], timeout_s=cfg["timeout_s"])
    params = pointer.load_checkpoint(cfg["checkpoint"])
    instances = load_instances(cfg["instances"])

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    all_runs: list[harness.BenchRun] = []
    bests = []
    had_error = False
    for inst in instances:
        best, records = harness.evaluate_kshot(
            adapter, inst, params, shots=cfg["shots"],
            seed=substream(cfg["seed"], "eval", inst.name), k=cfg["k"],
        )
        bests.append({"instance": inst.name, **best.to_json()})
        for shot, rec in enumerate(records):
            all_runs.append(harness.BenchRun(record=rec, repeat=shot))
        had_error = had_error or any(r.status == ERROR for r in records)
    (out / "eval_runs.csv").write_text(report.runs_csv_text(all_runs))
    (out / "eval_best.json").write_text(json.dumps(bests, indent=2, sort_keys=True))
    _dump_effective(cfg, "eval", out)
    print(f"evaluated {len(instances)} instances x {cfg['shots']} shots -> {out}")
    return 1 if had_error else 0


def cmd_perturb(args) -> int:
    keys = ["seed", "out", "num_seeds", "adapter", "timeout_s"]
    cfg = _effective(args, keys)
    cfg.update(instance=args.instance)
    adapter = load_adapter(cfg["adapter"], timeout_s=cfg["timeout_s"])
    inst = load_instance(cfg["instance"])
    result = harness.perturbation_study(
        adapter, inst, num_seeds=cfg["num_seeds"], seed=substream(cfg["seed"], "perturb")
    )
    out = Path(cfg["out"])
    report.write_perturbation_report(result, out)
    _dump_effective(cfg, "perturb", out)
    print(
        f"{inst.name}: mean {result.mean:.3f}s stdev {result.stdev:.3f}s "
        f"cv {100 * result.cv:.1f}% over {result.num_ok} runs ({result.num_error} errors)"
    )
    return 1 if result.num_error else 0


def cmd_bench(args) -> int:
    keys = ["seed", "out", "k", "repeats", "shots", "adapter", "timeout_s", "workers"]
    cfg = _effective(args, keys)
    strategies = args.strategies.split(",") if args.strategies else ["none", "random", "cluster", "cmbr", "cbr-hl", "cbr-lh"]
    cfg.update(instances=args.instances, strategies=strategies, checkpoint=args.checkpoint)
    adapter = load_adapter(cfg["adapter"], timeout_s=cfg["timeout_s"])
    params = pointer.load_checkpoint(cfg["checkpoint"]) if cfg["checkpoint"] else None
    instances = load_instances(cfg["instances"])

    out = Path(cfg["out"])
    runs = harness.run_benchmark(
        adapter, instances, strategies, repeats=cfg["repeats"], out_dir=out,
        seed=cfg["seed"], params=params, shots=cfg["shots"], k=cfg["k"],
        workers=cfg["workers"],
    )
    summary = report.write_benchmark_report(runs, out)
    _dump_effective(cfg, "bench", out)
    print(summary["table"])
    print(f"{summary['n_runs']} runs, {summary['n_errors']} errors -> {out}")
    return 1 if summary["n_errors"] else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="milp-reorder",
        description="Constraint reordering toolkit and solver benchmark harness.",
    )
    parser.add_argument("--config", help="JSON or TOML config file (flag < file < default)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, help="root seed (substreams are derived)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=int, help="parallel solver workers")

    p = sub.add_parser("generate", help="write synthetic instances")
    common(p)
    p.add_argument("--kind", choices=["set-cover", "random"], default="set-cover")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--rows", type=int, default=500)
    p.add_argument("--cols", type=int, default=1000)
    p.add_argument("--density", type=float, default=0.05)
    p.add_argument("--cost-min", type=int, default=1)
    p.add_argument("--cost-max", type=int, default=100)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--m", type=int, default=15)
    p.add_argument("--int-fraction", type=float, default=1.0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("reorder", help="reorder one instance with a named strategy")
    common(p)
    p.add_argument("--instance", required=True)
    p.add_argument("--strategy", required=True, choices=STRATEGY_NAMES)
    p.add_argument("--checkpoint", help="trained checkpoint (clcr only)")
    p.add_argument("--k", type=int, help="number of clusters")
    p.set_defaults(func=cmd_reorder)

    p = sub.add_parser("samples", help="generate labeled training samples")
    common(p)
    p.add_argument("--instances", required=True, help="instance file or directory")
    p.add_argument("--adapter", help="mock | scip | path to adapter config")
    p.add_argument("--num-perms", type=int, dest="num_perms")
    p.add_argument("--repeats", type=int)
    p.add_argument("--margin-rel", type=float, dest="margin_rel")
    p.add_argument("--k", type=int)
    p.add_argument("--timeout-s", type=float, dest="timeout_s")
    p.set_defaults(func=cmd_samples)

    p = sub.add_parser("train", help="train the pointer network")
    common(p)
    p.add_argument("--dataset", required=True, help="samples.json from the samples command")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--lr", type=float)
    p.add_argument("--embed-dim", type=int, dest="embed_dim")
    p.add_argument("--hidden-dim", type=int, dest="hidden_dim")
    p.add_argument("--train-fraction", type=float, dest="train_fraction")
    p.add_argument("--k", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="k-shot inference with a trained checkpoint")
    common(p)
    p.add_argument("--instances", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--shots", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--adapter", help="mock | scip | path to adapter config")
    p.add_argument("--timeout-s", type=float, dest="timeout_s")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("perturb", help="random-permutation variability study")
    common(p)
    p.add_argument("--instance", required=True)
    p.add_argument("--num-seeds", type=int, dest="num_seeds")
    p.add_argument("--adapter", help="mock | scip | path to adapter config")
    p.add_argument("--timeout-s", type=float, dest="timeout_s")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("bench", help="strategy comparison benchmark")
    common(p)
    p.add_argument("--instances", required=True)
    p.add_argument("--strategies", help="comma-separated strategy names")
    p.add_argument("--checkpoint", help="trained checkpoint (needed for clcr)")
    p.add_argument("--repeats", type=int)
    p.add_argument("--shots", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--adapter", help="mock | scip | path to adapter config")
    p.add_argument("--timeout-s", type=float, dest="timeout_s")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
