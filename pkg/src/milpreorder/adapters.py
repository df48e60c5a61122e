"""External-solver adapters and run records.

A SolverAdapter shells out to a MILP solver executable, writes the instance
as MPS into an isolated working directory, and parses the four benchmark
metrics (total time, nodes, LP iterations, presolve time) out of the log
with per-solver regex rules. A deterministic MockAdapter generates
synthetic metrics from a seeded hash of the instance's row order so the
whole harness can be exercised, byte-stably, with no solver installed.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import shutil
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from .model import MilpInstance
from .mps import write_mps

OPTIMAL = "optimal"
TIME_LIMIT = "time_limit"
INFEASIBLE = "infeasible"
ERROR = "error"

DEFAULT_TIMEOUT_S = 600.0
TIMEOUT_SLACK_S = 5.0

# solve() scrubs the child environment down to this allowlist
ENV_ALLOWLIST = ("PATH", "HOME", "LANG", "LC_ALL", "TMPDIR", "TEMP", "TMP", "SYSTEMROOT")

METRIC_NAMES = ("t_total", "n_nodes", "n_iter", "t_presolve")


@dataclass(frozen=True)
class SolveRecord:
    """Metrics of one solver run; Error runs carry None metrics, never zeros."""

    instance: str
    strategy: str
    perm_digest: str
    t_total: float | None
    n_nodes: int | None
    n_iter: int | None
    t_presolve: float | None
    status: str
    seed: int
    solver: str
    timeout_s: float
    wall_s: float | None = None
    log_tail: str | None = None

    def to_json(self) -> dict:
        return {
            "instance": self.instance,
            "strategy": self.strategy,
            "perm_digest": self.perm_digest,
            "t_total": self.t_total,
            "n_nodes": self.n_nodes,
            "n_iter": self.n_iter,
            "t_presolve": self.t_presolve,
            "status": self.status,
            "seed": self.seed,
            "solver": self.solver,
            "timeout_s": self.timeout_s,
            "wall_s": self.wall_s,
            "log_tail": self.log_tail,
        }

    @staticmethod
    def from_json(data: dict) -> "SolveRecord":
        return SolveRecord(**data)


def tag_record(record: SolveRecord, strategy: str, perm_digest: str) -> SolveRecord:
    """Fill in the caller-side provenance fields on an adapter's raw record."""
    return replace(record, strategy=strategy, perm_digest=perm_digest)


@dataclass(frozen=True)
class MetricRule:
    """One metric's extraction rule: regex with a single capture group.

    combine picks what to do with multiple matches: 'first', 'last', or
    'sum' (e.g. LP iteration counts reported per LP type are summed).
    """

    pattern: str
    combine: str = "first"
    kind: str = "float"  # or "int"

    def extract(self, text: str):
        matches = re.findall(self.pattern, text, flags=re.MULTILINE)
        if not matches:
            return None
        if self.combine == "first":
            raw = [matches[0]]
        elif self.combine == "last":
            raw = [matches[-1]]
        elif self.combine == "sum":
            raw = matches
        else:
            raise ValueError(f"unknown combine mode {self.combine!r}")
        total = sum(float(v) for v in raw)
        return int(total) if self.kind == "int" else total


def parse_solver_log(text: str, rules: dict[str, MetricRule]) -> dict:
    return {name: rule.extract(text) for name, rule in rules.items()}


def classify_status(text: str, status_patterns: dict[str, str]) -> str | None:
    for status, pattern in status_patterns.items():
        if re.search(pattern, text, flags=re.MULTILINE):
            return status
    return None


@dataclass
class SolverAdapter:
    """Config-driven subprocess adapter around a MILP solver executable."""

    executable: str
    args: list[str]
    metrics: dict[str, MetricRule]
    status_patterns: dict[str, str] = field(default_factory=dict)
    timeout_s: float = DEFAULT_TIMEOUT_S
    name: str = "external"

    def solve(self, inst: MilpInstance, seed: int = 0) -> SolveRecord:
        """Run the solver on inst in an isolated directory and parse its log."""
        blank = dict.fromkeys(METRIC_NAMES)

        def error(log: str) -> SolveRecord:
            return SolveRecord(
                instance=inst.name, strategy="", perm_digest="",
                **blank, status=ERROR, seed=seed, solver=self.name,
                timeout_s=self.timeout_s, wall_s=None, log_tail=log[-2000:],
            )

        if shutil.which(self.executable) is None and not Path(self.executable).exists():
            return error(f"solver executable not found: {self.executable}")

        workdir = tempfile.mkdtemp(prefix="milpreorder-run-")
        try:
            mps_path = Path(workdir) / "instance.mps"
            mps_path.write_text(write_mps(inst))
            argv = [self.executable] + [
                a.format(instance=str(mps_path), timelimit=self.timeout_s, seed=seed)
                for a in self.args
            ]
            env = {k: os.environ[k] for k in ENV_ALLOWLIST if k in os.environ}
            t0 = time.perf_counter()
            try:
                proc = subprocess.run(
                    argv, cwd=workdir, env=env, capture_output=True, text=True,
                    timeout=self.timeout_s + 4 * TIMEOUT_SLACK_S,
                )
            except subprocess.TimeoutExpired as exc:
                out = (exc.stdout or b"")
                log = out.decode() if isinstance(out, bytes) else str(out)
                return error(f"hard timeout after {self.timeout_s}s\n{log}")
            wall = time.perf_counter() - t0
            log = proc.stdout + ("\n" + proc.stderr if proc.stderr else "")
            if proc.returncode != 0:
                return error(f"exit code {proc.returncode}\n{log}")

            parsed = parse_solver_log(log, self.metrics)
            if any(parsed.get(name) is None for name in METRIC_NAMES):
                missing = [n for n in METRIC_NAMES if parsed.get(n) is None]
                return error(f"metrics {missing} not found in log\n{log}")
            status = classify_status(log, self.status_patterns) or OPTIMAL
            return SolveRecord(
                instance=inst.name, strategy="", perm_digest="",
                t_total=float(parsed["t_total"]),
                n_nodes=int(parsed["n_nodes"]),
                n_iter=int(parsed["n_iter"]),
                t_presolve=float(parsed["t_presolve"]),
                status=status, seed=seed, solver=self.name,
                timeout_s=self.timeout_s, wall_s=wall,
            )
        finally:
            shutil.rmtree(workdir, ignore_errors=True)


class MockAdapter:
    """Deterministic drop-in adapter with synthetic metrics and no subprocess.

    Metrics are a pure function of (instance name, row order, seed), so any
    mock-driven experiment is reproducible byte-for-byte while still being
    sensitive to reorderings the way a real solver would be.
    """

    def __init__(self, timeout_s: float = DEFAULT_TIMEOUT_S, time_range=(0.5, 30.0), name="mock"):
        self.timeout_s = float(timeout_s)
        self.time_range = (float(time_range[0]), float(time_range[1]))
        self.name = name

    def solve(self, inst: MilpInstance, seed: int = 0) -> SolveRecord:
        digest = hashlib.sha256(
            f"{inst.name}|{inst.row_order_digest()}|{seed}".encode()
        ).digest()

        def frac(i: int) -> float:
            return int.from_bytes(digest[4 * i:4 * i + 4], "big") / 2**32

        lo, hi = self.time_range
        t_total = lo + frac(0) * (hi - lo)
        status = OPTIMAL
        if t_total > self.timeout_s:
            t_total, status = self.timeout_s, TIME_LIMIT
        t_presolve = t_total * 0.2 * frac(1)
        n_nodes = 1 + int(frac(2) * 5000)
        n_iter = 100 + int(frac(3) * 100000)
        return SolveRecord(
            instance=inst.name, strategy="", perm_digest="",
            t_total=round(t_total, 6), n_nodes=n_nodes, n_iter=n_iter,
            t_presolve=round(t_presolve, 6), status=status, seed=seed,
            solver=self.name, timeout_s=self.timeout_s, wall_s=round(t_total, 6),
        )


def scip_adapter(executable: str = "scip", timeout_s: float = DEFAULT_TIMEOUT_S) -> SolverAdapter:
    """Preset for SCIP's interactive-shell statistics output."""
    return SolverAdapter(
        executable=executable,
        args=[
            "-c",
            "read {instance} set limits time {timelimit} "
            "set randomization randomseedshift {seed} optimize display statistics quit",
        ],
        metrics={
            "t_total": MetricRule(r"^\s*solving\s*:\s*([0-9.]+)"),
            "t_presolve": MetricRule(r"^\s*presolving\s*:\s*([0-9.]+)\s"),
            "n_nodes": MetricRule(r"^\s*nodes(?:\s+\(total\))?\s*:\s*([0-9]+)", kind="int"),
            "n_iter": MetricRule(
                r"^\s*(?:primal|dual|barrier) LP\s*:\s*[0-9.]+\s+[0-9]+\s+([0-9]+)",
                combine="sum", kind="int",
            ),
        },
        status_patterns={
            OPTIMAL: r"problem is solved \[optimal solution found\]",
            TIME_LIMIT: r"solving was interrupted \[time limit reached\]",
            INFEASIBLE: r"problem is solved \[infeasible\]",
        },
        timeout_s=timeout_s,
        name="scip",
    )


def adapter_from_config(config: dict) -> SolverAdapter:
    metrics = {
        name: MetricRule(
            pattern=spec["pattern"],
            combine=spec.get("combine", "first"),
            kind=spec.get("kind", "float"),
        )
        for name, spec in config["metrics"].items()
    }
    missing = [n for n in METRIC_NAMES if n not in metrics]
    if missing:
        raise ValueError(f"adapter config missing metric rules: {missing}")
    return SolverAdapter(
        executable=config["executable"],
        args=list(config["args"]),
        metrics=metrics,
        status_patterns=dict(config.get("status_patterns", {})),
        timeout_s=float(config.get("timeout_s", DEFAULT_TIMEOUT_S)),
        name=config.get("name", "external"),
    )


def load_adapter(spec, timeout_s: float | None = None):
    """Resolve an adapter from 'mock', 'scip', or a JSON/TOML config path."""
    if spec == "mock":
        return MockAdapter(timeout_s=timeout_s or DEFAULT_TIMEOUT_S)
    if spec == "scip":
        adapter = scip_adapter()
    else:
        path = Path(spec)
        if not path.exists():
            raise FileNotFoundError(f"adapter config not found: {spec}")
        if path.suffix == ".toml":
            if sys.version_info >= (3, 11):
                import tomllib
            else:
                import tomli as tomllib
            config = tomllib.loads(path.read_text())
        else:
            config = json.loads(path.read_text())
        adapter = adapter_from_config(config)
    if timeout_s is not None:
        adapter.timeout_s = float(timeout_s)
    return adapter
