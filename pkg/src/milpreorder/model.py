"""Core MILP instance model.

Represents min c^T x subject to sparse linear rows (LE/GE/EQ), variable
bounds, and an integrality set. Instances are immutable after construction
and safe to share across threads. Row order is the one degree of freedom
this toolkit manipulates; each row carries a stable ``original_index``
provenance tag that survives any reordering.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

LE = "LE"
GE = "GE"
EQ = "EQ"
SENSES = (LE, GE, EQ)

JSON_FORMAT_VERSION = "milp-json/1"

NEG_INF = float("-inf")
POS_INF = float("inf")


@dataclass(frozen=True)
class Constraint:
    """One sparse row: sum(coeff * x[col]) <sense> rhs."""

    entries: tuple[tuple[int, float], ...]
    sense: str
    rhs: float
    original_index: int

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"unknown sense {self.sense!r}, expected one of {SENSES}")
        ordered = tuple(sorted(((int(c), float(v)) for c, v in self.entries)))
        cols = [c for c, _ in ordered]
        if len(set(cols)) != len(cols):
            raise ValueError(f"duplicate column indices in row {self.original_index}")
        for c, v in ordered:
            if c < 0:
                raise ValueError(f"negative column index {c} in row {self.original_index}")
            if not math.isfinite(v) or v == 0.0:
                raise ValueError(
                    f"coefficient for column {c} in row {self.original_index} "
                    f"must be finite and nonzero, got {v!r}"
                )
        object.__setattr__(self, "entries", ordered)
        object.__setattr__(self, "rhs", float(self.rhs))
        if not math.isfinite(self.rhs):
            raise ValueError(f"rhs of row {self.original_index} must be finite")

    @property
    def nnz(self) -> int:
        return len(self.entries)

    def columns(self) -> tuple[int, ...]:
        return tuple(c for c, _ in self.entries)

    def activity(self, x) -> float:
        """Evaluate the row's left-hand side at point x (indexable by column)."""
        return sum(v * x[c] for c, v in self.entries)


@dataclass(frozen=True)
class Permutation:
    """Bijection on {0..L-1}; order[i] names the source index placed at slot i."""

    order: tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(i) for i in self.order)
        if sorted(order) != list(range(len(order))):
            raise ValueError("order is not a bijection on {0..L-1}")
        object.__setattr__(self, "order", order)

    def __len__(self) -> int:
        return len(self.order)

    @staticmethod
    def identity(length: int) -> "Permutation":
        return Permutation(tuple(range(length)))

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.order))

    def compose(self, inner: "Permutation") -> "Permutation":
        """Return p∘q with (p∘q).order[i] = p.order[q.order[i]] (self is p)."""
        if len(self) != len(inner):
            raise ValueError("cannot compose permutations of different lengths")
        return Permutation(tuple(self.order[j] for j in inner.order))

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.order)
        for slot, src in enumerate(self.order):
            inv[src] = slot
        return Permutation(tuple(inv))

    def digest(self) -> str:
        payload = json.dumps(list(self.order), separators=(",", ":"))
        return hashlib.sha256(payload.encode("ascii")).hexdigest()

    def to_json(self) -> dict:
        return {"order": list(self.order), "digest": self.digest()}


@dataclass(frozen=True)
class MilpInstance:
    """Immutable MILP: min c^T x s.t. rows, bounds, integrality.

    The objective sense is always minimize; instances read from maximize
    sources carry negated coefficients and ``flipped_from_max=True`` so
    reported objectives can be restored to the original sign.
    """

    name: str
    objective: tuple[float, ...]
    rows: tuple[Constraint, ...]
    var_bounds: tuple[tuple[float, float], ...]
    integrality: frozenset[int] = field(default_factory=frozenset)
    flipped_from_max: bool = False

    def __post_init__(self):
        objective = tuple(float(c) for c in self.objective)
        object.__setattr__(self, "objective", objective)
        object.__setattr__(self, "rows", tuple(self.rows))
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.var_bounds)
        object.__setattr__(self, "var_bounds", bounds)
        object.__setattr__(self, "integrality", frozenset(int(j) for j in self.integrality))
        n = len(objective)
        if len(bounds) != n:
            raise ValueError(f"expected {n} bound pairs, got {len(bounds)}")
        for j, (lo, hi) in enumerate(bounds):
            if lo > hi:
                raise ValueError(f"variable {j} has lower bound {lo} > upper bound {hi}")
        for j in self.integrality:
            if not 0 <= j < n:
                raise ValueError(f"integrality index {j} out of range for n={n}")
        for row in self.rows:
            for c, _ in row.entries:
                if c >= n:
                    raise ValueError(
                        f"row {row.original_index} references column {c} but n={n}"
                    )

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    @property
    def num_cons(self) -> int:
        return len(self.rows)

    def original_order(self) -> tuple[int, ...]:
        return tuple(row.original_index for row in self.rows)

    def row_order_digest(self) -> str:
        """Hash of the current row arrangement, used to key solver runs."""
        payload = json.dumps([self.name, list(self.original_order())], separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def apply_constraint_permutation(inst: MilpInstance, p: Permutation) -> MilpInstance:
    """Reorder rows so output row i is input row p.order[i]; contents untouched."""
    if len(p) != inst.num_cons:
        raise ValueError(f"permutation length {len(p)} != m={inst.num_cons}")
    return MilpInstance(
        name=inst.name,
        objective=inst.objective,
        rows=tuple(inst.rows[j] for j in p.order),
        var_bounds=inst.var_bounds,
        integrality=inst.integrality,
        flipped_from_max=inst.flipped_from_max,
    )


def _bound_to_json(value: float):
    if value == NEG_INF or value == POS_INF:
        return None
    return value


def _bound_from_json(value, which: str) -> float:
    if value is None:
        return NEG_INF if which == "lo" else POS_INF
    return float(value)


def instance_to_json(inst: MilpInstance) -> dict:
    return {
        "version": JSON_FORMAT_VERSION,
        "name": inst.name,
        "n": inst.num_vars,
        "m": inst.num_cons,
        "objective": list(inst.objective),
        "rows": [
            {
                "entries": [[c, v] for c, v in row.entries],
                "sense": row.sense,
                "rhs": row.rhs,
                "original_index": row.original_index,
            }
            for row in inst.rows
        ],
        "bounds": [[_bound_to_json(lo), _bound_to_json(hi)] for lo, hi in inst.var_bounds],
        "integrality": sorted(inst.integrality),
        "flipped_from_max": inst.flipped_from_max,
    }


def instance_from_json(data: dict) -> MilpInstance:
    version = data.get("version")
    if version != JSON_FORMAT_VERSION:
        raise ValueError(f"unsupported instance format version {version!r}")
    rows = tuple(
        Constraint(
            entries=tuple((int(c), float(v)) for c, v in row["entries"]),
            sense=row["sense"],
            rhs=float(row["rhs"]),
            original_index=int(row["original_index"]),
        )
        for row in data["rows"]
    )
    inst = MilpInstance(
        name=data["name"],
        objective=tuple(float(c) for c in data["objective"]),
        rows=rows,
        var_bounds=tuple(
            (_bound_from_json(lo, "lo"), _bound_from_json(hi, "hi")) for lo, hi in data["bounds"]
        ),
        integrality=frozenset(int(j) for j in data["integrality"]),
        flipped_from_max=bool(data.get("flipped_from_max", False)),
    )
    if inst.num_vars != data["n"] or inst.num_cons != data["m"]:
        raise ValueError("instance JSON n/m fields disagree with contents")
    return inst


def dumps_instance(inst: MilpInstance) -> str:
    return json.dumps(instance_to_json(inst), indent=2, sort_keys=True)


def loads_instance(text: str) -> MilpInstance:
    return instance_from_json(json.loads(text))
