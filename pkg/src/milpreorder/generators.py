"""Synthetic instance generators.

Stand-ins for benchmark datasets that cannot be shipped: a set-cover
generator matching the m=500 x n=1000 shape used in the literature, and a
bounded random MILP generator (feasible by construction) for training-data
augmentation. Both are pure functions of their arguments.
"""

from __future__ import annotations

import numpy as np

from .model import EQ, GE, LE, Constraint, MilpInstance


def gen_set_cover(
    rows: int,
    cols: int,
    density: float = 0.05,
    cost_range: tuple[int, int] = (1, 100),
    seed: int = 0,
) -> MilpInstance:
    """Random minimum-cost set cover: for each element i, sum_{j in S_i} x_j >= 1.

    Every row is guaranteed coverable: a row whose Bernoulli(density) draw
    comes up empty is redrawn until it has support.
    """
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must be in (0, 1], got {density}")
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    lo, hi = cost_range
    if lo > hi:
        raise ValueError(f"empty cost range {cost_range}")

    rng = np.random.default_rng(seed)
    costs = rng.integers(lo, hi + 1, size=cols)

    constraints = []
    for i in range(rows):
        support = np.flatnonzero(rng.random(cols) < density)
        while support.size == 0:
            support = np.flatnonzero(rng.random(cols) < density)
        entries = tuple((int(j), 1.0) for j in support)
        constraints.append(Constraint(entries=entries, sense=GE, rhs=1.0, original_index=i))

    return MilpInstance(
        name=f"setcover_r{rows}_c{cols}_s{seed}",
        objective=tuple(float(c) for c in costs),
        rows=tuple(constraints),
        var_bounds=tuple((0.0, 1.0) for _ in range(cols)),
        integrality=frozenset(range(cols)),
    )


def gen_random_milp(
    n: int,
    m: int,
    integrality_fraction: float = 1.0,
    seed: int = 0,
    return_witness: bool = False,
):
    """Random sparse bounded MILP, feasible by construction.

    A random point inside the bound box is drawn first and every rhs is set
    relative to that point's row activity, so the instance always admits it.
    All data is integral, which keeps small all-integer instances inside the
    exact-arithmetic oracle's scope. With return_witness=True the
    construction point is returned alongside the instance.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    if not 0.0 <= integrality_fraction <= 1.0:
        raise ValueError("integrality_fraction must be in [0, 1]")

    rng = np.random.default_rng(seed)
    lows = rng.integers(-3, 1, size=n)
    highs = lows + rng.integers(1, 5, size=n)
    witness = np.array([rng.integers(lows[j], highs[j] + 1) for j in range(n)])

    n_int = int(round(integrality_fraction * n))
    integrality = frozenset(int(j) for j in rng.choice(n, size=n_int, replace=False))

    objective = rng.integers(-5, 6, size=n)

    constraints = []
    max_nnz = min(n, 6)
    for i in range(m):
        nnz = int(rng.integers(1, max_nnz + 1))
        cols = np.sort(rng.choice(n, size=nnz, replace=False))
        coeffs = rng.integers(1, 6, size=nnz) * rng.choice([-1, 1], size=nnz)
        activity = int(np.dot(coeffs, witness[cols]))
        sense = str(rng.choice([LE, GE, EQ], p=[0.45, 0.45, 0.1]))
        slack = int(rng.integers(0, 6))
        if sense == LE:
            rhs = activity + slack
        elif sense == GE:
            rhs = activity - slack
        else:
            rhs = activity
        entries = tuple((int(c), float(v)) for c, v in zip(cols, coeffs))
        constraints.append(Constraint(entries=entries, sense=sense, rhs=float(rhs), original_index=i))

    inst = MilpInstance(
        name=f"randmilp_n{n}_m{m}_s{seed}",
        objective=tuple(float(c) for c in objective),
        rows=tuple(constraints),
        var_bounds=tuple((float(lo), float(hi)) for lo, hi in zip(lows, highs)),
        integrality=integrality,
    )
    if return_witness:
        return inst, tuple(float(v) for v in witness)
    return inst
