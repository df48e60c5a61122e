"""Exhaustive optimality oracle for small pure-integer instances.

Enumerates every integer point in the box defined by the variable bounds
and returns the exact minimum. Used to certify that row reorderings leave
the optimum untouched. When every datum (coefficients, rhs, objective,
bounds) is integral the comparison is exact in int64 arithmetic; otherwise
a 1e-9 absolute tolerance applies to feasibility checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import EQ, GE, LE, MilpInstance

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED_OR_TOO_LARGE = "unbounded-or-too-large"

DEFAULT_ENUMERATION_CAP = 1_000_000
FEAS_TOL = 1e-9
_CHUNK = 65536


class UnsupportedInstanceError(ValueError):
    """Instance falls outside the oracle's scope (continuous variables)."""


@dataclass(frozen=True)
class OracleResult:
    status: str
    objective: float | None = None
    argmin: tuple[float, ...] | None = None


def _is_integral(x: float) -> bool:
    return math.isfinite(x) and x == math.floor(x)


def _all_integral(inst: MilpInstance) -> bool:
    if not all(_is_integral(c) for c in inst.objective):
        return False
    for row in inst.rows:
        if not _is_integral(row.rhs):
            return False
        if not all(_is_integral(v) for _, v in row.entries):
            return False
    return all(_is_integral(lo) and _is_integral(hi) for lo, hi in inst.var_bounds)


def brute_force_oracle(
    inst: MilpInstance, enumeration_cap: int = DEFAULT_ENUMERATION_CAP
) -> OracleResult:
    """Exact minimum of c^T x over all feasible integer points in the bound box."""
    n, m = inst.num_vars, inst.num_cons
    if len(inst.integrality) != n:
        missing = sorted(set(range(n)) - inst.integrality)
        raise UnsupportedInstanceError(
            f"oracle requires all-integer variables; continuous: {missing}"
        )

    sizes = []
    for lo, hi in inst.var_bounds:
        if not (math.isfinite(lo) and math.isfinite(hi)):
            return OracleResult(status=UNBOUNDED_OR_TOO_LARGE)
        sizes.append(int(math.floor(hi)) - int(math.ceil(lo)) + 1)
    if any(s <= 0 for s in sizes):
        return OracleResult(status=INFEASIBLE)
    total = math.prod(sizes) if n > 0 else 1
    if total > enumeration_cap:
        return OracleResult(status=UNBOUNDED_OR_TOO_LARGE)

    exact = _all_integral(inst)
    dtype = np.int64 if exact else np.float64
    lows = np.array([int(math.ceil(lo)) for lo, _ in inst.var_bounds], dtype=np.int64)

    c = np.array(inst.objective, dtype=dtype)
    dense = np.zeros((m, n), dtype=dtype)
    rhs = np.zeros(m, dtype=dtype)
    senses = []
    for i, row in enumerate(inst.rows):
        for col, v in row.entries:
            dense[i, col] = v
        rhs[i] = row.rhs
        senses.append(row.sense)
    senses = np.array(senses)

    radix = np.array(sizes, dtype=np.int64)
    # mixed-radix decode, variable 0 most significant: deterministic argmin order
    place = np.ones(n, dtype=np.int64)
    for j in range(n - 2, -1, -1):
        place[j] = place[j + 1] * radix[j + 1]

    best_obj = None
    best_point = None
    found = False

    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        if n == 0:
            pts = np.zeros((len(idx), 0), dtype=np.int64)
        else:
            pts = (idx[:, None] // place[None, :]) % radix[None, :] + lows[None, :]
        pts = pts.astype(dtype)

        feasible = np.ones(len(idx), dtype=bool)
        if m > 0:
            act = pts @ dense.T
            for i in range(m):
                if exact:
                    if senses[i] == LE:
                        ok = act[:, i] <= rhs[i]
                    elif senses[i] == GE:
                        ok = act[:, i] >= rhs[i]
                    else:
                        ok = act[:, i] == rhs[i]
                else:
                    if senses[i] == LE:
                        ok = act[:, i] <= rhs[i] + FEAS_TOL
                    elif senses[i] == GE:
                        ok = act[:, i] >= rhs[i] - FEAS_TOL
                    else:
                        ok = np.abs(act[:, i] - rhs[i]) <= FEAS_TOL
                feasible &= ok
        if not feasible.any():
            continue

        objs = pts @ c
        objs_feas = objs[feasible]
        k = int(np.argmin(objs_feas))
        cand_obj = objs_feas[k]
        if not found or cand_obj < best_obj:
            found = True
            best_obj = cand_obj
            best_point = pts[feasible][k]

    if not found:
        return OracleResult(status=INFEASIBLE)
    return OracleResult(
        status=OPTIMAL,
        objective=float(best_obj),
        argmin=tuple(float(v) for v in best_point),
    )
