"""Constraint reordering strategies.

Six baselines plus the learned pointer-network ordering, all exposed as
total functions from instance to constraint Permutation. Sorting strategies
are stable with an original-position tie-break so reruns are reproducible.
CLI-addressable names: none, random, cluster, cmbr, cbr-hl, cbr-lh, clcr.
"""

from __future__ import annotations

import numpy as np

from .features import Clustering, cluster_instance
from .model import MilpInstance, Permutation

HIGH_TO_LOW = "hl"
LOW_TO_HIGH = "lh"

STRATEGY_NAMES = ("none", "random", "cluster", "cmbr", "cbr-hl", "cbr-lh", "clcr")


def expand_cluster_order(clustering: Clustering, cluster_perm: Permutation) -> Permutation:
    """Concatenate members lists in cluster_perm order, each kept ascending."""
    if len(cluster_perm) != clustering.k:
        raise ValueError(
            f"cluster permutation length {len(cluster_perm)} != k={clustering.k}"
        )
    order = []
    for c in cluster_perm.order:
        order.extend(clustering.members[c])
    return Permutation(tuple(order))


def strategy_none(inst: MilpInstance) -> Permutation:
    return Permutation.identity(inst.num_cons)


def strategy_random(inst: MilpInstance, seed: int = 0) -> Permutation:
    """Fisher-Yates shuffle of the row positions, deterministic per seed."""
    rng = np.random.default_rng(seed)
    order = list(range(inst.num_cons))
    for i in range(len(order) - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        order[i], order[j] = order[j], order[i]
    return Permutation(tuple(order))


def strategy_cluster_order(inst: MilpInstance, k: int = 10, seed: int = 0) -> Permutation:
    """Group rows by cluster, clusters kept in ascending id order."""
    clustering, _ = cluster_instance(inst, k_requested=k, seed=seed)
    return expand_cluster_order(clustering, Permutation.identity(clustering.k))


def strategy_cmbr(inst: MilpInstance) -> Permutation:
    """Coefficient-magnitude order: descending row L1 norm."""
    keys = [sum(abs(v) for _, v in row.entries) for row in inst.rows]
    order = sorted(range(inst.num_cons), key=lambda i: (-keys[i], i))
    return Permutation(tuple(order))


def strategy_cbr(inst: MilpInstance, direction: str) -> Permutation:
    """Complexity order by row nnz: 'hl' puts dense rows first, 'lh' sparse first."""
    if direction not in (HIGH_TO_LOW, LOW_TO_HIGH):
        raise ValueError(f"direction must be '{HIGH_TO_LOW}' or '{LOW_TO_HIGH}'")
    sign = -1 if direction == HIGH_TO_LOW else 1
    order = sorted(range(inst.num_cons), key=lambda i: (sign * inst.rows[i].nnz, i))
    return Permutation(tuple(order))


def strategy_clcr(inst: MilpInstance, params, k: int | None = None, seed: int = 0) -> Permutation:
    """Greedy pointer-network ordering over the instance's clusters."""
    from .pointer import greedy_decode  # local import: avoid a hard cycle

    if k is None:
        k = int(params.config.get("k", 10))
    clustering, descriptors = cluster_instance(inst, k_requested=k, seed=seed)
    cluster_perm = greedy_decode(params, descriptors)
    return expand_cluster_order(clustering, cluster_perm)


def resolve_strategy(name: str, *, seed: int = 0, k: int = 10, params=None):
    """Return a Callable[[MilpInstance], Permutation] for a CLI strategy name."""
    if name == "none":
        return strategy_none
    if name == "random":
        return lambda inst: strategy_random(inst, seed=seed)
    if name == "cluster":
        return lambda inst: strategy_cluster_order(inst, k=k, seed=seed)
    if name == "cmbr":
        return strategy_cmbr
    if name == "cbr-hl":
        return lambda inst: strategy_cbr(inst, HIGH_TO_LOW)
    if name == "cbr-lh":
        return lambda inst: strategy_cbr(inst, LOW_TO_HIGH)
    if name == "clcr":
        if params is None:
            raise ValueError("strategy 'clcr' needs a trained checkpoint")
        return lambda inst: strategy_clcr(inst, params, k=k, seed=seed)
    raise ValueError(f"unknown strategy {name!r}; known: {', '.join(STRATEGY_NAMES)}")
