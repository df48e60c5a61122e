"""Constraint featurization, K-means clustering, and pooled cluster summaries.

Each row is described by its densified coefficients with the rhs appended.
Rows are grouped with Lloyd's algorithm (k-means++ seeding) on those raw
vectors, then each cluster is summarized by a fixed-length statistical
descriptor so clusters from instances of any size share one input space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .model import EQ, LE, MilpInstance

CLUSTER_FORMAT_VERSION = "clcr-cluster/1"
DESCRIPTOR_DIM = 12
DEFAULT_NUM_CLUSTERS = 10


@dataclass(frozen=True, eq=False)
class ConstraintFeature:
    """Raw per-row feature: densified coefficients with rhs appended (length n+1)."""

    raw: np.ndarray
    owner: int  # original_index of the source row


@dataclass(eq=False)
class Clustering:
    k: int
    assignment: tuple[int, ...]          # row position -> cluster id
    centroids: np.ndarray                # (k, n+1)
    inertia: float
    members: tuple[tuple[int, ...], ...]  # per cluster, row positions ascending
    inertia_history: tuple[float, ...] = ()

    def to_json(self) -> dict:
        return {
            "version": CLUSTER_FORMAT_VERSION,
            "k": self.k,
            "assignment": list(self.assignment),
            "centroids": [list(map(float, c)) for c in self.centroids],
            "inertia": float(self.inertia),
            "members": [list(ms) for ms in self.members],
            "inertia_history": list(self.inertia_history),
        }

    @staticmethod
    def from_json(data: dict) -> "Clustering":
        if data.get("version") != CLUSTER_FORMAT_VERSION:
            raise ValueError(f"unsupported clustering version {data.get('version')!r}")
        return Clustering(
            k=int(data["k"]),
            assignment=tuple(int(a) for a in data["assignment"]),
            centroids=np.array(data["centroids"], dtype=float),
            inertia=float(data["inertia"]),
            members=tuple(tuple(int(i) for i in ms) for ms in data["members"]),
            inertia_history=tuple(float(v) for v in data.get("inertia_history", [])),
        )


@dataclass(eq=False)
class ClusterDescriptor:
    """Fixed-length cluster summary fed to the pointer network.

    summary entries:
      0 cluster size / m            6 mean of per-row mean |coeff|
      1 mean nnz per row / n        7 mean rhs
      2 mean of per-row mean coeff  8 std of rhs
      3 std of per-row mean coeff   9 fraction of LE rows
      4 min coeff over all entries 10 fraction of EQ rows
      5 max coeff over all entries 11 fraction of entries on integer vars

    mean_raw is the plain average of the member rows' raw feature vectors;
    its length varies with n, so it is exposed for within-instance analysis
    only and never fed to the network.
    """

    summary: np.ndarray
    mean_raw: np.ndarray

    def to_json(self) -> dict:
        return {
            "summary": [float(v) for v in self.summary],
            "mean_raw": [float(v) for v in self.mean_raw],
        }


def extract_features(inst: MilpInstance) -> list[ConstraintFeature]:
    """One feature per row in current row order; absent columns densify to 0."""
    n = inst.num_vars
    out = []
    for row in inst.rows:
        raw = np.zeros(n + 1)
        for c, v in row.entries:
            raw[c] = v
        raw[n] = row.rhs
        out.append(ConstraintFeature(raw=raw, owner=row.original_index))
    return out


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    m = X.shape[0]
    centroids = np.empty((k, X.shape[1]))
    first = int(rng.integers(m))
    centroids[0] = X[first]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total > 0:
            probs = d2 / total
        else:
            probs = np.full(m, 1.0 / m)  # all points coincide with a centroid
        idx = int(rng.choice(m, p=probs))
        centroids[i] = X[idx]
        d2 = np.minimum(d2, ((X - centroids[i]) ** 2).sum(axis=1))
    return centroids


def kmeans(
    features: list[ConstraintFeature],
    k: int,
    seed: int = 0,
    max_iters: int = 100,
    standardize: bool = False,
) -> Clustering:
    """Lloyd's algorithm with k-means++ seeding, deterministic under seed.

    Runs on features sorted by owner so the outcome does not depend on the
    order they are supplied in; assignments are reported against the supplied
    positions. Empty clusters are repaired by stealing the point farthest
    from its assigned centroid (among clusters that keep a member, so the
    repair never creates a new empty cluster). Nearest-centroid ties go to
    the lowest cluster id. Cluster ids are relabeled so cluster 0 holds the
    earliest supplied row, which makes singleton clusterings read as the
    identity.
    """
    m = len(features)
    if not 1 <= k <= m:
        raise ValueError(
            f"k={k} outside [1, m={m}]; clamp k to min(k, m) before calling "
            "(cluster_instance does this)"
        )
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")

    X_supply = np.stack([f.raw for f in features]).astype(float)
    owners = np.array([f.owner for f in features])
    order = np.argsort(owners, kind="stable")
    X = X_supply[order]

    if standardize:
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        sd[sd == 0] = 1.0
        X = (X - mu) / sd

    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(X, k, rng)

    assign = None
    history = []
    for _ in range(max_iters):
        d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assign = np.argmin(d2, axis=1)  # argmin takes lowest id on ties

        counts = np.bincount(new_assign, minlength=k)
        if (counts == 0).any():
            point_d2 = d2[np.arange(m), new_assign].copy()
            for c in np.flatnonzero(counts == 0):
                # farthest point whose cluster keeps at least one member
                cand = np.where(counts[new_assign] > 1, point_d2, -np.inf)
                donor = int(np.argmax(cand))
                counts[new_assign[donor]] -= 1
                new_assign[donor] = c
                counts[c] += 1
                point_d2[donor] = -np.inf  # not stealable twice

        for c in range(k):
            centroids[c] = X[new_assign == c].mean(axis=0)

        inertia = float(((X - centroids[new_assign]) ** 2).sum())
        history.append(inertia)
        if assign is not None and np.array_equal(assign, new_assign):
            break
        assign = new_assign

    # back to supplied positions
    assign_supply = np.empty(m, dtype=int)
    assign_supply[order] = assign

    # relabel so cluster ids follow each cluster's earliest supplied position
    first_pos = [int(np.flatnonzero(assign_supply == c)[0]) for c in range(k)]
    relabel = np.empty(k, dtype=int)
    relabel[np.argsort(first_pos, kind="stable")] = np.arange(k)
    old_of_new = np.argsort(relabel, kind="stable")
    assign_supply = relabel[assign_supply]
    centroids = centroids[old_of_new]

    members = tuple(
        tuple(int(i) for i in np.flatnonzero(assign_supply == c)) for c in range(k)
    )
    return Clustering(
        k=k,
        assignment=tuple(int(a) for a in assign_supply),
        centroids=centroids,
        inertia=history[-1],
        members=members,
        inertia_history=tuple(history),
    )


def pool_cluster(inst: MilpInstance, members) -> ClusterDescriptor:
    """Summarize the given member rows into the fixed-length descriptor."""
    members = list(members)
    if not members:
        raise ValueError("cannot pool an empty cluster")
    n, m = inst.num_vars, inst.num_cons

    rows = [inst.rows[i] for i in members]
    nnzs = np.array([row.nnz for row in rows], dtype=float)
    rhs = np.array([row.rhs for row in rows])
    row_means = np.array(
        [np.mean([v for _, v in row.entries]) if row.entries else 0.0 for row in rows]
    )
    row_abs_means = np.array(
        [np.mean([abs(v) for _, v in row.entries]) if row.entries else 0.0 for row in rows]
    )
    all_coeffs = [v for row in rows for _, v in row.entries]
    total_entries = len(all_coeffs)
    int_entries = sum(
        1 for row in rows for c, _ in row.entries if c in inst.integrality
    )

    summary = np.array(
        [
            len(rows) / m,
            (nnzs.mean() / n) if n > 0 else 0.0,
            row_means.mean(),
            row_means.std(),
            min(all_coeffs) if all_coeffs else 0.0,
            max(all_coeffs) if all_coeffs else 0.0,
            row_abs_means.mean(),
            rhs.mean(),
            rhs.std(),
            np.mean([row.sense == LE for row in rows]),
            np.mean([row.sense == EQ for row in rows]),
            (int_entries / total_entries) if total_entries else 0.0,
        ]
    )

    raws = np.zeros((len(rows), n + 1))
    for r, row in enumerate(rows):
        for c, v in row.entries:
            raws[r, c] = v
        raws[r, n] = row.rhs
    return ClusterDescriptor(summary=summary, mean_raw=raws.mean(axis=0))


def cluster_instance(
    inst: MilpInstance,
    k_requested: int = DEFAULT_NUM_CLUSTERS,
    seed: int = 0,
    standardize: bool = False,
) -> tuple[Clustering, list[ClusterDescriptor]]:
    """Cluster an instance's rows with k = min(k_requested, m) and summarize."""
    m = inst.num_cons
    if m < 1:
        raise ValueError("instance has no constraints to cluster")
    k = min(k_requested, m)
    clustering = kmeans(extract_features(inst), k, seed=seed, standardize=standardize)
    descriptors = [pool_cluster(inst, ms) for ms in clustering.members]
    return clustering, descriptors


def clustering_report_json(clustering: Clustering, descriptors) -> str:
    data = clustering.to_json()
    data["descriptors"] = [d.to_json() for d in descriptors]
    return json.dumps(data, indent=2, sort_keys=True)
