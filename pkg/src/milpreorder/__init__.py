"""Constraint reordering toolkit for mixed-integer linear programs.

Reorders MILP constraint rows without touching their contents, so the
feasible set and optimum are preserved while external-solver behavior
(presolve, branch-and-bound, LP iterations) can change. Ships six baseline
ordering heuristics, a contrastively trained pointer network over
constraint clusters, and a benchmark harness that measures orderings
against any log-parseable solver.
"""

from .adapters import MockAdapter, SolveRecord, SolverAdapter, load_adapter
from .features import ClusterDescriptor, Clustering, cluster_instance, extract_features, kmeans, pool_cluster
from .generators import gen_random_milp, gen_set_cover
from .harness import LabeledDataset, evaluate_kshot, generate_samples, perturbation_study, run_benchmark
from .model import (
    Constraint,
    MilpInstance,
    Permutation,
    apply_constraint_permutation,
    instance_from_json,
    instance_to_json,
)
from .mps import MpsParseError, parse_mps, write_mps
from .oracle import OracleResult, brute_force_oracle
from .pointer import (
    PointerNetParams,
    TrainConfig,
    TrainingSample,
    contrastive_loss,
    forward_score,
    greedy_decode,
    init_params,
    load_checkpoint,
    sample_permutation,
    save_checkpoint,
    train,
)
from .strategies import expand_cluster_order, resolve_strategy

__version__ = "0.1.0"
