"""Point-process simulation and factor-graph construction on Euclidean
and hyperbolic windows.

The package simulates finite point configurations (Poisson samples, a
perturbed lattice, a chain-enriched adversarial process) and builds
deterministic, isometry-equivariant graphs over them: leader-election
trees from clump hierarchies, depth-first orderings, minimal spanning
forests, and two perfect-matching schemes (clump-cascade greedy and
iterated mutually-nearest-neighbor), together with verifiers and
mass-transport balance checks.
"""

__version__ = "0.1.0"

from .degeneracy import Degeneracies
from .metric import BOX, DISK, TORUS, MetricWindow
from .pointgen import (
    NonEquidistanceReport,
    PointConfiguration,
    check_non_equidistant,
    derive_seeds,
    enrich_descending_chains,
    perturbed_lattice,
    sample_poisson,
)
from .clumping import (
    ClumpHierarchy,
    ClumpingParams,
    Cutter,
    build_hierarchy,
    enclosure_stats,
    find_seeds,
)
from .forest import (
    FactorGraph,
    Matching,
    build_one_ended_tree,
    clump_greedy_matching,
    dfs_order,
    elect_leader,
    minimal_spanning_forest,
    msf_cycle_oracle,
)
from .mnnmatch import (
    ChainReport,
    MnnResult,
    find_descending_chains,
    iterated_mnn_matching,
    mutually_closest_pairs,
    nearest_neighbor_digraph,
)
from .analysis import (
    GraphReport,
    MatchingReport,
    TransportBalance,
    edge_length_tail,
    mass_transport_balance,
    verify_graph,
    verify_matching,
)

__all__ = [
    "__version__",
    "BOX",
    "TORUS",
    "DISK",
    "MetricWindow",
    "Degeneracies",
    "PointConfiguration",
    "NonEquidistanceReport",
    "sample_poisson",
    "perturbed_lattice",
    "enrich_descending_chains",
    "check_non_equidistant",
    "derive_seeds",
    "ClumpingParams",
    "Cutter",
    "ClumpHierarchy",
    "find_seeds",
    "build_hierarchy",
    "enclosure_stats",
    "FactorGraph",
    "Matching",
    "elect_leader",
    "build_one_ended_tree",
    "dfs_order",
    "minimal_spanning_forest",
    "msf_cycle_oracle",
    "clump_greedy_matching",
    "MnnResult",
    "ChainReport",
    "mutually_closest_pairs",
    "iterated_mnn_matching",
    "nearest_neighbor_digraph",
    "find_descending_chains",
    "GraphReport",
    "MatchingReport",
    "TransportBalance",
    "verify_graph",
    "verify_matching",
    "mass_transport_balance",
    "edge_length_tail",
]
