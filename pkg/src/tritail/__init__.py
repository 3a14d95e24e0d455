"""Upper-tail tools for triangle counts in G(n,p): bounds, decompositions,
matching colorings, tail estimators and localization checks."""
from .bounds import (
    BoundParams,
    BoundResult,
    binomial_coefficient_bound,
    binomial_tail_bound,
    concentration_bound,
    degree_tail_bound,
    excess_ratio_constant,
    matching_tail_bound,
    min_edges_for_triangles,
    rate_function,
    symmetric_matrix_inequality,
    theorem_envelope,
)
from .classify import Classification, Decomposition, classify, decompose
from .estimate import (
    TailEstimate,
    clique_planting_lower_bound,
    exact_tail,
    plain_mc_tail,
    tilted_mc_tail,
)
from .graph import (
    Graph,
    GnpParams,
    count_triangles,
    count_triangles_naive,
    degree_sum,
    edge_triangle_counts,
    enumerate_graphs,
    sample_gnp,
)
from .harness import LocalizedFamily, build_localized, check_conditions, check_independence
from .matchings import (
    EventFlags,
    Matching,
    MatchingColoring,
    detect_events,
    greedy_matching_coloring,
    t_sum,
)
from .rng import SeededRng

__version__ = "0.1.0"
