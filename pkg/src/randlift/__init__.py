"""Random lifts of graphs and Markov chains, and the spectra of their new eigenvalues."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegreeZeroUnsupported,
    EigenFailure,
    InvalidEdge,
    InvalidParams,
    InvalidStationary,
    NotReversible,
    NotStochastic,
    ParseError,
    RandLiftError,
    SpectrumContainmentViolated,
)
from .graph import (
    DegreeProfile,
    Graph,
    adjacency,
    complete_graph,
    cycle_graph,
    degrees,
    disjoint_cliques,
    erdos_renyi,
    generate,
    make_graph,
    normalized_laplacian,
    parse_graph,
    read_graph,
    write_graph,
)
from .lift import (
    LiftedGraph,
    LiftSpec,
    Matching,
    flatten_index,
    identity_lift,
    iterated_lift,
    permutation_matrix,
    realize,
    sample_cyclic_lift,
    sample_uniform_lift,
)
from .linalg import Spectrum, kron, multiset_diff, operator_norm, projector_pi, sym_eigenvalues
from .markov import (
    ReversibleChain,
    c_param,
    chain_bound,
    chain_new_eigenvalues,
    lift_chain,
    make_chain,
    symmetrize,
)
from .spectral import (
    BoundReport,
    DeviationReport,
    adjacency_bound,
    adjacency_deviation_norm,
    analyze,
    corollary_bounds,
    freedman_tail,
    laplacian_bound,
    laplacian_deviation_norm,
    new_adjacency_eigenvalues,
    new_laplacian_eigenvalues,
    variance_sum_adjacency,
)
