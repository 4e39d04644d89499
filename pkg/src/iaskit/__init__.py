"""Invariant ancestry search: causal ancestor discovery from
heterogeneous environments, with exact graph oracles, linear SCM
simulation, invariance testing and an experiment harness."""

from .errors import BudgetExceededError, IasKitError, SamplingError, SingularDesignError
from .estimators import InvariantAncestrySearch, InvariantCausalPrediction
from .graph import (
    ENV,
    Dag,
    UndirectedGraph,
    d_separated,
    dag_from_amat_csv,
    dag_from_edgelist,
    dag_to_amat_csv,
    dag_to_edgelist,
    moral_ancestral_graph,
    relatives,
)
from .invariance import (
    DecisionConfig,
    InvarianceTester,
    InvarianceTestResult,
    invariance_p_value,
    reject_invariance,
    reject_minimal_invariance,
)
from .oracle import (
    MinimalInvariantFamily,
    ias_set,
    icp_set,
    icp_set_bruteforce,
    icp_set_mb,
    is_invariant,
    is_minimally_invariant,
    iter_minimally_invariant_sets,
    markov_boundary,
    minimally_invariant_sets,
)
from .rng import make_rng, substream
from .sampling import GraphSamplerConfig, sample_dag, simulate_max_mi_count
from .scm import Dataset, LinearScm, sample_scm, simulate
from .search import SearchReport, ias_search, icp_search, screen_markov_boundary, search_with_decision
from .varset import VarSet, jaccard

__version__ = "0.1.0"

__all__ = [
    "BudgetExceededError",
    "Dag",
    "Dataset",
    "DecisionConfig",
    "ENV",
    "GraphSamplerConfig",
    "IasKitError",
    "InvarianceTestResult",
    "InvarianceTester",
    "InvariantAncestrySearch",
    "InvariantCausalPrediction",
    "LinearScm",
    "MinimalInvariantFamily",
    "SamplingError",
    "SearchReport",
    "SingularDesignError",
    "UndirectedGraph",
    "VarSet",
    "d_separated",
    "dag_from_amat_csv",
    "dag_from_edgelist",
    "dag_to_amat_csv",
    "dag_to_edgelist",
    "ias_search",
    "ias_set",
    "icp_search",
    "icp_set",
    "icp_set_bruteforce",
    "icp_set_mb",
    "invariance_p_value",
    "is_invariant",
    "is_minimally_invariant",
    "iter_minimally_invariant_sets",
    "jaccard",
    "make_rng",
    "markov_boundary",
    "minimally_invariant_sets",
    "moral_ancestral_graph",
    "reject_invariance",
    "reject_minimal_invariance",
    "relatives",
    "sample_dag",
    "sample_scm",
    "screen_markov_boundary",
    "search_with_decision",
    "simulate",
    "simulate_max_mi_count",
    "substream",
]
