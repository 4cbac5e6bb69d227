"""Hypergraph learning and strong-faithfulness volumes for binary tables."""

__version__ = "0.1.0"

from .fit import FitConfig, FitResult, deviance, ipf_fit, kl_divergence
from .hypergraph import (
    ChainDescriptor,
    Hypergraph,
    ascending_class,
    chain_descriptor,
    descending_class,
    is_decomposable,
    normalize_generating_class,
)
from .inference import (
    HyperedgeTestResult,
    SearchTrace,
    StrongFaithfulnessReport,
    backward_select,
    contrast_vector,
    gamma_variance,
    lambda_star,
    strong_faithfulness_check,
    wald_test,
)
from .loglin import (
    CondOddsRatioSpec,
    InteractionVector,
    cond_odds_ratio,
    conditional_independence_check,
    design_matrix,
    faithful_hypergraph,
    interaction_vector,
    log_cond_odds_ratio,
)
from .table import (
    CountTable,
    JointDistribution,
    cell_of_index,
    from_counts,
    index_of_cell,
    marginal,
)
from .volumes import (
    AssociationMeasure,
    VolumeEstimate,
    nu1_closed,
    nu_h_monte_carlo,
    projected_unfaithful_proportion,
    two_by_two_unfaithful_proportion,
    unfaithful_proportion_decomposable,
    volume_lower_bound,
)
