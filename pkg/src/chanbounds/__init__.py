"""Semidefinite-programming bounds on how many uses of a quantum channel are
needed to tell two channels apart or to estimate a channel parameter."""
from .channels import (ChannelFamily, KrausChannel, builtin_channel, builtin_family,
                       noisy_rotation_family, parse_channel, parse_family, random_channel)
from .discrimination import (INFINITE, DiscriminationInstance, QueryBoundResult, Trivial,
                             binary_search_adaptive, binary_search_parallel, error_prob_floor,
                             n_max_upper, quadratic_min_n, query_lower_closed_form,
                             trivial_case_check)
from .errors import ChanboundsError, InvalidInput, NoFiniteN, SolverFailure
from .estimation import (EstimationInstance, classify_scaling, est_query_lower,
                         fisher_minimax_floor, minimax_error_floor)
from .metrics import (BoundReport, ChannelPair, adaptive_bures_bound, adaptive_fisher_bound,
                      bures_sq_channels, fisher_sql_denominator, parallel_bures_bound,
                      parallel_fisher_bound, root_fidelity_channels, sld_fisher_channel)

__version__ = "0.1.0"

__all__ = [
    "BoundReport", "ChanboundsError", "ChannelFamily", "ChannelPair", "DiscriminationInstance",
    "EstimationInstance", "INFINITE", "InvalidInput", "KrausChannel", "NoFiniteN",
    "QueryBoundResult", "SolverFailure", "Trivial", "adaptive_bures_bound",
    "adaptive_fisher_bound", "binary_search_adaptive", "binary_search_parallel",
    "builtin_channel", "builtin_family", "bures_sq_channels", "classify_scaling",
    "error_prob_floor", "est_query_lower", "fisher_minimax_floor", "fisher_sql_denominator",
    "minimax_error_floor", "n_max_upper", "noisy_rotation_family", "parallel_bures_bound",
    "parallel_fisher_bound", "parse_channel", "parse_family", "quadratic_min_n",
    "query_lower_closed_form", "random_channel", "root_fidelity_channels",
    "sld_fisher_channel", "trivial_case_check",
]
