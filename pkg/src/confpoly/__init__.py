"""Confidence polytopes for quantum state tomography."""

__version__ = "0.1.0"

from .clopper_pearson import binary_kl, binomial_tail, exact_cp_upper, solve_delta
from .errors import ConfpolyError
from .fom import fidelity, fom_interval, mle_estimate, negativity, trace_distance
from .geometry import bounding_box, chebyshev_center, hit_and_run_sample, interior_point
from .polytope import (
    ConfidencePolytope, EpsilonSplit, Facet, build_polytope, combine_polytopes, contains,
    group_facets, grouping_scheme, split_epsilon,
)
from .quantum import Povm, embed_povm, embed_state, gellmann_basis, unembed_state

__all__ = [
    "ConfidencePolytope", "ConfpolyError", "EpsilonSplit", "Facet", "Povm",
    "binary_kl", "binomial_tail", "bounding_box", "build_polytope", "chebyshev_center",
    "combine_polytopes", "contains", "embed_povm", "embed_state", "exact_cp_upper",
    "fidelity", "fom_interval", "gellmann_basis", "group_facets", "grouping_scheme",
    "hit_and_run_sample",
    "interior_point", "mle_estimate", "negativity", "solve_delta", "split_epsilon",
    "trace_distance", "unembed_state",
]
