"""Certified spectral rounding toolkit.

Rounds fractional solutions to integral ones and checks every claimed
spectral inequality on the output.
"""

from __future__ import annotations

from .concentration import (
    SelfAdjustingParams,
    UrnSwapChain,
    check_cost_drift,
    freedman_bound,
    self_adjusting_lower_bound,
    self_adjusting_upper_bound,
    simulate_and_check,
)
from .errors import *  # noqa: F401,F403
from .expdesign import DesignProblem, round_design, solve_relaxation
from .graph import Graph, effective_resistance, laplacian, read_edge_list
from .instance import LinearRows, VectorInstance
from .instances import (
    complete_graph_example,
    random_isotropic_instance,
    tight_lower_bound_example,
)
from .kernels import BACKEND, available_backends
from .netdesign import NetworkDesignInstance, round_network, verify_spectral_implications
from .regret import ActionMatrix, compute_action_matrix
from .rounding import RoundingCertificate, exact_round, randomized_swap
from .signing import derandomized_signing, verify_two_sided
from .sparsify import SparsifierCertificate, greedy_additive_sparsify, verify_additive

__version__ = "0.1.0"

__all__ = [
    "ActionMatrix",
    "BACKEND",
    "DesignProblem",
    "Graph",
    "LinearRows",
    "NetworkDesignInstance",
    "RoundingCertificate",
    "SelfAdjustingParams",
    "SparsifierCertificate",
    "UrnSwapChain",
    "VectorInstance",
    "available_backends",
    "check_cost_drift",
    "complete_graph_example",
    "compute_action_matrix",
    "derandomized_signing",
    "effective_resistance",
    "exact_round",
    "freedman_bound",
    "greedy_additive_sparsify",
    "laplacian",
    "random_isotropic_instance",
    "randomized_swap",
    "read_edge_list",
    "round_design",
    "round_network",
    "self_adjusting_lower_bound",
    "self_adjusting_upper_bound",
    "simulate_and_check",
    "solve_relaxation",
    "tight_lower_bound_example",
    "verify_additive",
    "verify_spectral_implications",
    "verify_two_sided",
]
