"""Exact and asymptotic degree-profile computations for random unlabelled rooted trees."""

__version__ = "0.1.0"

from .constants import ConstantsSet, compute_constants
from .enumeration import count_trees, enumerate_trees_exhaustive, tree_series
from .profile import exact_distribution, finite_covariance
from .sampling import MonteCarloSpec, TreeSampler, monte_carlo
from .series import MarkedSeries, TruncatedSeries

__all__ = [
    "ConstantsSet",
    "MarkedSeries",
    "MonteCarloSpec",
    "TreeSampler",
    "TruncatedSeries",
    "compute_constants",
    "count_trees",
    "enumerate_trees_exhaustive",
    "exact_distribution",
    "finite_covariance",
    "monte_carlo",
    "tree_series",
]
