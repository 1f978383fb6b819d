"""Metric structures on invariant measures of full shifts.

Besicovitch pseudometric along subsequences, block-OT and coupling bounds for
the joining metric (rho-bar, with d-bar as its Hamming instance), empirical
joinings of orbit tuples, and a seeded experiment harness.
"""

from .kernels import BACKEND
from .symbolic import (
    Alphabet,
    Point,
    Subsequence,
    cantor_distance,
    finite_point,
    hamming_cost,
    mechanical_point,
    periodic_point,
    shift,
)
from .measures import (
    Bernoulli,
    BlockDistribution,
    EmpiricalBlock,
    Markov,
    Periodic,
    bernoulli,
    block_distribution,
    de_bruijn,
    empirical_measure,
    entropy_estimate,
    periodic,
    symmetric_markov,
    weakstar_distance,
)
from .orbit import (
    CouplingRule,
    besicovitch,
    besicovitch_density,
    quasigeneric_check,
    sample_coupled,
    sample_generic,
)
from .transport import dbar_lower, dbar_upper, fano_dbar_lower, ot_block, rho_bar_bounds
from .joinings import empirical_joining, factor_condition, invariance_defect

__version__ = "0.1.0"
