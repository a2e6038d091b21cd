"""fringelab: fringe-subtree statistics of random trees with given degrees.

Submodules
----------
tree_core      trees, walks, fringe counting, enumeration oracles
sampling       exact-uniform and size-conditioned samplers
exact_moments  arbitrary-precision factorial moments of fringe counts
asymptotics    limit means/covariances, tilted equivalents, additive tolls
mc_harness     seeded Monte Carlo confrontation of the limit laws
cli            the ``fringelab`` command-line entry point
"""

from .distributions import OffspringDistribution, WeightSequence
from .sampling import DegreeSequence, Seed
from .tree_core import DegreeStatistic, LukasiewiczPath, PlaneTree, UnorderedKey

__all__ = [
    "DegreeSequence",
    "DegreeStatistic",
    "LukasiewiczPath",
    "OffspringDistribution",
    "PlaneTree",
    "Seed",
    "UnorderedKey",
    "WeightSequence",
]

__version__ = "0.1.0"
