"""Exact lattices, horospherical coordinates and nondivergence checks in SL_n."""

from .exact_lattice import ExteriorVector, LatticeModule, canonicalize, covolume, covolume_squared
from .goodness import GoodnessParams, cgood_check
from .matrix_groups import Cocharacter
from .nondivergence import SubgroupSpec, delta, km_escape_experiment, stable_subspaces
from .parabolic import StandardParabolic, horospherical_decompose
from .prop42 import prop42_epsilon, prop42_verify, xi_chain

__all__ = [
    "Cocharacter",
    "ExteriorVector",
    "GoodnessParams",
    "LatticeModule",
    "StandardParabolic",
    "SubgroupSpec",
    "canonicalize",
    "cgood_check",
    "covolume",
    "covolume_squared",
    "delta",
    "horospherical_decompose",
    "km_escape_experiment",
    "prop42_epsilon",
    "prop42_verify",
    "stable_subspaces",
    "xi_chain",
]
