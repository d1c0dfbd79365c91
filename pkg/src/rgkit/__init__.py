"""Desk-scale toolkit for graph-expansion combinatorics and RG analysis.

Submodules:

- ``exact``      exact rational linear algebra, series, and polynomials
- ``guards``     the shared exception vocabulary (guard / invariant / input)
- ``graphs``     quartic Feynman multigraphs and their validation
- ``wick``       pairing enumeration and Gaussian moments
- ``grassmann``  anticommuting generators, Berezin integrals, pfaffians
- ``symanzik``   spanning-tree polynomials and parametric amplitudes
- ``forest``     interpolation (tree/forest) formulas and their weights
- ``detbounds``  Gram and volume bounds for determinants
- ``rgflow``     scale propagators, coupling flows, factorial-growth probes
- ``sectors``    Fermi-surface sector grids, conservation, and counting
- ``hubbard``    sector propagators on the square lattice and decay fits
- ``toy``        multi-color fermion lattice model solved two ways
- ``cli``        the ``rgkit`` command-line front end
"""

from . import (  # noqa: F401
    detbounds,
    exact,
    forest,
    graphs,
    grassmann,
    guards,
    hubbard,
    rgflow,
    sectors,
    symanzik,
    toy,
    wick,
)
from .guards import GuardExceeded, InputError, InvariantViolation  # noqa: F401

__all__ = [
    "detbounds",
    "exact",
    "forest",
    "graphs",
    "grassmann",
    "guards",
    "hubbard",
    "rgflow",
    "sectors",
    "symanzik",
    "toy",
    "wick",
    "GuardExceeded",
    "InputError",
    "InvariantViolation",
]

__version__ = "0.1.0"
