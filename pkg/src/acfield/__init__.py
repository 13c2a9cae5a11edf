"""acfield: a 1D screened-Poisson field model of an atom chain, its
Cauchy-Born continuum limit, and two atomistic/continuum coupling schemes.

The package is organised bottom-up:

    lattice      chain geometry, discrete norms
    density      bump profiles and chain densities
    field        periodic/Dirichlet field solves (P1 FEM) + closed-form oracles
    energy       field energies, forces, boundary-data calculus
    cauchy_born  per-cell continuum energy and fields
    ac           the two coupling methods, consistency & stability checks
    minimize     damped-Newton equilibration, minimizer comparison
    harness      experiment specs, CSV results, `acfield` CLI
"""

__version__ = "0.1.0"

from . import lattice, density, field, energy, cauchy_born, ac, minimize, harness  # noqa: F401
