"""Staggered-grid leapfrog wave solvers with exactly conserved discrete energies.

The package is organized around one idea: a first-order system split across
two staggered time levels, advanced by a leapfrog update whose two quadratic
invariants are preserved to rounding whenever the spatial operators are
discrete adjoints of each other and the time step satisfies a CFL-type bound.

Modules
-------
oscillator : harmonic oscillator, the scalar calibration case
core       : the generic staggered-pair integrator and its invariants
wave1d     : 1D wave equation (constant and variable materials) on a pinned interval
mimetic3d  : 3D staggered grids, mimetic difference operators, inner products
wave3d     : 3D scalar wave and Maxwell (Yee) cavity solvers
wave2d     : 2D staggered grids, operators, and the 2D scalar wave
positivity : mass-conserving, positivity-preserving transport and diffusion
cli        : experiment runner exposing everything as subcommands
"""

__version__ = "0.1.0"
