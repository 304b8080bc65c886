"""Numerical checks of the single-system quantumness criterion.

Submodules: :mod:`opalg` (operator algebra), :mod:`criterion`,
:mod:`hvmodels` (product hidden-variable models), :mod:`optics` (classical
interferometer realization), :mod:`phasespace` (LP feasibility of classical
phase-space models) and :mod:`cli`.
"""

__version__ = "0.1.0"
