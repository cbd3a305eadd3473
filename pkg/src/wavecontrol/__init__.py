"""Numerical laboratory for boundary control of the wave equation.

Control-to-state and observation operators over a shared truncated eigenbasis
(exact discrete adjoints), metric filling geometry, mollifier regularization,
and regularized least-squares control synthesis on desk-scale grids.
"""

__version__ = "0.1.0"
