"""Pseudoinverses of self-adjoint operators through finite sections.

``A_n^dagger`` converges strongly to a bounded ``A^dagger`` exactly when
``sup_n ||A_n^dagger||`` is finite. This package computes the sections, their
pseudoinverses and the stability trace, and checks the supporting
convergence statements numerically.
"""

__version__ = "0.1.0"
