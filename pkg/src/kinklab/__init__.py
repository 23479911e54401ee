"""Kink stability toolkit for the Cahn-Hilliard equation.

Linear analysis (spectrum, homogeneous solutions, resolvent, semigroup
kernel) of the operator obtained by linearizing about the tanh kink, plus a
pseudo-spectral simulator for the nonlinear relaxation of a perturbed planar
front in three dimensions.
"""

__version__ = "0.1.0"
