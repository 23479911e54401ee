"""Exception hierarchy.

Two families: :class:`ValidationError` for bad inputs (CLI exit 2) and
:class:`NumericalFailure` for numerical breakdown (CLI exit 3).
"""


class KinklabError(Exception):
    pass


class ValidationError(KinklabError, ValueError):
    pass


class NumericalFailure(KinklabError, RuntimeError):
    pass


class UnsupportedDimension(ValidationError):
    pass


class GridTooSmall(ValidationError):
    pass


class BranchCut(ValidationError):
    pass


class DecayTooSlow(ValidationError):
    pass


class NonConvergence(NumericalFailure):
    """Adaptive quadrature exhausted its subdivision budget."""


class NoConvergence(NumericalFailure):
    """Iterative eigensolver stalled."""


class StiffBlowup(NumericalFailure):
    pass


class DegenerateSolutions(NumericalFailure):
    pass


class AtPole(NumericalFailure):
    pass


class NoRoot(NumericalFailure):
    pass


class BlowUp(NumericalFailure):
    """Nonlinear simulation left the perturbative regime."""
