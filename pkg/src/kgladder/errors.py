"""Exception hierarchy.

Physics-domain problems (wrong coupling regime, r <= 0) derive from
:class:`DomainError`; numerical breakdowns derive from
:class:`NumericalError`.  The CLI maps the two families to exit codes 2 and 3.
"""


class DomainError(ValueError):
    """Input outside the physical domain of an operation."""


class CouplingRegimeError(DomainError):
    """Spectrum requested for a coupling with alpha <= 1/4."""


class NumericalError(RuntimeError):
    """Base class for numerical failures."""


class PoleError(DomainError):
    """Gamma function evaluated at a non-positive integer."""


class SpecialFunctionOverflow(NumericalError, OverflowError):
    pass


class SeriesNonConvergence(NumericalError):
    pass


class CancellationWarning(RuntimeWarning):
    """Connection formula loses many digits (order close to zero)."""


class RootFindError(NumericalError):
    pass


class BoundaryZero(RootFindError):
    """|f| too small on a contour; the caller should move the contour."""


class NonConvergence(RootFindError):
    pass


class MaxDepth(RootFindError):
    pass


class LadderGap(NumericalError):
    """An annulus of the ladder search held no zero, or more than one."""


class IllConditioned(NumericalError):
    pass


class DegenerateFit(ValueError):
    pass


class IntegratorOverflow(NumericalError, OverflowError):
    pass


class StepUnderflow(NumericalError):
    pass


class Instability(NumericalError):
    """Time evolution blew up.  ``onset_time`` is the first time the bound was exceeded."""

    def __init__(self, message, onset_time=None):
        super().__init__(message)
        self.onset_time = onset_time
