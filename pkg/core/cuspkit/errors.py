"""Exception hierarchy shared by every cuspkit module.

The CLI maps these onto exit codes: ``NonphysicalPotential`` -> 3, any other
``CuspkitError`` (in particular ``NumericalFailure``) -> 4.
"""


class CuspkitError(Exception):
    """Base class for all errors raised by cuspkit."""


class DomainError(CuspkitError, ValueError):
    """An argument lies outside the validated domain of an operation."""


class OverflowRangeError(DomainError):
    """The result would overflow double precision (e.g. I_nu(y) for y > 700)."""


class SeriesNonConvergence(CuspkitError, ArithmeticError):
    """A power series did not reach its tolerance within the allowed number of terms."""


class OutOfTableRange(CuspkitError, ValueError):
    """A tabulated potential was evaluated outside its table."""


class ClassificationAmbiguous(CuspkitError, ValueError):
    """The leading power of a tabulated potential could not be fitted reliably."""


class NonphysicalPotential(CuspkitError, ValueError):
    """The potential falls to the center (aVdW) or is a too attractive 1/r^2 (npCD)."""


class CoincidentParticles(CuspkitError, ValueError):
    """Two particles of a configuration occupy the same point."""


class NumericalFailure(CuspkitError, RuntimeError):
    """Base class for failures of a numerical procedure."""


class StepFailure(NumericalFailure):
    """The ODE integrator could not reach the requested tolerance."""


class StiffnessLimit(NumericalFailure):
    """The starting radius could not be pushed close enough to the origin."""


class EvaluationAtNode(NumericalFailure):
    """Both u and u' vanish at the requested radius."""


class ExtrapolationDiverged(NumericalFailure):
    """Richardson extrapolation towards r -> 0 produced an unusable value."""


class NodeProximity(NumericalFailure):
    """Every requested radius sits too close to a node of u or u'."""


class PoleStraddle(NumericalFailure):
    """Energy grid refinement could not isolate the poles of L or R."""


class CompanionUnavailable(NumericalFailure):
    """The numerically constructed irregular companion failed its Wronskian check."""


class DifferentiationFailure(NumericalFailure):
    """A potential could not be differentiated at the requested radius."""


class FitDegenerate(NumericalFailure):
    """A log-log fit was attempted on residuals below the floating point floor."""
