"""Exception hierarchy shared by every module of the package."""


class CFError(Exception):
    """Base class for all package errors."""


# poly
class ZeroConstantTerm(CFError, ZeroDivisionError):
    """Series division by a series whose constant term vanishes."""


class BranchPointAtOrigin(CFError, ValueError):
    """Square root of a series whose constant term vanishes."""


# lax
class DegreeOverflow(CFError):
    """The lambda -> z substitution left a negative power of z."""


# spectral
class DegenerateCurve(CFError):
    """The branch polynomial has a repeated root."""


class BranchAtOrigin(CFError):
    """z = 0 is a branch point of the spectral curve (Tr A(0) = 0)."""


class ZeroDenominator(CFError):
    """The chosen Weyl formula has a vanishing denominator at z = 0."""


# flow
class StepFailure(CFError):
    """The adaptive step size underflowed."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


# collision
class ZeroTotalMass(CFError):
    """Collision reduction needs a nonzero total mass."""


class WrongDimension(CFError, ValueError):
    """Operation only defined for a particular particle count."""


# inverse
class InsufficientMoments(CFError, ValueError):
    """Not enough moments for the requested Hankel block."""


class SingularHankel(CFError):
    """A Hankel minor needed by the continued fraction vanishes."""


class NegativeLength(CFError):
    """Reconstruction produced a non-positive string interval."""


class OutOfRange(CFError):
    """A string position lies outside the open interval (-1/2nu, 1/2nu)."""


class InconsistentData(CFError):
    """Redundant parts of the inversion data disagree (corrupted input)."""
