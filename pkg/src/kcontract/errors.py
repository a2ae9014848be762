"""Exception hierarchy.

Every error raised by the toolkit derives from :class:`KContractError`.  The
``exit_code`` attribute is used by the command-line front end: 3 for bad
input, 4 for numerical non-convergence, 2 for failed verdicts.
"""


class KContractError(Exception):
    exit_code = 2


class InputError(KContractError, ValueError):
    exit_code = 3


class ConvergenceError(KContractError, ArithmeticError):
    exit_code = 4


# kernel / series
class NonpositiveCoefficient(InputError):
    pass


class BadNormalization(InputError):
    pass


class BadParameter(InputError):
    pass


class HorizonTooShort(InputError):
    pass


# tuples
class DimensionMismatch(InputError):
    pass


class NonCommutingTuple(InputError):
    pass


class SeriesNotConverged(ConvergenceError):
    pass


class SpectralUnsafe(ConvergenceError):
    pass


class NotPositive(KContractError):
    """The defect series is not positive semidefinite: T is no K-contraction."""


class NotPure(KContractError):
    pass


# dilation
class IsometryDegraded(KContractError):
    pass


class MembershipAmbiguous(ConvergenceError):
    pass


class NotMinimal(KContractError):
    pass


class IrreconcilableDilations(KContractError):
    pass


# realization
class DegreeOverflow(InputError):
    pass


class KernelSingularity(InputError):
    pass


class NotRowContraction(KContractError):
    pass


class RankDeficiencyWarning(UserWarning):
    """Singular values fell inside the ambiguity band of a rank decision."""
