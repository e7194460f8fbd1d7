"""
Exception hierarchy. Every error belongs to one of three categories and the
category decides the CLI exit code:

    DomainError       (2)  the point or object is outside where the operation is defined
    ParseError        (3)  malformed expression text or inconsistent shapes
    NumericalFailure  (4)  a numerical procedure could not reach its tolerance
"""


class NcratError(Exception):
    exit_code = 1


class DomainError(NcratError):
    exit_code = 2


class ParseError(NcratError):
    exit_code = 3

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class NumericalFailure(NcratError):
    exit_code = 4


# ---- domain errors ----

class OutsideFormalDomain(DomainError):
    def __init__(self, node_id, sigma_min):
        super().__init__(f"inverse node {node_id} evaluated at a singular matrix (sigma_min={sigma_min:.3e})")
        self.node_id = node_id
        self.sigma_min = sigma_min


class PencilSingular(DomainError):
    def __init__(self, sigma_min):
        super().__init__(f"pencil singular at the evaluation point (sigma_min={sigma_min:.3e})")
        self.sigma_min = sigma_min


class NotAnalyticAtZero(DomainError):
    def __init__(self, sigma_min):
        super().__init__(f"inverse of a matrix singular at 0 (sigma_min={sigma_min:.3e})")
        self.sigma_min = sigma_min


class NotSingular(DomainError):
    def __init__(self, margin):
        super().__init__(f"pencil is invertible at chi (margin={margin:.3e})")
        self.margin = margin


class NotASingularity(NotSingular):
    """Raised by probes whose precondition is a pencil singularity."""


class ValueAtZeroSingular(DomainError):
    pass


class PivotSingular(DomainError):
    pass


class SchurSingular(DomainError):
    pass


class NotInKernel(DomainError):
    def __init__(self, residual):
        super().__init__(f"zeta is not in the kernel of the Schur complement (residual={residual:.3e})")
        self.residual = residual


class YSingular(DomainError):
    pass


class NotOnBoundary(DomainError):
    def __init__(self, min_eig):
        super().__init__(f"point is not on the boundary of the positivity set (min_eig={min_eig:.3e})")
        self.min_eig = min_eig


class NotPositiveAtOrigin(DomainError):
    def __init__(self, min_eig):
        super().__init__(f"r(0) is not positive definite (min_eig={min_eig:.3e})")
        self.min_eig = min_eig


class NotMinimal(DomainError):
    def __init__(self, reach_rank, obs_rank, d):
        super().__init__(f"realization is not minimal (reach rank {reach_rank}, obs rank {obs_rank}, d={d})")
        self.reach_rank = reach_rank
        self.obs_rank = obs_rank


class NotSymmetricFunction(DomainError):
    def __init__(self, witness=None, error=None):
        message = "realized function is not symmetric"
        if error is not None:
            message += f" (||r(X) - r(X)^T||={error:.3e})"
        super().__init__(message)
        self.witness = witness
        self.error = error


class WordTooLong(DomainError):
    pass


class WordLengthMismatch(DomainError):
    pass


class DimensionOverflow(DomainError):
    def __init__(self, dimension, cap):
        super().__init__(f"Fock dimension {dimension} exceeds cap {cap}")
        self.dimension = dimension
        self.cap = cap


# ---- parse errors ----

class ShapeMismatch(ParseError):
    pass


# ---- numerical failures ----

class FitUnstable(NumericalFailure):
    def __init__(self, what, residual):
        super().__init__(f"{what}: fit residual {residual:.3e} above tolerance")
        self.residual = residual


class DegenerateDeterminant(NumericalFailure):
    pass


class ProbeDiverged(NumericalFailure):
    pass


class AllDirectionsBlocked(NumericalFailure):
    pass


class ScheduleBlocked(NumericalFailure):
    pass


class SymmetrizationFailed(NumericalFailure):
    def __init__(self, reason, residual=None):
        message = f"symmetrization failed: {reason}"
        if residual is not None:
            message += f" (residual={residual:.3e})"
        super().__init__(message)
        self.residual = residual
