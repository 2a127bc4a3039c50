"""Exception hierarchy shared by all moelab modules."""


class MoelabError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(MoelabError, ValueError):
    """Shapes or lengths of the operands do not match."""


class ValidationError(MoelabError, ValueError):
    """An input violates a documented invariant (norm, hermiticity, ...)."""


class DomainError(MoelabError, ValueError):
    """A value lies outside the mathematical domain of the operation."""


class NumericalError(MoelabError, ArithmeticError):
    """A numerical procedure failed (non-convergence, inconsistency)."""


class NumericalInconsistencyError(NumericalError):
    """Two routes that must agree analytically disagreed beyond tolerance."""


class MembershipError(ValidationError):
    """A matrix is not a member of the subspace it was claimed to be in."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SupportError(DomainError):
    """ker(omega) is not contained in ker(rho); the relative entropy is +inf."""

    def __init__(self, message, leaked_weight=None):
        super().__init__(message)
        self.leaked_weight = leaked_weight


class CertifyRadiusError(DomainError):
    """The perturbation path loses positive definiteness inside the radius."""

    def __init__(self, message, max_tau=None):
        super().__init__(message)
        self.max_tau = max_tau


class DegenerateInputError(ValidationError):
    """The input is identically zero (or numerically indistinguishable)."""
