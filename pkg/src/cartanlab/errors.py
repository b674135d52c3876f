"""Exception types shared across the package."""


class CartanLabError(Exception):
    """Base class for all package-specific errors."""


class EvaluationDomainError(CartanLabError):
    """Evaluation left the admissible domain (p = 0, nonpositive sqrt/log
    argument, non-finite value, degenerate deformation, FD step underflow)."""


class ConditioningError(CartanLabError):
    """A matrix inversion or linear solve exceeded the condition bound."""


class RegularityError(CartanLabError):
    """A structure violates a regularity requirement (non positive definite
    fundamental tensor, Randers drift too large, singular base metric)."""


class ValenceError(CartanLabError):
    """A tensor operation received components inconsistent with the declared
    index valence."""


class ManifestError(CartanLabError):
    """A manifest failed schema validation."""
