"""Exception types shared across the package."""


class RuinlabError(Exception):
    """Base class for every error raised by this package."""


class DomainError(RuinlabError, ValueError):
    """An input lies outside the mathematical domain of the operation."""


class ValidityError(RuinlabError, ValueError):
    """Inputs are individually legal but their combination is unusable,
    e.g. an approximation evaluated outside its region of validity."""


class InfeasibleTargetError(ValidityError):
    """Target gain/loss legs cannot reproduce the required per-trial mean."""
