"""Exception hierarchy shared by every module."""


class MotmError(Exception):
    """Base class for all package errors."""


class DomainError(MotmError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PriceRangeError(DomainError):
    """A price violates the no-arbitrage bounds."""


class ConvergenceError(MotmError, ArithmeticError):
    """A numerical routine failed to reach its tolerance."""


class RegimeError(MotmError, ValueError):
    """An expansion was requested outside its validity regime."""


class UnsupportedOrderError(MotmError, ValueError):
    """A required derivative order is not available."""
