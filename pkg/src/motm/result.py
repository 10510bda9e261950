"""Reference values returned by the numerical oracles."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DomainError

__all__ = ["OracleResult"]


@dataclass(frozen=True)
class OracleResult:
    value: float
    error_estimate: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.error_estimate >= 0:
            raise DomainError(f"error estimate must be non-negative, got {self.error_estimate}")

    def __float__(self) -> float:
        return float(self.value)
