"""Moderate deviations for log S_t: rescaled cgf probes, the quadratic rate,
digital estimates and the call/digital transfer diagnostic."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .errors import DomainError
from .expansions import MOTMSchedule

__all__ = [
    "MDRate",
    "RescaledCgfProbe",
    "TransferRow",
    "TransferTable",
    "rescaled_cgf",
    "rescaled_cgf_probe",
    "md_rate",
    "digital_md_estimate",
    "transfer_check",
]

# a log mgf (s, t) -> log E[exp(s X_t)], +inf once the moment has exploded
LogMgf = Callable[[float, float], float]
LogPricer = Callable[[float, float], float]

MOMENT_CHECK_ORDER = 2.0


@dataclass(frozen=True)
class MDRate:
    v0: float

    def __post_init__(self):
        if not self.v0 > 0:
            raise DomainError(f"v0 must be positive, got {self.v0}")


@dataclass(frozen=True)
class RescaledCgfProbe:
    p: float
    beta: float
    t_grid: tuple
    values: tuple


def rescaled_cgf(log_mgf: LogMgf, p: float, beta: float, t: float) -> float:
    """t^(1-2beta) log M(t^(beta-1) p, t); +inf when the moment has exploded."""
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    if p == 0.0:
        return 0.0
    value = log_mgf(t ** (beta - 1.0) * p, t)
    if value == math.inf:
        return math.inf
    return t ** (1.0 - 2.0 * beta) * value


def rescaled_cgf_probe(log_mgf: LogMgf, p: float, beta: float, t_grid: Sequence[float]) -> RescaledCgfProbe:
    grid = tuple(float(t) for t in t_grid)
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise DomainError("t_grid must be strictly decreasing")
    return RescaledCgfProbe(p=p, beta=beta, t_grid=grid,
                            values=tuple(rescaled_cgf(log_mgf, p, beta, t) for t in grid))


def md_rate(r: MDRate, x: float) -> float:
    """Quadratic moderate deviation rate x^2 / (2 v0)."""
    return 0.5 * x * x / r.v0


def digital_md_estimate(r: MDRate, s: MOTMSchedule, t: float) -> float:
    """First order estimate of log P[X_t >= k_t]: -k_t^2 / (2 v0 t)."""
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    return -md_rate(r, s.k(t)) / t


@dataclass(frozen=True)
class TransferRow:
    t: float
    k: float
    scaled_log_call: float
    scaled_log_digital: float

    @property
    def difference(self) -> float:
        return self.scaled_log_call - self.scaled_log_digital


@dataclass(frozen=True)
class TransferTable:
    rows: tuple
    md_limit: float

    @property
    def converging(self) -> bool:
        """Last |difference| below half of the first one."""
        if len(self.rows) < 2:
            return False
        return abs(self.rows[-1].difference) < 0.5 * abs(self.rows[0].difference)


def transfer_check(
    log_call: LogPricer,
    log_digital: LogPricer,
    s: MOTMSchedule,
    t_grid: Sequence[float],
    v0: float,
    explosion_time: Optional[Callable[[float], float]] = None,
) -> TransferTable:
    """Tabulate (t/k^2) log c and (t/k^2) log P[X_t >= k] along the schedule.

    ``log_call(k, t)`` and ``log_digital(k, t)`` are exact log prices. When the
    model has finite critical moments, ``explosion_time(p)`` must be positive
    for some p > 1, otherwise the transfer between calls and digitals fails.
    """
    if explosion_time is not None and not explosion_time(MOMENT_CHECK_ORDER) > 0:
        raise DomainError(
            f"moment of order {MOMENT_CHECK_ORDER} explodes immediately; the transfer does not apply")
    rows = []
    for t in t_grid:
        k = s.k(t)
        scale = t / (k * k)
        rows.append(TransferRow(t=t, k=k, scaled_log_call=scale * log_call(k, t),
                                scaled_log_digital=scale * log_digital(k, t)))
    return TransferTable(rows=tuple(rows), md_limit=-0.5 / v0)
