"""Moderately-out-of-the-money expansions of call prices and implied volatility.

Strikes follow the schedule k_t = theta * l(t) * t^beta with beta in (0, 1/2).
Every report is the finite truncation of the corresponding expansion; the
o(1) remainders are never modelled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .energy import EnergyData, skew_from_energy
from .errors import DomainError, RegimeError, UnsupportedOrderError

__all__ = [
    "MOTMSchedule",
    "ExpansionReport",
    "log_price_first_order",
    "log_price_second_order",
    "second_order_skew_form",
    "log_price_refined",
    "implied_vol_expansion",
    "refined_order",
]

SECOND_ORDER_BETA_MAX = 1.0 / 3.0
MAX_ENERGY_ORDER = 4


@dataclass(frozen=True)
class MOTMSchedule:
    theta: float
    beta: float
    slowly_varying: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        if not (math.isfinite(self.theta) and self.theta > 0):
            raise DomainError(f"theta must be positive, got {self.theta}")
        if not 0.0 < self.beta < 0.5:
            raise RegimeError(f"beta must lie in (0, 1/2) for the moderate regime, got {self.beta}")

    def ell(self, t: float) -> float:
        """Effective slowly varying factor theta * l(t)."""
        if self.slowly_varying is None:
            return self.theta
        value = float(self.slowly_varying(t))
        if not value > 0:
            raise DomainError(f"slowly varying factor must be positive, got {value} at t={t}")
        return self.theta * value

    def k(self, t: float) -> float:
        if not t > 0:
            raise DomainError(f"t must be positive, got {t}")
        return self.ell(t) * t**self.beta


@dataclass(frozen=True)
class ExpansionReport:
    """Terms of a truncated expansion of log c(k_t, t).

    Energy terms are stored with the sign they carry inside Lambda, so
    log_price = -rate_term - cubic_term - sum(higher_terms) + log_term + const_term.
    """

    t: float
    k: float
    order: str
    rate_term: float
    cubic_term: float = 0.0
    higher_terms: tuple = field(default_factory=tuple)
    log_term: float = 0.0
    const_term: float = 0.0
    log_price: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "higher_terms", tuple(self.higher_terms))
        object.__setattr__(self, "log_price", _assemble(self.signed_parts()))

    def signed_parts(self) -> list:
        return [-self.rate_term, -self.cubic_term, *(-h for h in self.higher_terms),
                self.log_term, self.const_term]


def _assemble(parts) -> float:
    # fixed left-to-right order keeps the assembly reproducible bit for bit
    total = 0.0
    for x in parts:
        total += x
    return total


def _energy_term(lam: float, k: float, t: float, m: int) -> float:
    return lam * k**m / (math.factorial(m) * t)


def _check_t(t: float) -> None:
    if not (math.isfinite(t) and t > 0):
        raise DomainError(f"t must be positive, got {t}")


def _require_second_order_regime(s: MOTMSchedule, what: str) -> None:
    if not s.beta < SECOND_ORDER_BETA_MAX:
        raise RegimeError(f"{what} requires beta in (0, 1/3), got beta={s.beta}")


def log_price_first_order(e: EnergyData, s: MOTMSchedule, t: float) -> ExpansionReport:
    """log c ~ -k_t^2 / (2 sigma0^2 t)."""
    _check_t(t)
    k = s.k(t)
    return ExpansionReport(t=t, k=k, order="first", rate_term=_energy_term(e.lam2, k, t, 2))


def log_price_second_order(e: EnergyData, s: MOTMSchedule, t: float) -> ExpansionReport:
    """log c ~ -lam2 k^2 / (2t) - lam3 k^3 / (6t), valid for beta < 1/3."""
    _check_t(t)
    _require_second_order_regime(s, "the second order expansion")
    k = s.k(t)
    return ExpansionReport(
        t=t, k=k, order="second",
        rate_term=_energy_term(e.lam2, k, t, 2),
        cubic_term=_energy_term(e.lam3, k, t, 3),
    )


def second_order_skew_form(e: EnergyData, s: MOTMSchedule, t: float) -> float:
    """The same truncation written through the skew: -(k^2 / 2 v0 t)(1 - S k / v0)."""
    _check_t(t)
    _require_second_order_regime(s, "the second order expansion")
    k = s.k(t)
    v0 = e.spot_variance
    return -(k * k / (2.0 * v0 * t)) * (1.0 - skew_from_energy(e) / v0 * k)


def refined_order(beta: float) -> int:
    """Largest energy derivative order kept by the refined expansion."""
    return math.floor(1.0 / beta)


def log_price_refined(e: EnergyData, s: MOTMSchedule, t: float) -> ExpansionReport:
    """Energy terms up to order floor(1/beta) plus the logarithmic and constant corrections."""
    _check_t(t)
    if e.gamma0 is None:
        raise UnsupportedOrderError("the refined expansion needs the density prefactor gamma0")
    top = refined_order(s.beta)
    if top > MAX_ENERGY_ORDER:
        raise UnsupportedOrderError(
            f"beta={s.beta} needs energy derivatives up to order floor(1/beta)={top}; "
            f"only orders up to {MAX_ENERGY_ORDER} are available")
    k = s.k(t)
    terms = {m: _energy_term(e.derivative(m), k, t, m) for m in range(2, top + 1)}
    return ExpansionReport(
        t=t, k=k, order="refined",
        rate_term=terms[2],
        cubic_term=terms.get(3, 0.0),
        higher_terms=tuple(terms[m] for m in range(4, top + 1)),
        log_term=(2.0 * s.beta - 1.5) * math.log(1.0 / t) - 2.0 * math.log(s.ell(t)),
        const_term=math.log(e.gamma0 * e.spot_variance**2),
    )


def implied_vol_expansion(e: EnergyData, s: MOTMSchedule, t: float) -> float:
    """sigma0 - sigma0^3 lam3 k_t / 6, valid for beta < 1/3."""
    _check_t(t)
    _require_second_order_regime(s, "the implied volatility expansion")
    sigma0 = e.sigma0
    return sigma0 - sigma0**3 * e.lam3 * s.k(t) / 6.0
