"""Derivatives of the energy function at the money and the algebra built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from .errors import DomainError, UnsupportedOrderError

__all__ = [
    "EnergyData",
    "SmileShape",
    "CgfDerivatives",
    "skew_from_energy",
    "curvature_from_energy",
    "smile_shape",
    "bbf_smile",
    "legendre_derivatives",
]


@dataclass(frozen=True)
class EnergyData:
    """Lambda''(0), Lambda'''(0), optionally Lambda''''(0), and the density prefactor gamma(0)."""

    lam2: float
    lam3: float
    lam4: Optional[float] = None
    gamma0: Optional[float] = None

    def __post_init__(self):
        if not self.lam2 > 0:
            raise DomainError(f"lam2 must be positive, got {self.lam2}")
        if self.gamma0 is not None and not self.gamma0 > 0:
            raise DomainError(f"gamma0 must be positive, got {self.gamma0}")

    @property
    def spot_variance(self) -> float:
        return 1.0 / self.lam2

    @property
    def sigma0(self) -> float:
        return 1.0 / math.sqrt(self.lam2)

    def derivative(self, order: int) -> float:
        """Lambda^(order)(0); orders 0 and 1 vanish by assumption."""
        if order in (0, 1):
            return 0.0
        value = {2: self.lam2, 3: self.lam3, 4: self.lam4}.get(order)
        if value is None:
            raise UnsupportedOrderError(f"Lambda derivative of order {order} is not available")
        return value

    def check_spot_variance(self, v0: float, rel_tol: float = 1e-10) -> None:
        if not math.isclose(self.spot_variance, v0, rel_tol=rel_tol):
            raise DomainError(f"1/lam2 = {self.spot_variance!r} does not match spot variance {v0!r}")


@dataclass(frozen=True)
class SmileShape:
    skew: float
    curvature: Optional[float] = None


@dataclass(frozen=True)
class CgfDerivatives:
    """Derivatives of a limiting cumulant generating function at 0."""

    g2: float
    g3: float
    g4: Optional[float] = None

    def __post_init__(self):
        if not self.g2 > 0:
            raise DomainError(f"g2 must be positive, got {self.g2}")


def skew_from_energy(e: EnergyData) -> float:
    """Small-time ATM implied variance skew, -lam3 / (3 lam2^2)."""
    return -e.lam3 / (3.0 * e.lam2 * e.lam2)


def curvature_from_energy(e: EnergyData) -> float:
    if e.lam4 is None:
        raise UnsupportedOrderError("curvature needs the fourth derivative lam4")
    return (2.0 / 3.0 * e.lam3**2 - 0.5 * e.lam4 * e.lam2) / (3.0 * e.lam2**3)


def smile_shape(e: EnergyData) -> SmileShape:
    curv = curvature_from_energy(e) if e.lam4 is not None else None
    return SmileShape(skew=skew_from_energy(e), curvature=curv)


def bbf_smile(energy: Callable[[float], float] | EnergyData, k: float) -> float:
    """Short-time implied variance k^2 / (2 Lambda(k)).

    ``energy`` is either a full energy function or an :class:`EnergyData`, in which
    case its quartic Taylor polynomial stands in for Lambda. At ``k == 0`` a callable
    must expose ``lam2`` (as the attribute of an EnergyData) for the continuous
    extension, so pass EnergyData or use a nonzero k.
    """
    if isinstance(energy, EnergyData):
        e = energy
        if k == 0.0:
            return 1.0 / e.lam2
        lam4 = e.lam4 or 0.0
        value = e.lam2 * k**2 / 2 + e.lam3 * k**3 / 6 + lam4 * k**4 / 24
    else:
        if k == 0.0:
            lam2 = getattr(energy, "lam2", None)
            if lam2 is None:
                raise DomainError("k = 0 needs lam2 for the continuous extension")
            return 1.0 / lam2
        value = energy(k)
    if not value > 0:
        raise DomainError(f"energy must be positive away from 0, got {value} at k={k}")
    return k * k / (2.0 * value)


def legendre_derivatives(g: CgfDerivatives) -> EnergyData:
    """Map derivatives of Gamma at 0 to those of its Legendre transform at 0."""
    lam2 = 1.0 / g.g2
    lam3 = -g.g3 / g.g2**3
    lam4 = None
    if g.g4 is not None:
        lam4 = 3.0 * g.g3**2 / g.g2**5 - g.g4 / g.g2**4
    return EnergyData(lam2=lam2, lam3=lam3, lam4=lam4)
