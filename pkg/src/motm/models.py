"""Local volatility and generic two-factor stochastic volatility models.

The two-factor family is

    dS = S sqrt(V) dW,  dV = (drift) dt + eta sqrt(V) nu(V) dZ,  d<W, Z> = rho dt,

with S_0 = 1 and V_0 = v0. Only the principal part of the generator enters the
energy expansion at the money; the drift of V is never used.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .energy import EnergyData
from .errors import ConvergenceError, DomainError
from .finite_diff import fd_derivatives

__all__ = [
    "LocalVolModel",
    "TwoFactorSVModel",
    "OsajimaCoefficients",
    "localvol_energy",
    "localvol_energy_derivs",
    "osajima_two_factor",
    "energy_from_osajima",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)
DERIV_CHECK_RTOL = 1e-4
QUAD_ABS_TOL = 1e-12


def _check_derivative(fn, dfn, x0: float, name: str) -> None:
    reference = fd_derivatives(fn, x0, orders=(1,), step=1e-3 * max(1.0, abs(x0)))[1]
    supplied = float(dfn(x0))
    scale = max(abs(reference), abs(float(fn(x0))) * 1e-3, 1e-12)
    if abs(supplied - reference) > DERIV_CHECK_RTOL * scale:
        raise DomainError(
            f"{name} disagrees with finite differences at {x0}: supplied {supplied!r}, "
            f"finite difference {reference!r}")


@dataclass(frozen=True)
class LocalVolModel:
    """Time-homogeneous local volatility dS = sigma(S) S dW, S_0 = 1."""

    sigma_fn: Callable[[float], float]
    sigma_d1: Callable[[float], float]
    sigma_d2: Optional[Callable[[float], float]] = None
    name: str = "localvol"

    def __post_init__(self):
        if not float(self.sigma_fn(1.0)) > 0:
            raise DomainError("local volatility must be positive at the spot")
        _check_derivative(self.sigma_fn, self.sigma_d1, 1.0, "sigma_d1")
        if self.sigma_d2 is not None:
            _check_derivative(self.sigma_d1, self.sigma_d2, 1.0, "sigma_d2")

    @classmethod
    def constant(cls, sigma: float) -> "LocalVolModel":
        if not sigma > 0:
            raise DomainError("sigma must be positive")
        return cls(lambda s: sigma, lambda s: 0.0, lambda s: 0.0, name="constant")

    @classmethod
    def power(cls, a: float, b: float) -> "LocalVolModel":
        """sigma(s) = a s^b."""
        if not a > 0:
            raise DomainError("power local vol needs a > 0")
        return cls(
            lambda s: a * s**b,
            lambda s: a * b * s ** (b - 1),
            lambda s: a * b * (b - 1) * s ** (b - 2),
            name="localvol_power",
        )

    @property
    def spot_vol(self) -> float:
        return float(self.sigma_fn(1.0))


def localvol_energy(m: LocalVolModel, k: float) -> float:
    """Lambda(k) = (1/2) (int_0^k dx / sigma(e^x))^2 by adaptive quadrature."""
    if k == 0.0:
        return 0.0

    def integrand(x):
        sig = float(m.sigma_fn(math.exp(x)))
        if not sig > 0:
            raise DomainError(f"local volatility not positive at S = {math.exp(x)}")
        return 1.0 / sig

    inner, err = integrate.quad(integrand, 0.0, k, epsabs=QUAD_ABS_TOL, epsrel=1e-14, limit=200)
    if not err <= QUAD_ABS_TOL:
        raise ConvergenceError(f"local vol energy quadrature error {err} exceeds {QUAD_ABS_TOL}")
    return 0.5 * inner * inner


def localvol_energy_derivs(m: LocalVolModel) -> EnergyData:
    sig = m.spot_vol
    dsig = float(m.sigma_d1(1.0))
    inv = 1.0 / sig  # one rounding, so round vols give exact lam2
    return EnergyData(
        lam2=inv * inv,
        lam3=-3.0 * (dsig * inv) * (inv * inv),
        gamma0=1.0 / (_SQRT_2PI * sig),
    )


@dataclass(frozen=True)
class TwoFactorSVModel:
    v0: float
    eta: float
    rho: float
    nu_fn: Callable[[float], float]
    nu_d1: Callable[[float], float]
    name: str = "two_factor"

    def __post_init__(self):
        if not self.v0 > 0:
            raise DomainError("v0 must be positive")
        if not self.eta > 0:
            raise DomainError("eta must be positive")
        if not -1.0 < self.rho < 1.0:
            raise DomainError("rho must lie in (-1, 1)")
        _check_derivative(self.nu_fn, self.nu_d1, self.v0, "nu_d1")
        if float(self.nu_fn(self.v0)) == 0.0:
            warnings.warn("nu(v0) = 0: the ATM skew is degenerate", RuntimeWarning, stacklevel=3)

    @classmethod
    def heston(cls, v0: float, eta: float, rho: float) -> "TwoFactorSVModel":
        return cls(v0, eta, rho, lambda v: 1.0, lambda v: 0.0, name="heston")

    @classmethod
    def three_halves(cls, v0: float, eta: float, rho: float) -> "TwoFactorSVModel":
        return cls(v0, eta, rho, lambda v: v, lambda v: 1.0, name="three_halves")

    def diffusion_matrix(self, v: float) -> np.ndarray:
        """Coefficients a^{ij} of the principal part in (log S, V) coordinates."""
        nu = float(self.nu_fn(v))
        a12 = self.rho * self.eta * v * nu
        return np.array([[v, a12], [a12, self.eta**2 * v * nu * nu]])


@dataclass(frozen=True)
class OsajimaCoefficients:
    b1: float
    b2: float
    b3: float

    def __post_init__(self):
        if not self.b1 > 0:
            raise DomainError("b1 must be positive")


class _Jet:
    """Value and first two v-derivatives at a fixed point; NaN marks an unknown."""

    __slots__ = ("c",)

    def __init__(self, c0, c1=0.0, c2=0.0):
        self.c = (float(c0), float(c1), float(c2))

    def __add__(self, other):
        return _Jet(*(a + b for a, b in zip(self.c, other.c)))

    def __mul__(self, other):
        if not isinstance(other, _Jet):
            return _Jet(*(other * a for a in self.c))
        a, b = self.c, other.c
        return _Jet(a[0] * b[0], a[1] * b[0] + a[0] * b[1],
                    a[2] * b[0] + 2 * a[1] * b[1] + a[0] * b[2])

    __rmul__ = __mul__

    def dv(self):
        return _Jet(self.c[1], self.c[2], math.nan)

    @property
    def value(self):
        return self.c[0]


# A function of (t, v) that is a polynomial in (1 - t): {power m: jet of the coefficient}
def _integrate_tail(f: dict) -> dict:
    """t -> int_t^1 d/dv f(s, v) ds, using int_t^1 (1-s)^m ds = (1-t)^(m+1)/(m+1)."""
    return {m + 1: f[m].dv() * (1.0 / (m + 1)) for m in f}


def _mul(f: dict, g: dict) -> dict:
    out: dict = {}
    for m, a in f.items():
        for n, b in g.items():
            out[m + n] = out[m + n] + a * b if m + n in out else a * b
    return out


def _scale(coef: _Jet, f: dict) -> dict:
    return {m: coef * c for m, c in f.items()}


def _time_integral(f: dict) -> float:
    """int_0^1 f(t, v0) dt."""
    return sum(c.value / (m + 1) for m, c in f.items())


def osajima_two_factor(m: TwoFactorSVModel) -> OsajimaCoefficients:
    """Coefficients b1, b2, b3 of the quartic energy expansion at the money.

    Coefficients do not depend on log S, so only v-derivatives survive in the
    operators V f = sum_i a^{1i} int_t^1 d_i f and
    Gamma(f, g) = sum_ij a^{ij} (int_t^1 d_i f)(int_t^1 d_j g).
    """
    v0 = m.v0
    nu = float(m.nu_fn(v0))
    dnu = float(m.nu_d1(v0))
    re = m.rho * m.eta
    a11 = _Jet(v0, 1.0, 0.0)
    # second derivative of a12 is never needed for b3; NaN guards that claim
    a12 = _Jet(re * v0 * nu, re * (nu + v0 * dnu), math.nan)
    a22 = _Jet(m.eta**2 * v0 * nu * nu, math.nan, math.nan)

    def V(f):
        return _scale(a12, _integrate_tail(f))

    def Gamma(f, g):
        return _scale(a22, _mul(_integrate_tail(f), _integrate_tail(g)))

    f11 = {0: a11}
    b1 = _time_integral(f11)
    b2 = 1.5 * _time_integral(V(f11))
    b3 = 2.0 * _time_integral(V(V(f11))) + 0.5 * _time_integral(Gamma(f11, f11))
    return OsajimaCoefficients(b1=b1, b2=b2, b3=b3)


def energy_from_osajima(c: OsajimaCoefficients) -> EnergyData:
    b1, b2, b3 = c.b1, c.b2, c.b3
    return EnergyData(
        lam2=1.0 / b1,
        lam3=-2.0 * b2 / b1**3,
        lam4=-6.0 * b3 / b1**4 + 12.0 * b2**2 / b1**5,
    )
