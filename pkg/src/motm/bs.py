"""Black-Scholes pricing with zero rates, energy function and implied volatility.

All prices are undiscounted. Deep out-of-the-money values are evaluated through
scaled complementary error functions, so call prices keep full relative
precision down to the smallest positive doubles and their logarithms stay
finite far beyond that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ConvergenceError, DomainError, PriceRangeError

__all__ = [
    "BSParams",
    "OptionQuery",
    "bs_call",
    "bs_log_call",
    "bs_normalized_call",
    "bs_log_digital",
    "bs_digital",
    "bs_vega",
    "bs_implied_vol",
    "bs_energy",
]

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

IV_LOWER = 1e-8
IV_UPPER = 10.0
IV_MAX_ITER = 300
PRICE_ABS_TOL = 1e-12
_MILLS_SERIES_MIN = 30.0
_MILLS_QUAD_MAX_WIDTH = 1.0
_SQRT_HALF_PI = math.sqrt(0.5 * math.pi)
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


@dataclass(frozen=True)
class BSParams:
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.sigma) and self.sigma != math.inf:
            raise DomainError(f"sigma must be a number, got {self.sigma}")
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class OptionQuery:
    """A European call query. ``k`` is log(strike / spot)."""

    spot: float
    strike: float
    maturity: float

    def __post_init__(self):
        for name in ("spot", "strike", "maturity"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value}")
        if self.spot <= 0 or self.strike <= 0:
            raise DomainError("spot and strike must be positive")
        if self.maturity < 0:
            raise DomainError("maturity must be non-negative")

    @classmethod
    def from_log_moneyness(cls, k: float, maturity: float, spot: float = 1.0) -> "OptionQuery":
        if not math.isfinite(k):
            raise DomainError(f"log-moneyness must be finite, got {k}")
        return cls(spot=spot, strike=spot * math.exp(k), maturity=maturity)

    @property
    def k(self) -> float:
        return math.log(self.strike / self.spot)

    @property
    def intrinsic(self) -> float:
        return max(self.spot - self.strike, 0.0)


def _otm_log_call(k: float, s: float) -> float:
    """log c(k, s) for k >= 0, spot 1, total volatility s > 0.

    Uses c = n(d1) (R(-d1) - R(-d2)) with R the Mills ratio (from e^k n(d2) = n(d1)),
    evaluating the difference of Mills ratios without cancellation.
    """
    d1 = -k / s + 0.5 * s
    x = -d1
    if x >= _MILLS_SERIES_MIN:
        return -0.5 * d1 * d1 - _LOG_SQRT_2PI + _log_mills_difference_series(x, s)
    if s <= _MILLS_QUAD_MAX_WIDTH:
        return -0.5 * d1 * d1 - _LOG_SQRT_2PI + math.log(_mills_difference_quad(x, s))
    d2 = d1 - s
    if d1 >= 0.0:
        return math.log(special.ndtr(d1) - math.exp(k) * special.ndtr(d2))
    diff = special.erfcx(x / _SQRT2) - special.erfcx(-d2 / _SQRT2)
    return math.log(0.5) - 0.5 * d1 * d1 + math.log(diff)


def _mills_difference_quad(x: float, s: float) -> float:
    """R(x) - R(x + s) = int_x^{x+s} (1 - u R(u)) du by Gauss-Legendre; the integrand is positive."""
    u = x + 0.5 * s * (_GL_NODES + 1.0)
    minus_slope = 1.0 - u * _SQRT_HALF_PI * special.erfcx(u / _SQRT2)
    return 0.5 * s * float(np.dot(_GL_WEIGHTS, minus_slope))


def _log_mills_difference_series(x: float, s: float) -> float:
    """log(R(x) - R(x + s)) for x >= 30 from the asymptotic series of R.

    R(x) = sum_n c_n x^-(2n+1) with c_n = (-1)^n (2n-1)!!. With q = x/(x+s),
    each term difference is x^-(2n+1) (1 - q^(2n+1)) and
    (1 - q^m) / (1 - q) = sum_{j<m} q^j, so only 1 - q is ever formed explicitly.
    """
    log_q = -math.log1p(s / x)
    inv_x2 = 1.0 / (x * x)
    total = 0.0
    coef = 1.0
    power = 1.0
    for n in range(10):
        m = 2 * n + 1
        geometric = math.fsum(math.exp(j * log_q) for j in range(m))
        total += coef * power * geometric
        coef *= -(2 * n + 1)
        power *= inv_x2
    # log(1 - q) = log(s) - log(x + s)
    return -math.log(x) + math.log(s) - math.log(x + s) + math.log(total)


def bs_log_call(k: float, s: float) -> float:
    """Log of the normalized call price c(k) for total volatility s = sigma*sqrt(t)."""
    if not (math.isfinite(k) and (math.isfinite(s) or s == math.inf)):
        raise DomainError("non-finite input")
    if s < 0:
        raise DomainError("total volatility must be non-negative")
    if s == math.inf:
        return 0.0
    if s == 0.0:
        return math.log1p(-math.exp(k)) if k < 0 else -math.inf
    if k >= 0.0:
        return _otm_log_call(k, s)
    # In the money: c(k) = 1 - e^k + e^k c(-k)
    return math.log(-math.expm1(k) + math.exp(k + _otm_log_call(-k, s)))


def bs_normalized_call(k: float, s: float) -> float:
    return math.exp(bs_log_call(k, s))


def bs_call(q: OptionQuery, p: BSParams) -> float:
    """Undiscounted Black-Scholes call value."""
    if q.maturity == 0.0:
        return q.intrinsic
    s = p.sigma * math.sqrt(q.maturity)
    value = q.spot * bs_normalized_call(q.k, s)
    return min(max(value, q.intrinsic), q.spot)


def bs_log_digital(k: float, s: float) -> float:
    """log P[X_t >= k] for X_t = log S_t under Black-Scholes, s = sigma*sqrt(t)."""
    if s <= 0:
        raise DomainError("total volatility must be positive")
    return float(special.log_ndtr(-k / s - 0.5 * s))


def bs_digital(k: float, s: float) -> float:
    return math.exp(bs_log_digital(k, s))


def bs_vega(q: OptionQuery, p: BSParams) -> float:
    """Derivative of the call value with respect to sigma."""
    if q.maturity == 0.0:
        return 0.0
    sqt = math.sqrt(q.maturity)
    s = p.sigma * sqt
    d1 = -q.k / s + 0.5 * s
    return q.spot * sqt * math.exp(-0.5 * d1 * d1 - _LOG_SQRT_2PI)


def _log_vega_ratio(k: float, s: float, log_c: float) -> float:
    """d log c / ds, computed in log space so that tiny prices stay finite."""
    d1 = -k / s + 0.5 * s
    return math.exp(-0.5 * d1 * d1 - _LOG_SQRT_2PI - log_c)


def bs_implied_vol(q: OptionQuery, price: float | None = None, *, log_price: float | None = None) -> float:
    """Invert the Black-Scholes formula.

    Either ``price`` or ``log_price`` (log of price/spot) must be given; the log form
    allows inversion of prices that underflow double precision. In-the-money
    queries are mapped to the equivalent out-of-the-money call before solving.
    """
    if q.maturity <= 0:
        raise DomainError("implied volatility requires positive maturity")
    if (price is None) == (log_price is None):
        raise TypeError("pass exactly one of price or log_price")
    k = q.k
    if price is not None:
        if not math.isfinite(price):
            raise DomainError(f"price must be finite, got {price}")
        if not (q.intrinsic < price < q.spot):
            raise PriceRangeError(
                f"price {price!r} outside open no-arbitrage interval ({q.intrinsic!r}, {q.spot!r})")
        if price <= 0:
            raise PriceRangeError("price must be positive")
        log_c = math.log(price / q.spot)
    else:
        log_c = log_price
        if not (log_c < 0.0) or math.isnan(log_c):
            raise PriceRangeError("log price must be negative (price below spot)")
        if k < 0 and log_c <= math.log1p(-math.exp(k)):
            raise PriceRangeError("price at or below intrinsic value")

    if k < 0:
        # time value of the ITM call equals e^k times the OTM call at -k
        tv = math.exp(log_c) + math.expm1(k)
        if tv <= 0:
            raise PriceRangeError("price at or below intrinsic value")
        log_c = math.log(tv) - k
        k = -k

    s = _solve_total_vol(k, log_c, math.sqrt(q.maturity))
    sigma = s / math.sqrt(q.maturity)
    if price is not None:
        check = bs_call(q, BSParams(sigma))
        if abs(check - price) > PRICE_ABS_TOL * max(1.0, q.spot):
            raise ConvergenceError(
                f"implied vol {sigma!r} reprices to {check!r}, target {price!r}")
    return sigma


def _solve_total_vol(k: float, log_target: float, sqrt_t: float) -> float:
    """Bracketed Newton on log c(s) = log_target, bisection fallback. k >= 0."""
    lo, hi = IV_LOWER * sqrt_t, IV_UPPER * sqrt_t

    def f(s):
        return bs_log_call(k, s) - log_target

    f_lo = f(lo)
    while f_lo > 0:
        lo *= 1e-4
        if lo < 1e-300:
            raise PriceRangeError("price too small to invert")
        f_lo = f(lo)
    f_hi = f(hi)
    while f_hi < 0:
        hi *= 4.0
        if hi > 1e6:
            raise PriceRangeError("price too close to spot to invert")
        f_hi = f(hi)

    s = math.sqrt(lo * hi) if k > 0 else 0.5 * (lo + hi)
    if k > 0:
        # log c ~ -k^2 / (2 s^2) deep out of the money, a good starting point
        guess = k / math.sqrt(max(-2.0 * log_target, 1e-300))
        if lo < guess < hi:
            s = guess
    for _ in range(IV_MAX_ITER):
        log_c = bs_log_call(k, s)
        fs = log_c - log_target
        if fs == 0.0:
            return s
        if fs > 0:
            hi = s
        else:
            lo = s
        if hi - lo <= 4e-16 * hi or abs(fs) <= 1e-15:
            return s
        slope = _log_vega_ratio(k, s, log_c)
        step = fs / slope if slope > 0 else math.inf
        candidate = s - step
        if not (lo < candidate < hi) or not math.isfinite(candidate):
            candidate = 0.5 * (lo + hi)
        s = candidate
    raise ConvergenceError(
        f"implied volatility did not converge in {IV_MAX_ITER} iterations (k={k}, log c={log_target})")


def bs_energy(k: float, p: BSParams) -> float:
    """Black-Scholes energy function k^2 / (2 sigma^2)."""
    return 0.5 * k * k / (p.sigma * p.sigma)
