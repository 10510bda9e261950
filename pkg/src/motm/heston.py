"""Heston model: Fourier pricing, real moment generating function, explosion times,
the limiting cumulant generating function and its Legendre transform.

    dS = S sqrt(V) dW,  dV = -kappa (V - vbar) dt + eta sqrt(V) dZ,  d<W, Z> = rho dt,

with S_0 = 1 and zero rates. X_t = log S_t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from .bs import OptionQuery
from .energy import CgfDerivatives, EnergyData, legendre_derivatives
from .errors import ConvergenceError, DomainError
from .result import OracleResult

__all__ = [
    "HestonParams",
    "FourierGrid",
    "heston_log_cf",
    "heston_cf",
    "heston_call",
    "heston_put",
    "heston_digital",
    "heston_log_mgf_real",
    "heston_mgf_real",
    "heston_explosion_time",
    "heston_critical_moment",
    "heston_cgf_domain",
    "heston_limiting_cgf",
    "heston_limiting_cgf_d1",
    "heston_limiting_cgf_d2",
    "heston_energy",
    "heston_energy_maximizer",
    "heston_energy_derivs",
    "heston_atm_variance_slope",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)
CGF_SERIES_SWITCH = 1e-4


@dataclass(frozen=True)
class HestonParams:
    v0: float
    vbar: float
    kappa: float
    eta: float
    rho: float

    def __post_init__(self):
        for name in ("v0", "vbar", "eta"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.kappa >= 0:
            raise DomainError(f"kappa must be non-negative, got {self.kappa}")
        if not -1.0 < self.rho < 1.0:
            raise DomainError(f"rho must lie in (-1, 1), got {self.rho}")

    @property
    def rho_bar(self) -> float:
        return math.sqrt(1.0 - self.rho * self.rho)

    @property
    def sigma0(self) -> float:
        return math.sqrt(self.v0)

    @classmethod
    def figure2(cls) -> "HestonParams":
        """Parameters used for the implied volatility illustration."""
        return cls(v0=0.0654, vbar=0.0707, kappa=0.6067, eta=0.2928, rho=-0.7571)


@dataclass(frozen=True)
class FourierGrid:
    """Quadrature controls for the Fourier pricer.

    ``damping`` and ``truncation`` default to automatic choices: the damping that
    minimizes the integrand bound (a real saddle point of the contour) and a
    truncation from the envelope tail bound. The error target is
    max(tolerance, rel_tolerance * value).
    """

    damping: Optional[float] = None
    truncation: Optional[float] = None
    tolerance: float = 1e-18
    rel_tolerance: float = 1e-9

    def __post_init__(self):
        if self.truncation is not None and not self.truncation > 0:
            raise DomainError("truncation must be positive")
        if not self.tolerance > 0 or not self.rel_tolerance > 0:
            raise DomainError("tolerances must be positive")


def _clog1p_over(w):
    """log(1 + w) / w, continuous through w = 0."""
    w = np.asarray(w, dtype=complex)
    small = np.abs(w) < 1e-3
    safe = np.where(small, 1.0, w)
    series = 1 - w * (1 / 2 - w * (1 / 3 - w * (1 / 4 - w * (1 / 5 - w / 6))))
    return np.where(small, series, np.log1p(safe) / safe)


def heston_log_cf(p: HestonParams, u, t: float):
    """log E[exp(i u X_t)] for complex ``u`` (scalar or array).

    Branch-stable form: uses g = (xi - d)/(xi + d) with exp(-d t) so the complex
    logarithm is evaluated near 1, and every 1/eta^2 factor is cancelled
    analytically so that the eta -> 0 limit is exact.
    """
    if t < 0:
        raise DomainError("maturity must be non-negative")
    u = np.asarray(u, dtype=complex)
    if t == 0:
        return np.zeros_like(u)
    eta2 = p.eta * p.eta
    a = u * u + 1j * u
    xi = p.kappa - 1j * p.rho * p.eta * u
    d = np.sqrt(xi * xi + eta2 * a)
    xpd = xi + d
    r = -a / xpd  # (xi - d) / eta^2
    g = eta2 * r / xpd
    e = np.exp(-d * t)
    one_minus_e = -np.expm1(-d * t)
    big_d = r * one_minus_e / (1.0 - g * e)
    w = g * one_minus_e / (1.0 - g)
    w_over_eta2 = r * one_minus_e / (xpd * (1.0 - g))
    ratio = _clog1p_over(w)
    log_term = ratio * w_over_eta2
    out = p.kappa * p.vbar * (r * t - 2.0 * log_term) + p.v0 * big_d
    if not np.all(np.isfinite(out)):
        raise ConvergenceError("characteristic function overflow")
    return out


def heston_cf(p: HestonParams, u, t: float):
    return np.exp(heston_log_cf(p, u, t))


# ---------------------------------------------------------------- real mgf


def _discriminant(p: HestonParams, s: float):
    b = p.rho * p.eta * s - p.kappa
    return b, b * b - p.eta**2 * (s * s - s)


def heston_explosion_time(p: HestonParams, s: float) -> float:
    """Time T*(s) at which E[S_t^s] becomes infinite (math.inf if never)."""
    if 0.0 <= s <= 1.0:
        return math.inf
    b, delta = _discriminant(p, s)
    if delta < 0:
        root = math.sqrt(-delta)
        return 2.0 / root * (0.5 * math.pi - math.atan(b / root))
    if b <= 0:
        return math.inf
    if delta == 0:
        return 2.0 / b
    root = math.sqrt(delta)
    # log((b + root)/(b - root)), with b - root = eta^2 (s^2 - s)/(b + root)
    return (math.log(b + root) * 2 - math.log(p.eta**2 * (s * s - s))) / root


def heston_critical_moment(p: HestonParams, t: float, side: int = 1) -> float:
    """p_+(t) = sup{s >= 0: E[S_t^s] < inf} (side=+1) or p_-(t) = inf{s <= 0: ...} (side=-1)."""
    if not t > 0:
        raise DomainError("t must be positive")
    start = 1.0 if side > 0 else 0.0

    def excess(log_x):
        return heston_explosion_time(p, start + side * math.exp(log_x)) - t

    lo, hi = -20.0, 0.0
    while excess(hi) > 0:
        lo = hi
        hi += 2.0
        if hi > 60:
            return side * math.inf
    if excess(lo) <= 0:
        raise ConvergenceError("could not bracket the critical moment")
    root = optimize.brentq(excess, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=200)
    return start + side * math.exp(root)


def heston_log_mgf_real(p: HestonParams, s: float, t: float) -> float:
    """log E[exp(s X_t)] from the real Riccati solution; math.inf once exploded."""
    if t < 0:
        raise DomainError("t must be non-negative")
    if t == 0 or s == 0.0 or s == 1.0:
        return 0.0
    if t >= heston_explosion_time(p, s):
        return math.inf
    eta2 = p.eta**2
    q = s * s - s
    b, delta = _discriminant(p, s)
    if delta < 0:
        root = math.sqrt(-delta)
        c = math.atan(b / root)
        h = 0.5 * root * t
        cos_end = math.cos(h + c)
        if cos_end <= 0:
            return math.inf
        # D = (root/eta^2)(tan(h + c) - tan c); int D = (2/eta^2)(log(cos c/cos(h+c)) - h tan c)
        # q > 0 here because eta^2 q > b^2
        big_d = math.sqrt(q) * math.sin(h) / (p.eta * cos_end)
        tan_c = b / root
        w = (math.cos(h) - 1.0) - tan_c * math.sin(h)
        int_d = (2.0 / eta2) * (-math.log1p(w) - h * tan_c)
    else:
        root = math.sqrt(delta)
        if b <= 0:
            r = q / (root - b)
        else:
            r = -(b + root) / eta2
        denom = -b + root
        g = (-b - root) / denom if denom != 0 else math.inf
        e = math.exp(-root * t)
        one_minus_e = -math.expm1(-root * t)
        if not math.isfinite(g):
            return math.inf
        big_d = r * one_minus_e / (1.0 - g * e)
        w = g * one_minus_e / (1.0 - g)
        if w <= -1.0:
            return math.inf
        # (2/eta^2) log1p(w) computed through w/eta^2 to survive small eta
        w_over_eta2 = r * one_minus_e / (denom * (1.0 - g)) if denom != 0 else w / eta2
        ratio = math.log1p(w) / w if w != 0 else 1.0
        int_d = r * t - 2.0 * ratio * w_over_eta2
    return p.kappa * p.vbar * int_d + p.v0 * big_d


def heston_mgf_real(p: HestonParams, s: float, t: float) -> float:
    lm = heston_log_mgf_real(p, s, t)
    return math.inf if lm == math.inf else math.exp(lm)


# ---------------------------------------------------------------- Fourier pricing


def _saddle_damping(p, t, objective, lo, hi):
    res = optimize.minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-6 * max(1.0, abs(lo), abs(hi))})
    return float(res.x)


def _fourier_integral(p, k, t, shift, denominator, grid: FourierGrid):
    """(1/pi) int_0^inf Re[exp(-iuk) phi(u - i shift) / denominator(u)] du,
    returned as (log of positive scale, normalized integral, abs error of integral).
    """
    log_m = heston_log_mgf_real(p, shift, t)
    if not math.isfinite(log_m):
        raise ConvergenceError(f"contour shift {shift} lies outside the moment strip at t={t}")

    def envelope(u):
        z = heston_log_cf(p, complex(u, -shift), t)
        return math.exp(z.real - log_m) / abs(denominator(u))

    def integrand(u):
        z = heston_log_cf(p, complex(u, -shift), t) - log_m - 1j * u * k
        return (np.exp(z) / denominator(u)).real

    width = 1.0 / math.sqrt(max(p.v0, p.vbar, 1e-12) * t)
    g0 = abs(1.0 / denominator(0.0))
    if grid.truncation is not None:
        upper = grid.truncation
    else:
        upper = 8.0 * width
        while envelope(upper) * upper > 1e-17 * g0 * width:
            upper *= 2.0
            if upper > 1e9:
                raise ConvergenceError("could not locate a truncation point for the Fourier integral")
    tail = envelope(upper) * upper
    points = [width * j for j in (0.5, 1, 2, 4, 8) if width * j < upper]
    value, err = integrate.quad(integrand, 0.0, upper, epsabs=0.0, epsrel=1e-12,
                                limit=2000, points=points or None)
    return log_m, value / math.pi, (err + tail) / math.pi


def _check_error(result_value, err, grid: FourierGrid, what: str, meta):
    target = max(grid.tolerance, grid.rel_tolerance * abs(result_value))
    if not err <= target:
        raise ConvergenceError(f"{what}: Fourier error estimate {err:.3e} exceeds target {target:.3e} ({meta})")


def _otm_option(p: HestonParams, k: float, t: float, grid: FourierGrid, put: bool):
    """log of the out-of-the-money option value (call for put=False) and its relative error."""
    if put:
        p_lo = heston_critical_moment(p, t, side=-1)
        lo = max(p_lo - 1.0, -1e6) + 1e-9 * max(1.0, abs(p_lo))
        hi = -1.0 - 1e-6
    else:
        p_hi = heston_critical_moment(p, t, side=1)
        lo = 1e-6
        hi = min(p_hi - 1.0, 1e6) - 1e-9 * max(1.0, abs(p_hi))

    def bound(alpha):
        lm = heston_log_mgf_real(p, alpha + 1.0, t)
        if not math.isfinite(lm):
            return 1e300
        return -alpha * k + lm - math.log(alpha * (alpha + 1.0))

    if grid.damping is not None:
        alpha = grid.damping
        if not lo < alpha < hi:
            raise DomainError(f"damping {alpha} outside admissible strip ({lo}, {hi})")
    else:
        alpha = _saddle_damping(p, t, bound, lo, hi)

    def denominator(u):
        return (alpha + 1j * u) * (alpha + 1.0 + 1j * u)

    log_m, integral, err = _fourier_integral(p, k, t, alpha + 1.0, denominator, grid)
    if not integral > 0:
        raise ConvergenceError(f"non-positive Fourier integral {integral} (k={k}, t={t}, alpha={alpha})")
    log_value = -alpha * k + log_m + math.log(integral)
    return log_value, err / integral, alpha


def _query_kt(q: OptionQuery):
    if not q.maturity > 0:
        raise DomainError("Fourier pricing needs positive maturity")
    return q.k, q.maturity


def heston_call(p: HestonParams, q: OptionQuery, g: FourierGrid | None = None) -> OracleResult:
    """Call value by Fourier inversion along a saddle-point contour.

    Out-of-the-money strikes are priced directly; in-the-money strikes via the
    put and parity, so the priced quantity never suffers cancellation.
    ``meta['log_price']`` carries log(value/spot) at full relative accuracy.
    """
    g = g or FourierGrid()
    k, t = _query_kt(q)
    if k > 0:
        log_c, rel_err, alpha = _otm_option(p, k, t, g, put=False)
        value = math.exp(log_c)
        err = rel_err * value
    else:
        log_put, rel_err, alpha = _otm_option(p, k, t, g, put=True)
        put = math.exp(log_put)
        value = put - math.expm1(k)
        err = rel_err * put
        log_c = math.log(value)
    meta = {"log_price": log_c, "damping": alpha, "k": k, "t": t}
    _check_error(value, err, g, "heston_call", meta)
    value = min(max(q.spot * value, q.intrinsic), q.spot)
    return OracleResult(value=value, error_estimate=q.spot * err, meta=meta)


def heston_put(p: HestonParams, q: OptionQuery, g: FourierGrid | None = None) -> OracleResult:
    """Put value from the complementary transform (damping below -1 for k <= 0)."""
    g = g or FourierGrid()
    k, t = _query_kt(q)
    if k <= 0:
        log_put, rel_err, alpha = _otm_option(p, k, t, g, put=True)
        value = math.exp(log_put)
    else:
        log_c, rel_err, alpha = _otm_option(p, k, t, g, put=False)
        call = math.exp(log_c)
        value = call + math.expm1(k)
        rel_err = rel_err * call / value
        log_put = math.log(value)
    err = rel_err * value
    meta = {"log_price": log_put, "damping": alpha, "k": k, "t": t}
    _check_error(value, err, g, "heston_put", meta)
    return OracleResult(value=q.spot * value, error_estimate=q.spot * err, meta=meta)


def heston_digital(p: HestonParams, k: float, t: float, g: FourierGrid | None = None) -> OracleResult:
    """P[X_t >= k] by Fourier inversion; ``meta['log_prob']`` is its logarithm.

    For k > 0 the tail probability is inverted directly with positive damping;
    otherwise the complement P[X_t < k] is inverted with negative damping.
    """
    g = g or FourierGrid()
    if not t > 0:
        raise DomainError("t must be positive")
    upper_tail = k > 0
    if upper_tail:
        p_hi = heston_critical_moment(p, t, side=1)
        lo, hi = 1e-6, min(p_hi, 1e6) - 1e-9 * max(1.0, abs(p_hi))
    else:
        p_lo = heston_critical_moment(p, t, side=-1)
        lo, hi = max(p_lo, -1e6) + 1e-9 * max(1.0, abs(p_lo)), -1e-6

    def bound(alpha):
        lm = heston_log_mgf_real(p, alpha, t)
        if not math.isfinite(lm):
            return 1e300
        return -alpha * k + lm - math.log(abs(alpha))

    alpha = g.damping if g.damping is not None else _saddle_damping(p, t, bound, lo, hi)

    def denominator(u):
        return alpha + 1j * u

    log_m, integral, err = _fourier_integral(p, k, t, alpha, denominator, g)
    if not upper_tail:
        integral, err = -integral, err
    if not integral > 0:
        raise ConvergenceError(f"non-positive Fourier integral for the digital (k={k}, t={t})")
    log_part = -alpha * k + log_m + math.log(integral)
    part = math.exp(log_part)
    rel_err = err / integral
    if upper_tail:
        value, log_prob, abs_err = part, log_part, rel_err * part
    else:
        value = 1.0 - part
        log_prob = math.log1p(-part)
        abs_err = rel_err * part
    meta = {"log_prob": log_prob, "damping": alpha, "k": k, "t": t}
    _check_error(value, abs_err, g, "heston_digital", meta)
    return OracleResult(value=value, error_estimate=abs_err, meta=meta)


# ---------------------------------------------------------------- limiting cgf


def heston_cgf_domain(p: HestonParams) -> tuple:
    """Open interval around 0 on which the limiting cgf is finite."""
    phi0 = math.asin(p.rho)
    c = p.eta * p.rho_bar / 2.0
    return ((-0.5 * math.pi - phi0) / c, (0.5 * math.pi - phi0) / c)


def _cgf_check(p: HestonParams, x: float):
    lo, hi = heston_cgf_domain(p)
    if not lo < x < hi:
        raise DomainError(f"x = {x} outside the limiting cgf domain ({lo}, {hi})")


def _cgf_series(p: HestonParams, x: float, order: int) -> float:
    """Derivative of given order of (v0 x^2/2)(1 + x eta rho/2 + x^2 eta^2 (rho^2/4 + rho_bar^2/12))."""
    c2 = p.v0 / 2.0
    c3 = c2 * p.eta * p.rho / 2.0
    c4 = c2 * p.eta**2 * (p.rho**2 / 4.0 + p.rho_bar**2 / 12.0)
    if order == 0:
        return x * x * (c2 + x * (c3 + x * c4))
    if order == 1:
        return x * (2 * c2 + x * (3 * c3 + x * 4 * c4))
    return 2 * c2 + x * (6 * c3 + x * 12 * c4)


def heston_limiting_cgf(p: HestonParams, x: float) -> float:
    """Gamma(x) = v0 x / (eta (rho_bar cot(eta rho_bar x / 2) - rho)).

    Written as (v0/eta) x sin(y) / cos(y + asin(rho)), y = eta rho_bar x / 2, which
    equals the cot form and stays finite on the whole domain.
    """
    _cgf_check(p, x)
    if abs(x) < CGF_SERIES_SWITCH:
        return _cgf_series(p, x, 0)
    y = p.eta * p.rho_bar * x / 2.0
    return p.v0 / p.eta * x * math.sin(y) / math.cos(y + math.asin(p.rho))


def heston_limiting_cgf_d1(p: HestonParams, x: float) -> float:
    _cgf_check(p, x)
    if abs(x) < CGF_SERIES_SWITCH:
        return _cgf_series(p, x, 1)
    c = p.eta * p.rho_bar / 2.0
    y = c * x
    cs = math.cos(y + math.asin(p.rho))
    return p.v0 / p.eta * (math.sin(y) / cs + c * p.rho_bar * x / cs**2)


def heston_limiting_cgf_d2(p: HestonParams, x: float) -> float:
    _cgf_check(p, x)
    if abs(x) < CGF_SERIES_SWITCH:
        return _cgf_series(p, x, 2)
    c = p.eta * p.rho_bar / 2.0
    y = c * x
    phase = y + math.asin(p.rho)
    cs = math.cos(phase)
    return p.v0 / p.eta * 2.0 * c * p.rho_bar * (1.0 / cs**2 + c * x * math.sin(phase) / cs**3)


def heston_energy_maximizer(p: HestonParams, k: float, max_iter: int = 200) -> float:
    """x*(k) solving Gamma'(x) = k, by Newton safeguarded with a bracket."""
    lo, hi = heston_cgf_domain(p)
    if k == 0.0:
        return 0.0
    if not math.isfinite(k):
        raise DomainError("k must be finite")
    # Gamma' increases from -inf to +inf across the domain
    if k > 0:
        a, b = 0.0, hi
    else:
        a, b = lo, 0.0
    x = k / p.v0
    if not a < x < b:
        x = 0.5 * (a + b)
    for _ in range(max_iter):
        fx = heston_limiting_cgf_d1(p, x) - k
        if fx > 0:
            b = x
        else:
            a = x
        if fx == 0.0 or (b - a) <= 2e-16 * max(1.0, abs(x)):
            return x
        step = fx / heston_limiting_cgf_d2(p, x)
        new = x - step
        if not a < new < b:
            new = 0.5 * (a + b)
        if abs(new - x) <= 1e-16 * max(abs(x), 1e-300):
            return new
        x = new
    raise ConvergenceError(f"Legendre maximizer did not converge for k={k}")


def heston_energy(p: HestonParams, k: float) -> float:
    """Lambda_He(k) = sup_x (k x - Gamma(x))."""
    x = heston_energy_maximizer(p, k)
    if x == 0.0:
        return 0.0
    return k * x - heston_limiting_cgf(p, x)


def heston_energy_derivs(p: HestonParams) -> EnergyData:
    g = CgfDerivatives(
        g2=p.v0,
        g3=1.5 * p.v0 * p.eta * p.rho,
        g4=p.v0 * p.eta**2 * (2.0 * p.rho**2 + 1.0),
    )
    e = legendre_derivatives(g)
    return EnergyData(lam2=e.lam2, lam3=e.lam3, lam4=e.lam4, gamma0=1.0 / (_SQRT_2PI * p.sigma0))


def heston_atm_variance_slope(p: HestonParams) -> float:
    """a(0) in sigma_imp^2(0, t) = v0 + a(0) t + o(t)."""
    return (-(p.eta**2) / 12.0 * (1.0 - p.rho**2 / 4.0)
            + p.v0 * p.rho * p.eta / 4.0
            + p.kappa / 2.0 * (p.vbar - p.v0))
