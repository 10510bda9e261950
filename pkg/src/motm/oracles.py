"""Independent numerical oracles: Monte Carlo, Dupire local volatility by finite
differences, the Laplace time-integral price and finite-difference derivatives."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .bs import OptionQuery
from .config import ModelSpec
from .energy import EnergyData
from .errors import ConvergenceError, DomainError, UnsupportedOrderError
from .finite_diff import FDResult, fd_derivatives
from .result import OracleResult

__all__ = [
    "MCConfig",
    "mc_price",
    "dupire_local_vol",
    "laplace_integral_price",
    "fd_derivatives",
    "FDResult",
    "OracleResult",
]

SCHEMES = ("full_truncation_euler",)
LAPLACE_CONCENTRATION_MIN = 2.0


@dataclass(frozen=True)
class MCConfig:
    """Monte Carlo controls. ``steps`` is the number of time steps per unit time.

    Paths are simulated in fixed blocks of ``block_size``, block i drawing from
    its own stream spawned from ``seed``; results therefore do not depend on how
    blocks are distributed over threads.
    """

    paths: int
    steps: int
    seed: int = 0
    scheme: str = "full_truncation_euler"
    antithetic: bool = False
    block_size: int = 1 << 15

    def __post_init__(self):
        if self.paths < 1 or self.steps < 1:
            raise DomainError("paths and steps must be at least 1")
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}, expected one of {SCHEMES}")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.block_size < 2 or self.block_size % 2:
            raise DomainError("block_size must be even and at least 2")
        if self.antithetic and self.paths % 2:
            raise DomainError("antithetic sampling needs an even number of paths")

    def n_steps(self, t: float) -> int:
        return max(1, math.ceil(self.steps * t - 1e-9))


def _simulate_log_spot(spec: ModelSpec, t: float, n_steps: int, normals) -> np.ndarray:
    """Terminal log spot for each path; ``normals(d)`` draws (n_steps, paths) arrays."""
    m = spec.model()
    if spec.kind == "bs":
        z = normals(1)[0][0]
        s = m.sigma * math.sqrt(t)
        return -0.5 * s * s + s * z
    dt = t / n_steps
    sq = math.sqrt(dt)
    if spec.kind == "heston":
        z1, z2 = normals(2)
        x = np.zeros(z1.shape[1])
        v = np.full_like(x, m.v0)
        rb = m.rho_bar
        for i in range(n_steps):
            vp = np.maximum(v, 0.0)
            root = np.sqrt(vp) * sq
            x += -0.5 * vp * dt + root * z1[i]
            v += m.kappa * (m.vbar - vp) * dt + m.eta * root * (m.rho * z1[i] + rb * z2[i])
        return x
    if spec.kind == "localvol_power":
        (z,) = normals(1)
        x = np.zeros(z.shape[1])
        for i in range(n_steps):
            sig = m.sigma_fn(np.exp(x))
            x += -0.5 * sig * sig * dt + sig * sq * z[i]
        return x
    raise DomainError(f"Monte Carlo needs a fully specified drift; not available for '{spec.kind}'")


def _block_stats(spec, q: OptionQuery, cfg: MCConfig, digital: bool, index: int, n: int):
    """Mean, sum of squared deviations and count of the samples of one block."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed, spawn_key=(index,))))
    t = q.maturity
    n_steps = cfg.n_steps(t)
    k = q.k
    half = n // 2 if cfg.antithetic else n

    def normals(d):
        z = rng.standard_normal((d, n_steps if spec.kind != "bs" else 1, half))
        return np.concatenate([z, -z], axis=2) if cfg.antithetic else z

    x = _simulate_log_spot(spec, t, n_steps, normals)
    if digital:
        payoff = (x >= k).astype(float)
    else:
        payoff = q.spot * np.maximum(np.exp(x) - math.exp(k), 0.0)
    if cfg.antithetic:
        payoff = 0.5 * (payoff[:half] + payoff[half:])
    mean = float(payoff.mean())
    return mean, float(np.sum((payoff - mean) ** 2)), payoff.size


def _combine(stats) -> tuple:
    """Merge block statistics in the given order (parallel-variance formula)."""
    mean, m2, count = 0.0, 0.0, 0
    for b_mean, b_m2, b_n in stats:
        total = count + b_n
        delta = b_mean - mean
        mean += delta * b_n / total
        m2 += b_m2 + delta * delta * count * b_n / total
        count = total
    return mean, m2, count


def mc_price(spec: ModelSpec, q: OptionQuery, cfg: MCConfig, digital: bool = False,
             threads: int = 1) -> OracleResult:
    """Monte Carlo call value (or P[X_t >= k] with ``digital``) with its standard error."""
    if not q.maturity > 0:
        raise DomainError("Monte Carlo pricing needs positive maturity")
    sizes = []
    remaining = cfg.paths
    while remaining > 0:
        sizes.append(min(cfg.block_size, remaining))
        remaining -= sizes[-1]
    jobs = [(i, n) for i, n in enumerate(sizes)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            stats = list(pool.map(lambda job: _block_stats(spec, q, cfg, digital, *job), jobs))
    else:
        stats = [_block_stats(spec, q, cfg, digital, *job) for job in jobs]
    mean, m2, count = _combine(stats)
    std_err = math.sqrt(m2 / (count - 1) / count) if count > 1 else math.inf
    return OracleResult(value=mean, error_estimate=std_err, meta={
        "paths": cfg.paths, "samples": count, "steps": cfg.n_steps(q.maturity),
        "seed": cfg.seed, "antithetic": cfg.antithetic, "digital": digital})


def _dupire_once(pricer, strike: float, t: float, dk: float, dt: float) -> float:
    c_k = pricer(strike, t)
    c_up, c_dn = pricer(strike + dk, t), pricer(strike - dk, t)
    d_kk = (c_up - 2.0 * c_k + c_dn) / (dk * dk)
    d_t = (pricer(strike, t + dt) - pricer(strike, t - dt)) / (2.0 * dt)
    if not d_kk > 0:
        raise ConvergenceError(
            f"second strike derivative {d_kk} is not positive at K={strike}, t={t}; "
            "reduce the step or the pricer noise")
    if not d_t >= 0:
        raise ConvergenceError(f"negative calendar derivative {d_t} at K={strike}, t={t}")
    return math.sqrt(d_t / (0.5 * strike * strike * d_kk))


def dupire_local_vol(
    pricer: Callable[[float, float], float],
    strike: float,
    t: float,
    dk: Optional[float] = None,
    dt: Optional[float] = None,
) -> OracleResult:
    """sigma_loc(K, t)^2 = dC/dt / (K^2/2 d2C/dK2) from central differences of ``pricer(K, t)``.

    The error estimate is the change when both steps are halved; the returned
    value uses the halved steps.
    """
    if not t > 0 or not strike > 0:
        raise DomainError("Dupire extraction needs positive strike and maturity")
    dk = 1e-3 * strike if dk is None else dk
    dt = 1e-2 * t if dt is None else dt
    if not (dk > 0 and dt > 0) or dt >= t or dk >= strike:
        raise DomainError("finite-difference steps must be positive and smaller than K and t")
    coarse = _dupire_once(pricer, strike, t, dk, dt)
    fine = _dupire_once(pricer, strike, t, 0.5 * dk, 0.5 * dt)
    return OracleResult(value=fine, error_estimate=abs(fine - coarse),
                        meta={"strike": strike, "t": t, "dk": 0.5 * dk, "dt": 0.5 * dt, "coarse": coarse})


def laplace_integral_price(
    energy: Callable[[float], float],
    e: EnergyData,
    k: float,
    t: float,
) -> OracleResult:
    """(sigma0^2 gamma0 / 2) * int_0^t exp(-Lambda(k)/s) s^(-1/2) ds.

    Written as sqrt(t) e^(-L) int_0^1 exp(-L (1/x - 1)) x^(-1/2) dx with
    L = Lambda(k)/t, so the logarithm in ``meta['log_price']`` stays accurate
    when the price underflows. ``meta['warning']`` is set when L < 2, where the
    integral has not yet concentrated at the endpoint.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    if e.gamma0 is None:
        raise UnsupportedOrderError("the Laplace price needs the density prefactor gamma0")
    lam = float(energy(k))
    if not lam > 0:
        raise DomainError(f"energy must be positive at k={k}, got {lam}")
    conc = lam / t

    def integrand(x):
        return math.exp(-conc * (1.0 / x - 1.0)) / math.sqrt(x) if x > 0 else 0.0

    # a break point where the exponent is O(1) helps when the mass sits at x = 1
    points = [conc / (conc + 1.0)] if conc > 1 else None
    integral, err = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200, points=points)
    if not (integral > 0 and err <= 1e-9 * integral):
        raise ConvergenceError(f"Laplace integral did not converge (value {integral}, error {err})")
    log_price = math.log(0.5 * e.spot_variance * e.gamma0) + 0.5 * math.log(t) + math.log(integral) - conc
    value = math.exp(log_price)
    return OracleResult(value=value, error_estimate=value * err / integral, meta={
        "log_price": log_price, "concentration": conc, "warning": conc < LAPLACE_CONCENTRATION_MIN,
        "k": k, "t": t})
