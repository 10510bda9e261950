"""Central finite differences with Richardson extrapolation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .errors import ConvergenceError

__all__ = ["FDResult", "fd_derivatives"]

_EPS = 2.0**-52

# central stencils (offsets in units of h, weights, power of h), all O(h^2)
_STENCILS = {
    1: ((-1, 1), (-0.5, 0.5), 1),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0), 2),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5), 3),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0), 4),
}


@dataclass
class FDResult:
    x0: float
    step: float
    values: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    def __getitem__(self, order: int) -> float:
        return self.values[order]

    def as_list(self) -> list:
        return [self.values[o] for o in sorted(self.values)]


def fd_derivatives(
    f: Callable[[float], float],
    x0: float,
    orders: Iterable[int] = (1, 2, 3, 4),
    step: float | None = None,
    levels: int = 3,
) -> FDResult:
    """Derivatives of ``f`` at ``x0`` for the requested orders (subset of 1..4).

    Each order uses its central stencil at steps h, h/2, ..., h/2^(levels-1) and a
    Richardson tableau on the h^2 error expansion. The error estimate is the
    larger of the last tableau correction and the rounding error of the finest
    stencil amplified by the tableau.
    """
    orders = sorted(set(orders))
    if not orders or not set(orders) <= set(_STENCILS):
        raise ValueError(f"orders must be a non-empty subset of 1..4, got {orders}")
    h0 = step if step is not None else 1e-2 * max(1.0, abs(x0))
    cache: dict = {}

    def fx(offset_h: float) -> float:
        if offset_h not in cache:
            value = float(f(x0 + offset_h))
            if not math.isfinite(value):
                raise ConvergenceError(f"non-finite function value at x = {x0 + offset_h}")
            cache[offset_h] = value
        return cache[offset_h]

    out = FDResult(x0=x0, step=h0)
    for order in orders:
        offsets, weights, power = _STENCILS[order]
        row = []
        noise = 0.0
        for level in range(levels):
            h = h0 / 2**level
            row.append(math.fsum(w * fx(o * h) for o, w in zip(offsets, weights)) / h**power)
            noise = _EPS * math.fsum(abs(w * fx(o * h)) for o, w in zip(offsets, weights)) / h**power
        tableau = [row]
        for j in range(1, levels):
            prev = tableau[-1]
            factor = 4.0**j
            tableau.append([(factor * prev[i + 1] - prev[i]) / (factor - 1) for i in range(len(prev) - 1)])
        best = tableau[-1][0]
        # each tableau column at most doubles the rounding of its inputs
        rounding = noise * 2.0 ** (levels - 1)
        if levels > 1:
            err = max(abs(best - tableau[-2][-1]), rounding)
        else:
            err = math.inf
        out.values[order] = best
        out.errors[order] = err
    return out
