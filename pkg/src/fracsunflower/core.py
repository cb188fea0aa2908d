"""Special functions and product-trapezoidal quadrature weights.

The integrator needs fractional integrals of two orders (``alpha`` and
``2*alpha``).  Both are discretised with the same product trapezoidal rule,
so the weight formulas below are shared and parametrised by the order.
"""

from __future__ import annotations

import cmath
import math
from functools import lru_cache

import numpy as np

__all__ = [
    "check_order",
    "gamma_fn",
    "complex_power",
    "weight_a",
    "weight_b",
    "WeightTable",
    "weight_table",
]


def check_order(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha <= 1.0) or not math.isfinite(alpha):
        raise ValueError(f"fractional order must lie in (0, 1], got {alpha!r}")
    return alpha


def gamma_fn(x: float) -> float:
    """Euler gamma function for positive real arguments."""
    x = float(x)
    if not x > 0.0:
        raise ValueError(f"gamma_fn is only defined here for x > 0, got {x!r}")
    return math.gamma(x)


def complex_power(z: complex, p: float) -> complex:
    """Principal-branch power ``z**p = exp(p * Log z)``.

    ``Arg z`` is taken in ``(-pi, pi]``.  ``0**p`` is 0 for ``p > 0`` and
    undefined otherwise.
    """
    z = complex(z)
    if z == 0:
        if p > 0:
            return 0j
        raise ValueError("complex_power(0, p) requires p > 0")
    return cmath.exp(p * cmath.log(z))


def _pow(base: float, p: float) -> float:
    # base is a non-negative integer-valued float here
    if base == 0.0:
        return 0.0
    return math.exp(p * math.log(base))


def _weight(j: int, n: int, order: float) -> float:
    if not (0 <= j <= n + 1):
        raise IndexError(f"weight index j={j} outside 0..{n + 1}")
    if j == n + 1:
        return 1.0
    q = order + 1.0
    if j == 0:
        return _pow(n, q) - (n - order) * _pow(n + 1, order)
    d = n - j
    return _pow(d + 2, q) + _pow(d, q) - 2.0 * _pow(d + 1, q)


def weight_a(j: int, n: int, alpha: float) -> float:
    """Weight ``a_{j,n+1}`` of the order-``alpha`` product trapezoidal rule."""
    if n < 0:
        raise IndexError(f"step index n must be >= 0, got {n}")
    return _weight(j, n, check_order(alpha))


def weight_b(j: int, n: int, alpha: float) -> float:
    """Weight ``b_{j,n+1}``: same rule as :func:`weight_a` at order ``2*alpha``."""
    if n < 0:
        raise IndexError(f"step index n must be >= 0, got {n}")
    return _weight(j, n, 2.0 * check_order(alpha))


class WeightTable:
    """All weights of one order needed for ``n = 0 .. size-1``.

    The interior weights only depend on ``d = n - j`` so a single vector
    ``interior[d]`` (``d = 0 .. size-2``) serves every step; the ``j = 0``
    weight is stored per step in ``first[n]``.  The ``j = n+1`` weight is 1.
    """

    __slots__ = ("order", "size", "first", "interior")

    def __init__(self, order: float, size: int):
        if size < 1:
            raise ValueError("weight table size must be >= 1")
        self.order = float(order)
        self.size = int(size)
        q = self.order + 1.0
        n = np.arange(size, dtype=np.float64)
        first = np.power(n, q) - (n - self.order) * np.power(n + 1.0, self.order)
        d = np.arange(max(size - 1, 0), dtype=np.float64)
        interior = np.power(d + 2.0, q) + np.power(d, q) - 2.0 * np.power(d + 1.0, q)
        first.setflags(write=False)
        interior.setflags(write=False)
        self.first = first
        self.interior = interior

    def row(self, n: int) -> np.ndarray:
        """Full weight row ``[w_0, ..., w_{n+1}]`` for step ``n``."""
        if not 0 <= n < self.size:
            raise IndexError(f"step index {n} outside table of size {self.size}")
        out = np.empty(n + 2)
        out[0] = self.first[n]
        if n:
            out[1 : n + 1] = self.interior[:n][::-1]
        out[n + 1] = 1.0
        return out


@lru_cache(maxsize=16)
def weight_table(order: float, size: int) -> WeightTable:
    return WeightTable(order, size)
