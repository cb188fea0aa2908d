"""Regime boundaries of ``x = 2n pi`` in the (l, m) plane.

``h2`` separates "stable for every delay" from the stability switch: there
``g(tau) - tau`` first touches zero.  ``h1`` separates the stability switch
from a single stable region: the second fixed point of ``g`` leaves the
scanned delay range.  Since that is a limit statement, ``h1`` is defined
relative to a scan horizon ``T_max`` and every result carries its horizon.
"""

from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .core import check_order
from .stability import DEFAULT_GRID, DEFAULT_TMAX, critical_delay_g, g_curve, scan_grid

__all__ = [
    "Which",
    "BracketError",
    "BifurcationCurve",
    "min_gap",
    "tangency_threshold_h2",
    "escape_threshold_h1",
    "trace_curve",
]


class Which(str, enum.Enum):
    H1 = "h1"
    H2 = "h2"

    @classmethod
    def parse(cls, value) -> "Which":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


class BracketError(ValueError):
    pass


@dataclass
class BifurcationCurve:
    alpha: float
    which: Which
    samples: list = field(default_factory=list)  # (l, m) pairs
    horizon: float = DEFAULT_TMAX
    gaps: list = field(default_factory=list)  # l values where the bracket failed
    tolerances: dict = field(default_factory=dict)

    @property
    def l(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    @property
    def m(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples])

    def metadata(self) -> dict:
        return {
            "alpha": self.alpha,
            "which": self.which.value,
            "T_max": self.horizon,
            "tolerances": dict(self.tolerances),
            "gaps": list(self.gaps),
        }

    def to_csv(self) -> str:
        lines = ["# " + json.dumps(self.metadata(), sort_keys=True), "l,m"]
        lines += [f"{a!r},{b!r}" for a, b in self.samples]
        return "\n".join(lines) + "\n"


def min_gap(l: float, m: float, alpha: float, t_max: float = DEFAULT_TMAX,
            grid_points: int = DEFAULT_GRID) -> float:
    """Minimum of ``g(tau) - tau`` over ``(0, t_max]``, grid plus local refinement."""
    taus = scan_grid(t_max, grid_points)
    d = g_curve(l, m, alpha, taus) - taus
    i = int(np.argmin(d))
    if i in (0, len(taus) - 1):
        return float(d[i])
    res = minimize_scalar(lambda t: critical_delay_g(l, m, alpha, t) - t,
                          bounds=(taus[i - 1], taus[i + 1]), method="bounded",
                          options={"xatol": 1e-10 * max(1.0, taus[i])})
    return float(min(res.fun, d[i]))


def _bisect(pred, lo, hi, rtol):
    """Boundary between ``pred(lo)`` and ``pred(hi)`` (which must differ).

    The result is the midpoint of the cell of a fixed binary lattice (spacing
    below ``rtol`` relative) that contains the boundary, so it does not
    depend on the starting bracket.
    """
    p_lo = pred(lo)
    if pred(hi) == p_lo:
        raise BracketError(f"predicate has the same value at m={lo!r} and m={hi!r}")
    while hi - lo > rtol * 0.5 * (lo + hi):
        mid = 0.5 * (lo + hi)
        if pred(mid) == p_lo:
            lo = mid
        else:
            hi = mid
    m = 0.5 * (lo + hi)
    step = 2.0 ** (math.floor(math.log2(m)) - math.ceil(-math.log2(rtol)) - 1)
    j = math.floor(m / step)
    for _ in range(64):
        a = pred(j * step) == p_lo
        b = pred((j + 1) * step) == p_lo
        if a and not b:
            return (j + 0.5) * step
        j += 1 if a else -1
    raise BracketError("predicate is not monotone near the threshold")


def _widen(pred, lo, hi, below, tries=6):
    """Shift ``[lo, hi]`` by factors of 2 until it straddles the threshold.

    ``below`` is the predicate value for ``m`` under the threshold.
    """
    for _ in range(tries + 1):
        p_lo, p_hi = pred(lo), pred(hi)
        if p_lo != p_hi:
            return lo, hi
        if p_lo == below:
            lo, hi = hi, 2.0 * hi
        else:
            lo, hi = 0.5 * lo, lo
    raise BracketError(f"could not bracket the threshold (last bracket [{lo!r}, {hi!r}])")


def _require_h2_regime(alpha):
    if alpha >= 0.5:
        raise ValueError(
            f"alpha={alpha} >= 1/2: g(tau) always meets tau once, the tangency curve does not exist")


def tangency_threshold_h2(l: float, alpha: float, m_bracket: Optional[tuple] = None,
                          t_max: float = DEFAULT_TMAX, grid_points: int = DEFAULT_GRID,
                          rtol: float = 1e-6, widen: bool = False) -> float:
    """Smallest ``m`` at which ``g`` reaches the diagonal on ``(0, t_max]``."""
    alpha = check_order(alpha)
    _require_h2_regime(alpha)

    def touches(m, n=grid_points):
        return min_gap(l, m, alpha, t_max, n) <= 0.0

    if m_bracket is None:
        m_bracket, widen = (0.5 * l, 4.0 * l), True
    lo, hi = m_bracket
    if widen:
        lo, hi = _widen(touches, lo, hi, below=False)
    m_star = _bisect(touches, lo, hi, rtol)
    # the final cell is re-decided at doubled scan resolution
    fine = lambda m: touches(m, 2 * grid_points)
    a, b = m_star * (1 - 4 * rtol), m_star * (1 + 4 * rtol)
    if fine(a) != fine(b):
        m_star = _bisect(fine, a, b, rtol)
    return m_star


def escape_threshold_h1(l: float, alpha: float, m_bracket: Optional[tuple] = None,
                        t_max: float = DEFAULT_TMAX, rtol: float = 1e-4,
                        widen: bool = False) -> float:
    """Largest ``m`` for which the second fixed point of ``g`` lies below ``t_max``.

    Above the tangency threshold ``g - tau`` is negative somewhere; the second
    fixed point exists within the horizon iff ``g(t_max) > t_max``.
    """
    alpha = check_order(alpha)
    _require_h2_regime(alpha)

    def second_root_inside(m):
        return critical_delay_g(l, m, alpha, t_max) - t_max > 0.0

    if m_bracket is None:
        start = tangency_threshold_h2(l, alpha, t_max=t_max, rtol=1e-6) * (1 + 1e-3)
        m_bracket, widen = (start, 2.0 * start), True
    lo, hi = m_bracket
    if widen:
        lo, hi = _widen(second_root_inside, lo, hi, below=True)
    return _bisect(second_root_inside, lo, hi, rtol)


def _threshold(which, l, alpha, bracket, t_max):
    try:
        if which is Which.H2:
            return tangency_threshold_h2(l, alpha, bracket, t_max=t_max, widen=True)
        return escape_threshold_h1(l, alpha, bracket, t_max=t_max, widen=True)
    except BracketError:
        return None


def _threshold_cold(args):
    which, l, alpha, t_max = args
    return _threshold(which, l, alpha, None, t_max)


def trace_curve(alpha: float, l_range: tuple, n_points: int, which="h2",
                t_max: float = DEFAULT_TMAX, workers: int = 1) -> BifurcationCurve:
    """Sample ``m = h(l)`` on an even grid of ``l``.

    Serially each bracket is warm-started from the previous threshold; with
    ``workers > 1`` every point is computed cold in a process pool.  Bracket
    failures become gaps instead of errors.
    """
    alpha = check_order(alpha)
    which = Which.parse(which)
    _require_h2_regime(alpha)
    if which is Which.H1 and alpha < 0.4:
        raise ValueError(f"alpha={alpha} < 0.4: no single-stable region, h1 is not traced")
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    lo, hi = l_range
    if not 0 < lo < hi:
        raise ValueError("l_range must satisfy 0 < lo < hi")
    ls = np.linspace(lo, hi, n_points).tolist()

    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            values = list(ex.map(_threshold_cold, [(which, l, alpha, t_max) for l in ls]))
    else:
        values = []
        prev = None
        for l in ls:
            bracket = None
            if prev is not None:
                guess = prev[1] * l / prev[0]
                bracket = (0.8 * guess, 1.25 * guess)
            m_star = _threshold(which, l, alpha, bracket, t_max)
            if m_star is not None:
                prev = (l, m_star)
            values.append(m_star)

    curve = BifurcationCurve(alpha, which, horizon=float(t_max),
                             tolerances={"rtol": 1e-6 if which is Which.H2 else 1e-4})
    for l, m_star in zip(ls, values):
        if m_star is None:
            curve.gaps.append(l)
        else:
            curve.samples.append((l, m_star))
    return curve
