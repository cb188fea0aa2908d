"""Linear stability of the equilibria via imaginary-axis crossings.

Near ``x = 2n pi`` the characteristic function is

    H(lam) = (tau/l) lam^{2a} + lam^a + (m/l) exp(-lam tau),

and near ``x = (2n+1) pi`` the sign of the exponential term flips.  A root
``lam = i v`` exists exactly when

    l^2 w^2 + tau^2 w^4 + 2 l tau cos(a pi/2) w^3 - m^2 = 0,   w = v^a,

which has one positive root.  Because ``tau`` also appears in the
coefficients, the crossing delay is a function ``g(tau)`` of the
coefficient delay and physical crossings are the fixed points
``g(tau) = tau``.
"""

from __future__ import annotations

import cmath
import enum
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .core import check_order, complex_power
from .solver import SystemParams

__all__ = [
    "Classification",
    "CrossingPoint",
    "StabilityVerdict",
    "ComplexRoot",
    "DegenerateCrossingError",
    "ConvergenceError",
    "crossing_frequency",
    "crossing_frequency_array",
    "critical_delay_g",
    "g_curve",
    "crossing_point",
    "boundary_residuals",
    "classify_x1",
    "x2_witness_root",
    "classify_x2",
    "char_function",
    "refine_complex_root",
    "curve_csv",
    "scan_grid",
]

DEFAULT_TMAX = 200.0
DEFAULT_GRID = 20000


class Classification(str, enum.Enum):
    StableForAll = "StableForAll"
    SingleStableRegion = "SingleStableRegion"
    StabilitySwitch = "StabilitySwitch"
    AlwaysUnstable = "AlwaysUnstable"


class DegenerateCrossingError(ArithmeticError):
    """``g(tau) - tau`` touches zero without changing sign."""

    def __init__(self, tau: float, gap: float):
        super().__init__(f"near-tangential contact of g(tau) with tau at tau={tau:.9g} (gap {gap:.3g})")
        self.tau = tau
        self.gap = gap


class ConvergenceError(ArithmeticError):
    def __init__(self, message: str, last_iterate: complex):
        super().__init__(message)
        self.last_iterate = last_iterate


@dataclass(frozen=True)
class CrossingPoint:
    v: float
    tau_star: float


@dataclass(frozen=True)
class ComplexRoot:
    lam: complex
    residual: float
    iterations: int = 0


@dataclass
class StabilityVerdict:
    classification: Classification
    critical_delays: tuple = ()
    scan_horizon: float = DEFAULT_TMAX
    params: dict = field(default_factory=dict)
    multiplicity_warning: bool = False
    witness: Optional[float] = None
    witness_residual: Optional[float] = None

    def to_dict(self) -> dict:
        out = {
            "classification": self.classification.value,
            "critical_delays": list(self.critical_delays),
            "scan_horizon": self.scan_horizon,
            "params": dict(self.params),
        }
        if self.multiplicity_warning:
            out["multiplicity_warning"] = True
        if self.witness is not None:
            out["witness_root"] = self.witness
            out["witness_residual"] = self.witness_residual
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _check_lm(l: float, m: float, alpha: float) -> float:
    if not (l > 0 and m > 0 and math.isfinite(l) and math.isfinite(m)):
        raise ValueError(f"l and m must be positive, got l={l!r}, m={m!r}")
    return check_order(alpha)


# -- crossing frequency -------------------------------------------------------

def _crossing_poly(w, l, m, tau, c):
    return ((tau * tau * w + 2.0 * l * tau * c) * w + l * l) * w * w - m * m


def crossing_frequency(l: float, m: float, alpha: float, tau_coeff: float) -> float:
    """Unique ``v > 0`` with ``H(i v) = 0`` in modulus, for coefficient delay ``tau_coeff``."""
    alpha = _check_lm(l, m, alpha)
    if tau_coeff < 0:
        raise ValueError("tau_coeff must be non-negative")
    c = math.cos(alpha * math.pi / 2)
    lo, hi = 0.0, m / l  # F(0) = -m^2 < 0 <= F(m/l)
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _crossing_poly(mid, l, m, tau_coeff, c) < 0.0:
            lo = mid
        else:
            hi = mid
    flo = abs(_crossing_poly(lo, l, m, tau_coeff, c))
    fhi = abs(_crossing_poly(hi, l, m, tau_coeff, c))
    w = lo if flo < fhi else hi
    return w ** (1.0 / alpha)


def crossing_frequency_array(l: float, m: float, alpha: float, taus) -> np.ndarray:
    """Vectorised :func:`crossing_frequency` over an array of coefficient delays."""
    alpha = _check_lm(l, m, alpha)
    t = np.asarray(taus, dtype=float)
    c = math.cos(alpha * math.pi / 2)
    lo = np.zeros_like(t)
    hi = np.full_like(t, m / l)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        neg = _crossing_poly(mid, l, m, t, c) < 0.0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    w = 0.5 * (lo + hi)
    return w ** (1.0 / alpha)


# -- critical delay map -------------------------------------------------------

def _angle(l, m, alpha, tau, w):
    a2 = alpha * math.pi
    a1 = 0.5 * a2
    C = -(tau * w * w * math.cos(a2) + l * w * math.cos(a1)) / m
    S = (tau * w * w * math.sin(a2) + l * w * math.sin(a1)) / m
    return C, S


def critical_delay_g(l: float, m: float, alpha: float, tau_coeff: float) -> float:
    """Lowest delay ``tau*`` at which ``i v`` is a root when the coefficients use ``tau_coeff``."""
    return crossing_point(l, m, alpha, tau_coeff).tau_star


def crossing_point(l: float, m: float, alpha: float, tau_coeff: float) -> CrossingPoint:
    v = crossing_frequency(l, m, alpha, tau_coeff)
    w = v ** alpha
    C, S = _angle(l, m, alpha, tau_coeff, w)
    if abs(math.hypot(C, S) - 1.0) > 1e-9:
        raise ArithmeticError(f"crossing components off the unit circle: |(C, S)| = {math.hypot(C, S)!r}")
    theta = math.atan2(S, C) % (2.0 * math.pi)
    return CrossingPoint(v=v, tau_star=theta / v)


def g_curve(l: float, m: float, alpha: float, taus) -> np.ndarray:
    """``g(tau)`` evaluated on an array of coefficient delays."""
    t = np.asarray(taus, dtype=float)
    v = crossing_frequency_array(l, m, alpha, t)
    w = v ** alpha
    a2 = alpha * math.pi
    a1 = 0.5 * a2
    C = -(t * w * w * math.cos(a2) + l * w * math.cos(a1)) / m
    S = (t * w * w * math.sin(a2) + l * w * math.sin(a1)) / m
    return np.mod(np.arctan2(S, C), 2.0 * math.pi) / v


def boundary_residuals(l: float, m: float, alpha: float, tau_coeff: float,
                       point: CrossingPoint) -> tuple[float, float]:
    """Residuals of the real and imaginary boundary equations at ``point``."""
    v, ts = point.v, point.tau_star
    w = v ** alpha
    re = (tau_coeff / l) * w * w * math.cos(alpha * math.pi) + w * math.cos(alpha * math.pi / 2) \
        + (m / l) * math.cos(v * ts)
    im = (tau_coeff / l) * w * w * math.sin(alpha * math.pi) + w * math.sin(alpha * math.pi / 2) \
        - (m / l) * math.sin(v * ts)
    return re, im


# -- classification of x = 2n pi ----------------------------------------------

def scan_grid(t_max: float, grid_points: int) -> np.ndarray:
    """Uniform grid on ``(0, t_max]`` preceded by a geometric grid toward 0.

    The first fixed point of ``g`` approaches 0 as ``m/l`` grows, so it can
    sit below the first uniform node.
    """
    first = t_max / grid_points
    near0 = np.geomspace(first * 1e-15, first, 300, endpoint=False)
    return np.concatenate((near0, np.linspace(first, t_max, grid_points)))


def _scan(l, m, alpha, t_max, grid_points):
    taus = scan_grid(t_max, grid_points)
    return taus, g_curve(l, m, alpha, taus) - taus


def _gap(l, m, alpha):
    return lambda t: critical_delay_g(l, m, alpha, t) - t


def classify_x1(l: float, m: float, alpha: float, t_max: float = DEFAULT_TMAX,
                grid_points: int = DEFAULT_GRID, check_tangency: bool = True) -> StabilityVerdict:
    """Classify ``x = 2n pi`` from the fixed points of ``g`` on ``(0, t_max]``."""
    _check_lm(l, m, alpha)
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    if grid_points < 1000:
        raise ValueError("grid_points must be >= 1000")
    taus, d = _scan(l, m, alpha, t_max, grid_points)
    gap = _gap(l, m, alpha)
    sgn = np.sign(d)
    roots = []
    for i in np.flatnonzero(sgn[:-1] * sgn[1:] < 0):
        roots.append(brentq(gap, taus[i], taus[i + 1], xtol=1e-12, rtol=1e-14))
    for i in np.flatnonzero(d == 0.0):
        roots.append(float(taus[i]))
    roots = sorted(set(roots))

    if check_tangency:
        ad = np.abs(d)
        interior = np.flatnonzero((ad[1:-1] <= ad[:-2]) & (ad[1:-1] <= ad[2:])) + 1
        for i in interior:
            if sgn[i - 1] != sgn[i + 1] or sgn[i - 1] != sgn[i] or ad[i] > 1e-3 * max(1.0, taus[i]):
                continue
            res = minimize_scalar(lambda t: abs(gap(t)), bounds=(taus[i - 1], taus[i + 1]),
                                  method="bounded", options={"xatol": 1e-12})
            if res.fun < 1e-7:
                raise DegenerateCrossingError(float(res.x), float(res.fun))

    n = len(roots)
    warn = False
    if n == 0:
        cls = Classification.StableForAll
    elif n == 1:
        cls = Classification.SingleStableRegion
    else:
        cls = Classification.StabilitySwitch
        if n > 2:
            warn = True
            warnings.warn(f"g(tau) = tau has {n} solutions below tau = {t_max}", RuntimeWarning)
    return StabilityVerdict(cls, tuple(roots), float(t_max),
                            {"l": l, "m": m, "alpha": alpha}, multiplicity_warning=warn)


# -- x = (2n+1) pi --------------------------------------------------------------

def _x2_poly(lam, l, m, alpha, tau):
    return (tau / l) * lam ** (2.0 * alpha) + lam ** alpha - (m / l) * math.exp(-lam * tau)


def x2_witness_root(l: float, m: float, alpha: float, tau: float) -> tuple[float, float]:
    """Positive real characteristic root near ``x = (2n+1) pi`` and its residual."""
    alpha = _check_lm(l, m, alpha)
    if tau < 0:
        raise ValueError("tau must be non-negative")
    f = lambda lam: _x2_poly(lam, l, m, alpha, tau)
    hi = 1.0
    while f(hi) <= 0.0:
        hi *= 2.0
    lo = 0.0
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    lam = min((lo, hi), key=lambda z: abs(f(z)) if z > 0 else math.inf)
    return lam, abs(f(lam))


def classify_x2(params: SystemParams) -> StabilityVerdict:
    """``x = (2n+1) pi`` is unstable for every delay; returns a positive real root as witness."""
    lam, res = x2_witness_root(params.l, params.m, params.alpha, params.tau)
    return StabilityVerdict(Classification.AlwaysUnstable, (), 0.0, params.as_dict(),
                            witness=lam, witness_residual=res)


# -- complex roots --------------------------------------------------------------

def char_function(params: SystemParams, lam: complex, sign: int = 1) -> complex:
    """``H(lam)``; ``sign=+1`` near ``2n pi``, ``-1`` near ``(2n+1) pi``."""
    l, m, a, tau = params.l, params.m, params.alpha, params.tau
    return (tau / l) * complex_power(lam, 2 * a) + complex_power(lam, a) \
        + sign * (m / l) * cmath.exp(-lam * tau)


def _char_derivative(params, lam, sign):
    l, m, a, tau = params.l, params.m, params.alpha, params.tau
    return (tau / l) * 2 * a * complex_power(lam, 2 * a - 1) + a * complex_power(lam, a - 1) \
        - sign * tau * (m / l) * cmath.exp(-lam * tau)


def _newton(params, seed, sign, tol, max_iter):
    lam = complex(seed)
    h = char_function(params, lam, sign)
    for it in range(1, max_iter + 1):
        if abs(h) < tol:
            return lam, h, it - 1, False
        step = h / _char_derivative(params, lam, sign)
        t = 1.0
        cand, hc = lam, h
        for _ in range(21):
            trial = lam - t * step
            if trial != 0:
                ht = char_function(params, trial, sign)
                if abs(ht) < abs(h):
                    cand, hc = trial, ht
                    break
            t *= 0.5
        if cand == lam:
            raise ConvergenceError(f"damped Newton stalled (|H| = {abs(h):.3g})", lam)
        crossed = lam.real < 0 and cand.real < 0 and (lam.imag >= 0) != (cand.imag >= 0)
        lam, h = cand, hc
        if crossed:
            return lam, h, it, True
    if abs(h) < tol:
        return lam, h, max_iter, False
    raise ConvergenceError(f"Newton did not converge in {max_iter} iterations (|H| = {abs(h):.3g})", lam)


def refine_complex_root(params: SystemParams, seed: complex, sign: int = 1,
                        tol: float = 1e-12, max_iter: int = 200) -> ComplexRoot:
    """Damped Newton on the characteristic function from ``seed``."""
    if seed == 0:
        raise ValueError("seed must be non-zero")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    lam, h, its, crossed = _newton(params, seed, sign, tol, max_iter)
    if crossed:
        lam, h, its, crossed = _newton(params, complex(seed).conjugate(), sign, tol, max_iter)
        if crossed:
            raise ConvergenceError("iterates keep crossing the branch cut", lam)
    return ComplexRoot(lam=lam, residual=abs(h), iterations=its)


def curve_csv(l: float, m: float, alpha: float, t_max: float = DEFAULT_TMAX,
              points: int = 2000) -> str:
    """``tau,g_tau`` samples for plotting ``g`` against the diagonal."""
    taus = np.linspace(t_max / points, t_max, points)
    g = g_curve(l, m, alpha, taus)
    lines = [f"# l={l!r} m={m!r} alpha={alpha!r} t_max={t_max!r}", "tau,g_tau"]
    lines += [f"{a!r},{b!r}" for a, b in zip(taus.tolist(), g.tolist())]
    return "\n".join(lines) + "\n"
