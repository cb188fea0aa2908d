"""Predictor-corrector integrator for the fractional sunflower equation.

The model is

    (tau/l) D^{2a} x(t) + D^a x(t) = -(m/l) sin(x(t - tau)),   0 < a <= 1,

with Caputo derivatives.  It is rewritten as a Volterra equation by applying
the order-2a fractional integral and discretised on the uniform grid
``t_j = j h`` with ``h = tau / k``, so a delay is exactly ``k`` steps.  Each
step evaluates the two memory sums once (predictor), then applies the
decomposition-based corrector.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _backend
from .core import check_order, gamma_fn, weight_table

__all__ = [
    "SystemParams",
    "InitialData",
    "SolverConfig",
    "RhsKind",
    "Trajectory",
    "DivergenceError",
    "integrate",
    "delayed_pairs",
    "tail",
]

DIVERGENCE_CUTOFF = 1e8


@dataclass(frozen=True)
class SystemParams:
    l: float
    m: float
    alpha: float
    tau: float

    def __post_init__(self):
        for name in ("l", "m", "tau"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")
        check_order(self.alpha)

    def as_dict(self) -> dict:
        return {"l": self.l, "m": self.m, "alpha": self.alpha, "tau": self.tau}


@dataclass(frozen=True)
class InitialData:
    """Initial function on ``(-tau, 0]``.

    ``history`` optionally tabulates the initial function as ``(times,
    values)`` with times in ``[-tau, 0]``; it is linearly interpolated onto
    the grid and then overrides ``history_value``.  ``x0`` defaults to the
    history at ``t = 0``.
    """

    history_value: float = 0.0
    x0: Optional[float] = None
    x0_prime: Optional[float] = None
    history: Optional[tuple[Sequence[float], Sequence[float]]] = None

    def initial_value(self) -> float:
        if self.x0 is not None:
            return float(self.x0)
        if self.history is not None:
            ts, xs = self.history
            return float(np.interp(0.0, ts, xs))
        return float(self.history_value)


@dataclass(frozen=True)
class SolverConfig:
    k: int = 100
    T: float = 100.0
    corrector_sweeps: int = 1
    # z-predictor coefficient: Gamma(alpha+2) (default) or the printed (alpha+2)
    literal_z_coefficient: bool = False
    # integrate the deviation from the equilibrium nearest to x0
    shift_to_equilibrium: bool = True
    # "npcm": predictor, z-predictor, one corrector (as published);
    # "exact": solve the discrete equation, which is linear in x_{n+1}
    scheme: str = "npcm"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if not (math.isfinite(self.T) and self.T > 0):
            raise ValueError(f"T must be positive, got {self.T!r}")
        if int(self.corrector_sweeps) != self.corrector_sweeps or self.corrector_sweeps < 1:
            raise ValueError("corrector_sweeps must be a positive integer")
        if self.scheme not in ("npcm", "exact"):
            raise ValueError(f"scheme must be 'npcm' or 'exact', got {self.scheme!r}")

    def step(self, tau: float) -> float:
        return tau / self.k

    def n_steps(self, tau: float) -> int:
        return max(1, int(round(self.T / self.step(tau))))

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "T": self.T,
            "corrector_sweeps": self.corrector_sweeps,
            "literal_z_coefficient": self.literal_z_coefficient,
            "shift_to_equilibrium": self.shift_to_equilibrium,
            "scheme": self.scheme,
        }


class RhsKind(enum.Enum):
    NonlinearSine = "sine"
    LinearNearX1 = "linear-x1"
    LinearNearX2 = "linear-x2"

    @classmethod
    def parse(cls, value) -> "RhsKind":
        if isinstance(value, cls):
            return value
        for kind in cls:
            if value in (kind.value, kind.name):
                return kind
        raise ValueError(f"unknown right-hand side {value!r}")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled solution.

    ``origin`` is the array index of ``t = 0``; ``lag`` is the delay in
    samples.  Tails produced by :func:`tail` keep ``lag`` but have
    ``origin = 0`` (their first sample is wherever the tail starts).
    """

    t: np.ndarray
    x: np.ndarray
    params: SystemParams
    config: SolverConfig
    rhs: RhsKind = RhsKind.NonlinearSine
    origin: int = 0
    lag: int = 0
    diverged_at: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.t) != len(self.x):
            raise ValueError("t and x must have equal length")
        for a in (self.t, self.x):
            a.setflags(write=False)

    def __len__(self):
        return len(self.x)

    @property
    def h(self) -> float:
        return self.params.tau / self.config.k

    def header(self) -> str:
        p = self.params
        c = self.config
        parts = [
            f"l={p.l!r}", f"m={p.m!r}", f"alpha={p.alpha!r}", f"tau={p.tau!r}",
            f"k={c.k}", f"T={c.T!r}", f"scheme={c.scheme}", f"corrector_sweeps={c.corrector_sweeps}",
            f"rhs={self.rhs.value}",
        ]
        parts += [f"{key}={val!r}" for key, val in sorted(self.meta.items())]
        if self.diverged_at is not None:
            parts.append(f"diverged_at={self.diverged_at}")
        return "# " + " ".join(parts)

    def to_csv(self, fh=None) -> Optional[str]:
        """Write ``t,x`` CSV with a ``#`` metadata line; returns text if no handle."""
        out = fh if fh is not None else io.StringIO()
        out.write(self.header() + "\n")
        out.write("t,x\n")
        for ti, xi in zip(self.t.tolist(), self.x.tolist()):
            out.write(f"{ti!r},{xi!r}\n")
        if fh is None:
            return out.getvalue()
        return None


class DivergenceError(ArithmeticError):
    """Raised when the solution leaves ``|x| <= 1e8`` or becomes non-finite.

    ``trajectory`` holds every sample computed before the blow-up.
    """

    def __init__(self, step: int, trajectory: Trajectory):
        super().__init__(f"solution diverged at step {step} (t = {step * trajectory.h:.6g})")
        self.step = step
        self.trajectory = trajectory


def _history_grid(params: SystemParams, init: InitialData, k: int, h: float) -> np.ndarray:
    times = (np.arange(k + 1) - k) * h
    if init.history is not None:
        ts, xs = (np.asarray(a, dtype=float) for a in init.history)
        if ts.ndim != 1 or ts.shape != xs.shape or len(ts) < 2:
            raise ValueError("tabulated history needs two equal-length 1-d arrays")
        order = np.argsort(ts)
        hist = np.interp(times, ts[order], xs[order])
    else:
        hist = np.full(k + 1, float(init.history_value))
    hist[k] = init.initial_value()
    return hist


def integrate(params: SystemParams, init: InitialData, config: SolverConfig,
              rhs=RhsKind.NonlinearSine, backend: Optional[str] = None) -> Trajectory:
    """Integrate the model (or one of its linearisations) on ``[-tau, T]``.

    ``rhs`` selects ``-(m/l) sin(x(t-tau))`` or the linear right-hand sides
    ``-(m/l) x(t-tau)`` / ``+(m/l) x(t-tau)``.  Raises
    :class:`DivergenceError` (carrying the partial trajectory) when the
    solution blows up.
    """
    rhs = RhsKind.parse(rhs)
    l, m, alpha, tau = params.l, params.m, params.alpha, params.tau
    if alpha >= 0.5 and init.x0_prime is None:
        raise ValueError("x0_prime is required when alpha >= 1/2")
    k = int(config.k)
    h = config.step(tau)
    N = config.n_steps(tau)

    hist = _history_grid(params, init, k, h)
    x0 = hist[k]

    # translate so the equilibrium nearest x0 sits at the origin; sin picks up
    # the sign (-1)^j of that shift j*pi
    shift = 0.0
    sign = 1.0
    if rhs is RhsKind.NonlinearSine and config.shift_to_equilibrium:
        j = int(round(x0 / math.pi))
        shift = j * math.pi
        sign = -1.0 if j % 2 else 1.0
    elif rhs is RhsKind.LinearNearX2:
        sign = -1.0
    mode = 0 if rhs is RhsKind.NonlinearSine else 1

    X = np.empty(k + N + 1)
    X[: k + 1] = hist - shift
    FX = np.empty_like(X)
    if mode == 0:
        FX[: k + 1] = sign * np.sin(X[: k + 1])
    else:
        FX[: k + 1] = sign * X[: k + 1]

    ta = weight_table(alpha, N)
    tb = weight_table(2.0 * alpha, N)
    tgrid = np.arange(N + 1) * h
    y0 = x0 - shift
    drift = y0 * (1.0 + l * np.power(tgrid, alpha) / (tau * gamma_fn(alpha + 1.0)))
    if alpha >= 0.5:
        drift = drift + tgrid * float(init.x0_prime)

    c1 = (l / tau) * h ** alpha / gamma_fn(alpha + 2.0)
    c2 = (m / tau) * h ** (2.0 * alpha) / gamma_fn(2.0 * alpha + 2.0)
    cz = (l / tau) * h ** alpha / (alpha + 2.0) if config.literal_z_coefficient else c1

    run = _backend.get_run_scheme(backend)
    bad = run(X, FX, k, N, ta.first, ta.interior, tb.first, tb.interior, drift,
              c1, c2, cz, mode, sign, int(config.corrector_sweeps), DIVERGENCE_CUTOFF,
              1 if config.scheme == "exact" else 0)

    t = (np.arange(k + N + 1) - k) * h
    if bad >= 0:
        stop = k + bad  # keep the offending value out of the returned samples
        traj = Trajectory(t[:stop].copy(), X[:stop] + shift, params, config, rhs,
                          origin=k, lag=k, diverged_at=int(bad))
        raise DivergenceError(int(bad), traj)
    return Trajectory(t, X + shift, params, config, rhs, origin=k, lag=k)


def delayed_pairs(traj: Trajectory) -> np.ndarray:
    """``(x(t - tau), x(t))`` for every grid time ``t >= 0``; shape ``(n, 2)``."""
    k = traj.lag
    start = max(traj.origin, k)
    if k < 1 or len(traj) <= start:
        raise ValueError("trajectory is shorter than one delay")
    x = traj.x
    return np.column_stack((x[start - k : len(x) - k], x[start:]))


def pairs_to_csv(pairs: np.ndarray, header: str = "") -> str:
    lines = [header] if header else []
    lines.append("x_delayed,x")
    lines += [f"{a!r},{b!r}" for a, b in pairs.tolist()]
    return "\n".join(lines) + "\n"


def tail(traj: Trajectory, fraction: float) -> Trajectory:
    """Last ``ceil(fraction * N)`` samples, ``N`` = number of steps after t = 0."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction!r}")
    n_post = len(traj) - 1 - traj.origin
    count = math.ceil(fraction * n_post)
    if count < 1:
        raise ValueError("tail would be empty")
    return Trajectory(traj.t[-count:].copy(), traj.x[-count:].copy(), traj.params,
                      traj.config, traj.rhs, origin=0, lag=traj.lag,
                      diverged_at=traj.diverged_at, meta=dict(traj.meta))
