"""Chaos diagnostics on simulated trajectories.

* :func:`count_cycles` - multiplicity of an asymptotic n-cycle from the
  pattern of successive local maxima.
* :func:`mle` - largest Lyapunov exponent with Wolf's fixed-evolution-time
  procedure on a delay-coordinate reconstruction.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.signal import find_peaks

from .solver import Trajectory

__all__ = [
    "InsufficientDataError",
    "EmbeddingConfig",
    "MleResult",
    "CycleCount",
    "APERIODIC",
    "embed",
    "default_embedding",
    "mle",
    "local_maxima",
    "count_cycles",
]

APERIODIC = "Aperiodic"


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class EmbeddingConfig:
    dimension: int = 3
    lag: int = 25
    theiler_window: int = 100

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError("embedding dimension must be >= 2")
        if self.lag < 1:
            raise ValueError("embedding lag must be >= 1")
        if self.theiler_window < 0:
            raise ValueError("Theiler window must be >= 0")


def default_embedding(traj: Trajectory) -> EmbeddingConfig:
    """Dimension 3, lag of a quarter delay, Theiler window of one delay."""
    k = traj.config.k
    return EmbeddingConfig(dimension=3, lag=max(1, k // 4), theiler_window=k)


@dataclass
class MleResult:
    exponent: float
    pair_count: int
    segments: int
    transient_discarded: float
    evolve_steps: int
    replace_threshold: float
    embedding: EmbeddingConfig
    sample_step: float

    def to_dict(self) -> dict:
        out = asdict(self)
        out["embedding"] = asdict(self.embedding)
        return out


@dataclass
class CycleCount:
    multiplicity: Union[int, str]
    distinct_maxima: list = field(default_factory=list)
    maxima_used: int = 0
    cluster_tol: float = 0.0
    min_prominence: float = 0.0

    @property
    def aperiodic(self) -> bool:
        return self.multiplicity == APERIODIC

    def to_dict(self) -> dict:
        return asdict(self)


def _series(data) -> np.ndarray:
    if isinstance(data, Trajectory):
        return np.asarray(data.x, dtype=float)
    return np.asarray(data, dtype=float)


def embed(series, cfg: EmbeddingConfig) -> np.ndarray:
    """Delay vectors ``(x_i, x_{i+lag}, ..., x_{i+(d-1)lag})``, one per row."""
    x = _series(series)
    span = (cfg.dimension - 1) * cfg.lag
    if len(x) <= span + 10:
        raise InsufficientDataError(
            f"series of length {len(x)} too short for dimension {cfg.dimension}, lag {cfg.lag}")
    count = len(x) - span
    return np.column_stack([x[j * cfg.lag : j * cfg.lag + count] for j in range(cfg.dimension)])


def _nearest(points, target, exclude_lo, exclude_hi, max_index, dmin):
    d = np.sqrt(np.sum((points[:max_index] - target) ** 2, axis=1))
    d[max(exclude_lo, 0) : min(exclude_hi, max_index)] = np.inf
    d[d <= dmin] = np.inf
    j = int(np.argmin(d))
    return j, d[j]


def mle(traj: Trajectory, cfg: Optional[EmbeddingConfig] = None, evolve_steps: int = 10,
        replace_threshold: float = 0.1, min_separation: float = 1e-3,
        max_angle: float = 0.3 * math.pi, transient_discarded: float = 0.0) -> MleResult:
    """Largest Lyapunov exponent (per unit time) of a trajectory tail.

    Distances are measured in the reconstruction; ``replace_threshold`` and
    ``min_separation`` are fractions of the attractor extent (max - min of
    the series).  A neighbour is replaced once its separation exceeds the
    threshold; the replacement is the candidate within the threshold whose
    direction deviates least from the old separation vector (within
    ``max_angle``), or the nearest admissible point if none qualifies.
    """
    if cfg is None:
        cfg = default_embedding(traj)
    x = _series(traj)
    if not np.all(np.isfinite(x)):
        raise ValueError("trajectory contains non-finite values")
    if evolve_steps < 1:
        raise ValueError("evolve_steps must be >= 1")
    pts = embed(x, cfg)
    n = len(pts)
    extent = float(x.max() - x.min())
    if extent == 0.0:
        raise InsufficientDataError("constant series has no attractor extent")
    dmax = replace_threshold * extent
    dmin = min_separation * extent
    W = cfg.theiler_window
    last = n - evolve_steps  # fiducial start indices must leave room to evolve

    i = 0
    j, d0 = _nearest(pts, pts[0], -W, W + 1, last, dmin)
    if not math.isfinite(d0):
        raise InsufficientDataError("no admissible neighbour for the first fiducial point")
    log_sum = 0.0
    evolved = 0
    segments = 0
    replacements = 0
    while i + evolve_steps < n and j + evolve_steps < n:
        i2, j2 = i + evolve_steps, j + evolve_steps
        sep = pts[j2] - pts[i2]
        d1 = float(np.sqrt(sep @ sep))
        if d1 > 0.0 and d0 > 0.0:
            log_sum += math.log(d1 / d0)
            evolved += evolve_steps
            segments += 1
        i = i2
        if i >= last:
            break
        if d1 <= dmax:
            j, d0 = j2, d1
            continue
        # replacement, orientation preserving
        diff = pts[:last] - pts[i]
        dist = np.sqrt(np.sum(diff * diff, axis=1))
        ok = (dist > dmin) & (dist <= dmax)
        ok[max(i - W, 0) : min(i + W + 1, last)] = False
        cand = np.flatnonzero(ok)
        choice = None
        if cand.size and d1 > 0.0:
            cosang = (diff[cand] @ sep) / (dist[cand] * d1)
            ang = np.arccos(np.clip(cosang, -1.0, 1.0))
            best = int(np.argmin(ang))
            if ang[best] <= max_angle:
                choice = int(cand[best])
        if choice is None:
            choice, dist_c = _nearest(pts, pts[i], i - W, i + W + 1, last, dmin)
            if not math.isfinite(dist_c):
                break
        j, d0 = choice, float(dist[choice])
        replacements += 1

    # a periodic orbit may never need a replacement, so reportability counts
    # evolution segments rather than replacements
    if segments < 10:
        raise InsufficientDataError(
            f"only {segments} evolution segments; need at least 10 for a reportable exponent")
    dt = traj.h
    return MleResult(
        exponent=log_sum / (evolved * dt),
        pair_count=replacements,
        segments=segments,
        transient_discarded=transient_discarded,
        evolve_steps=evolve_steps,
        replace_threshold=replace_threshold,
        embedding=cfg,
        sample_step=dt,
    )


def local_maxima(x, min_prominence: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Indices and parabola-refined values of strict local maxima.

    Maxima whose topographic prominence is below ``min_prominence`` are
    dropped; these are shoulders riding on a larger oscillation.
    """
    x = np.asarray(x, dtype=float)
    idx, _ = find_peaks(x, prominence=min_prominence if min_prominence > 0 else None)
    idx = idx[(idx > 0) & (idx < len(x) - 1)]
    ym, y0, yp = x[idx - 1], x[idx], x[idx + 1]
    curv = ym - 2.0 * y0 + yp
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = np.where(curv < 0, (yp - ym) ** 2 / (8.0 * curv), 0.0)
    return idx, y0 - corr


def _clusters(values: np.ndarray, tol: float) -> tuple[np.ndarray, list]:
    order = np.argsort(values, kind="stable")
    labels = np.empty(len(values), dtype=int)
    centers: list = []
    current: list = []
    label = -1
    prev = None
    for pos in order:
        v = values[pos]
        if prev is None or v - prev > tol:
            if current:
                centers.append(float(np.mean(current)))
            current = []
            label += 1
        labels[pos] = label
        current.append(v)
        prev = v
    if current:
        centers.append(float(np.mean(current)))
    return labels, centers


def count_cycles(traj_tail, cluster_tol: Optional[float] = None, window: int = 16,
                 min_maxima: int = 20, min_prominence: Optional[float] = None) -> CycleCount:
    """Classify the asymptotic oscillation as an n-cycle or aperiodic.

    Peaks of the last ``window`` major maxima are clustered by value
    (single linkage, gap ``cluster_tol``); the multiplicity is the number of
    clusters provided the label sequence repeats with that period.
    Defaults: ``cluster_tol`` = 1% and ``min_prominence`` = 10% of the
    tail's range.
    """
    x = _series(traj_tail)
    span = float(x.max() - x.min()) if len(x) else 0.0
    if cluster_tol is None:
        cluster_tol = 1e-2 * span
    if min_prominence is None:
        min_prominence = 0.1 * span
    _, peaks = local_maxima(x, min_prominence)
    if len(peaks) < min_maxima:
        raise InsufficientDataError(f"found {len(peaks)} local maxima; need at least {min_maxima}")
    recent = peaks[-window:]
    labels, centers = _clusters(recent, cluster_tol)
    p = len(centers)
    periodic = p < len(recent) and all(labels[i] == labels[i + p] for i in range(len(recent) - p))
    return CycleCount(
        multiplicity=p if periodic else APERIODIC,
        distinct_maxima=centers,
        maxima_used=len(recent),
        cluster_tol=float(cluster_tol),
        min_prominence=float(min_prominence),
    )
