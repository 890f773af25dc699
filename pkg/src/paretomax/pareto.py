"""Pareto dominance, non-dominated filtering, hypervolume and the benchmark
metric. Minimization convention throughout: smaller objective values win.

All functions are pure.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

LOG_HV_EPS = 1e-8

# Monte Carlo sample count for hypervolume above four objectives. A fixed
# internal seed keeps repeat calls on the same front identical.
_HV_MC_SAMPLES = 200_000
_HV_MC_SEED = 1234


def dominates(a, b) -> bool:
    """True iff a <= b componentwise with at least one strict inequality."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if a.shape != b.shape:
        raise ValueError("objective vectors must have equal length")
    return bool(np.all(a <= b) and np.any(a < b))


def non_dominated(points) -> np.ndarray:
    """Indices (ascending) of the maximal points of `points` (n x K).

    Duplicated points are all retained: equality is not dominance.
    """
    pts = np.atleast_2d(np.asarray(points, float))
    n, k = pts.shape
    if n == 0:
        return np.empty(0, dtype=int)
    if k == 2:
        return _non_dominated_2d(pts)
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            # Dominated points dominate nothing their dominator does not.
            continue
        le = np.all(pts[i] <= pts, axis=1)
        lt = np.any(pts[i] < pts, axis=1)
        beaten = le & lt
        beaten[i] = False
        keep &= ~beaten
    return np.nonzero(keep)[0]


def _non_dominated_2d(pts: np.ndarray) -> np.ndarray:
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    keep = np.zeros(len(pts), dtype=bool)
    best_f1 = np.inf
    i = 0
    while i < len(order):
        # Group equal rows so duplicates survive together.
        j = i
        while j < len(order) and np.array_equal(pts[order[j]], pts[order[i]]):
            j += 1
        f1 = pts[order[i], 1]
        if f1 < best_f1:
            # Identical rows sort adjacently, so the whole duplicate group
            # is kept or rejected together.
            keep[order[i:j]] = True
            best_f1 = f1
        i = j
    return np.nonzero(keep)[0]


def hypervolume(front, reference) -> float:
    """Lebesgue measure of the region dominated by `front` and bounded above
    by `reference`. Front points not <= reference are clipped out.

    Exact for K <= 4 (dimension sweep at K=2, recursive slicing at K=3,4),
    Monte Carlo above.
    """
    ref = np.asarray(reference, float)
    pts = np.atleast_2d(np.asarray(front, float))
    if pts.size == 0:
        return 0.0
    pts = pts[np.all(pts <= ref, axis=1)]
    if len(pts) == 0:
        return 0.0
    pts = np.unique(pts[non_dominated(pts)], axis=0)
    k = pts.shape[1]
    if k == 1:
        return float(ref[0] - pts[:, 0].min())
    if k == 2:
        return _hv_2d(pts, ref)
    if k <= 4:
        return _hv_slicing(pts, ref)
    return _hv_monte_carlo(pts, ref)


def _hv_2d(pts: np.ndarray, ref: np.ndarray) -> float:
    # Non-dominated and deduplicated: ascending f0 means descending f1.
    order = np.argsort(pts[:, 0])
    p = pts[order]
    hv = 0.0
    prev_f1 = ref[1]
    for f0, f1 in p:
        hv += (ref[0] - f0) * (prev_f1 - f1)
        prev_f1 = f1
    return float(hv)


def _hv_slicing(pts: np.ndarray, ref: np.ndarray) -> float:
    """Slice along the first objective; each slab contributes thickness times
    the (K-1)-dimensional hypervolume of the points entered so far."""
    order = np.argsort(pts[:, 0])
    p = pts[order]
    values = np.unique(p[:, 0])
    hv = 0.0
    for i, v in enumerate(values):
        upper = values[i + 1] if i + 1 < len(values) else ref[0]
        thickness = upper - v
        if thickness <= 0:
            continue
        active = p[p[:, 0] <= v, 1:]
        active = active[non_dominated(active)] if active.shape[1] >= 2 else active
        hv += thickness * hypervolume(active, ref[1:])
    return float(hv)


def _hv_monte_carlo(pts: np.ndarray, ref: np.ndarray) -> float:
    lo = pts.min(axis=0)
    vol = float(np.prod(ref - lo))
    if vol <= 0:
        return 0.0
    rng = np.random.default_rng(_HV_MC_SEED)
    samples = rng.uniform(lo, ref, size=(_HV_MC_SAMPLES, len(ref)))
    dominated = np.zeros(_HV_MC_SAMPLES, dtype=bool)
    for p in pts:
        dominated |= np.all(p <= samples, axis=1)
    return vol * float(np.mean(dominated))


def log_hv_rel_diff(hv_rec: float, hv_max: float) -> float:
    """log((hv_max - hv_rec + eps) / hv_max): 0 when nothing is recovered,
    floored at log(eps / hv_max) for a perfect recommendation."""
    if hv_max <= 0:
        raise ValueError("hv_max must be positive")
    if hv_rec < 0:
        raise ValueError("hv_rec must be non-negative")
    if hv_rec > hv_max:
        warnings.warn(
            f"recommended hypervolume {hv_rec} exceeds reference maximum "
            f"{hv_max}; clamping",
            stacklevel=2,
        )
        hv_rec = hv_max
    return float(np.log((hv_max - hv_rec + LOG_HV_EPS) / hv_max))


@dataclass
class RecommendationSet:
    """Approximate Pareto set: inputs with predicted objective vectors and a
    per-point feasibility flag (all constraint model means non-negative)."""

    inputs: np.ndarray          # (n, d)
    fronts: np.ndarray          # (n, K)
    feasible: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, float))
        self.fronts = np.atleast_2d(np.asarray(self.fronts, float))
        if self.feasible is None:
            self.feasible = np.ones(len(self.inputs), dtype=bool)
        else:
            self.feasible = np.asarray(self.feasible, dtype=bool)
        if not (len(self.inputs) == len(self.fronts) == len(self.feasible)):
            raise ValueError("inputs, fronts and feasibility flags must align")

    def __len__(self) -> int:
        return len(self.inputs)
