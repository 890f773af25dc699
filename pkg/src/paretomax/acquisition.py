"""Acquisition functions over candidate inputs.

The flagship acquisition scores a candidate by the average reduction in
per-box predictive variance caused by conditioning on sampled Pareto fronts
(one front per hyperparameter sample, M contexts in total). Variants: the
log-variance form, a per-box max-value baseline, and a slow quadrature
reference for small K + C.

Candidate arguments are (n, d) batches or single d-vectors; outputs follow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import log_ndtr, ndtr

from paretomax.adf import (
    AdfDiagnostics,
    BoxMoments,
    condition_on_front,
)
from paretomax.core import BlackBoxId
from paretomax.gp import GpModel, predict
from paretomax.sampler import FrontSample

_LOG_2PI = np.log(2.0 * np.pi)

# Conditioned mass below this is treated as degenerate by the quadrature
# reference and the second entropy term is dropped for that context.
DEGENERATE_MASS = 1e-12


@dataclass(frozen=True)
class QuadSpec:
    """Tensor-grid quadrature: cells per axis over mean +- span sigmas."""

    points_per_dim: int = 200
    span_sigmas: float = 8.0


@dataclass
class AcquisitionContext:
    """One Monte Carlo context: the GP models for one hyperparameter sample
    paired with one sampled front, plus observation-noise variances."""

    models_f: List[GpModel]
    models_c: List[GpModel]
    front: FrontSample
    noise_f: np.ndarray
    noise_c: np.ndarray
    adf_seed: int

    def __post_init__(self):
        self.noise_f = np.asarray(self.noise_f, float)
        self.noise_c = np.asarray(self.noise_c, float)


@dataclass
class AcquisitionBreakdown:
    """Per-box acquisition components; total is their fixed-order sum."""

    per_objective: np.ndarray  # (..., K)
    per_constraint: np.ndarray  # (..., C)
    total: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.total is None:
            self.total = fold_sum(self.per_objective, self.per_constraint)


def fold_sum(per_objective: np.ndarray, per_constraint: np.ndarray) -> np.ndarray:
    """Strict left-to-right sum over box columns, objectives first, so that
    total == sum of parts bit-for-bit."""
    total = np.zeros(per_objective.shape[:-1])
    for k in range(per_objective.shape[-1]):
        total = total + per_objective[..., k]
    for j in range(per_constraint.shape[-1]):
        total = total + per_constraint[..., j]
    return total


def predictive_moments(ctx: AcquisitionContext, x: np.ndarray) -> BoxMoments:
    x = np.atleast_2d(np.asarray(x, float))
    mf, vf = [], []
    for model in ctx.models_f:
        m, v = predict(model, x)
        mf.append(m)
        vf.append(v)
    mc, vc = [], []
    for model in ctx.models_c:
        m, v = predict(model, x)
        mc.append(m)
        vc.append(v)
    n = len(x)
    return BoxMoments(
        np.column_stack(mf) if mf else np.empty((n, 0)),
        np.column_stack(vf) if vf else np.empty((n, 0)),
        np.column_stack(mc) if mc else np.empty((n, 0)),
        np.column_stack(vc) if vc else np.empty((n, 0)),
    )


def gaussian_entropy_sum(
    moments: BoxMoments,
    noise_f: Optional[np.ndarray] = None,
    noise_c: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Sum over boxes of Gaussian entropies 0.5 log(2 pi e (v + noise))."""
    nf = 0.0 if noise_f is None else np.asarray(noise_f, float)
    nc = 0.0 if noise_c is None else np.asarray(noise_c, float)
    hf = 0.5 * (_LOG_2PI + 1.0 + np.log(moments.var_f + nf))
    hc = 0.5 * (_LOG_2PI + 1.0 + np.log(moments.var_c + nc))
    return hf.sum(axis=-1) + hc.sum(axis=-1)


def _squeeze(values: np.ndarray, was_single: bool):
    return values[0] if was_single else values


def mesmoc_plus_from_moments(
    moments_per_context: Sequence[BoxMoments],
    fronts: Sequence,
    adf_seeds: Sequence[int],
    diagnostics: Optional[AdfDiagnostics] = None,
) -> AcquisitionBreakdown:
    """Average variance reduction per box over contexts.

    The observation-noise variances cancel between the two entropy terms,
    so the per-box component is simply v - mean of conditioned v.
    """
    acc_f = acc_c = None
    m = len(moments_per_context)
    for mom, front, seed in zip(moments_per_context, fronts, adf_seeds):
        cond = condition_on_front(mom, front, seed, diagnostics)
        df = mom.var_f - cond.var_f
        dc = mom.var_c - cond.var_c
        acc_f = df if acc_f is None else acc_f + df
        acc_c = dc if acc_c is None else acc_c + dc
    return AcquisitionBreakdown(acc_f / m, acc_c / m)


def mesmoc_plus(x: np.ndarray, contexts: Sequence[AcquisitionContext]) -> AcquisitionBreakdown:
    x2 = np.atleast_2d(np.asarray(x, float))
    single = np.asarray(x, float).ndim == 1
    moments = [predictive_moments(c, x2) for c in contexts]
    out = mesmoc_plus_from_moments(
        moments, [c.front for c in contexts], [c.adf_seed for c in contexts]
    )
    return AcquisitionBreakdown(
        _squeeze(out.per_objective, single),
        _squeeze(out.per_constraint, single),
        _squeeze(out.total, single),
    )


def mesmoc_plus_log_from_moments(
    moments_per_context: Sequence[BoxMoments],
    fronts: Sequence,
    adf_seeds: Sequence[int],
    noise_f: np.ndarray,
    noise_c: np.ndarray,
) -> np.ndarray:
    """Average over contexts of the summed log-variance reduction,
    log(v + noise) - log(cond v + noise) per box."""
    acc = None
    m = len(moments_per_context)
    for mom, front, seed in zip(moments_per_context, fronts, adf_seeds):
        cond = condition_on_front(mom, front, seed)
        term = (
            np.log(mom.var_f + noise_f).sum(axis=-1)
            - np.log(cond.var_f + noise_f).sum(axis=-1)
            + np.log(mom.var_c + noise_c).sum(axis=-1)
            - np.log(cond.var_c + noise_c).sum(axis=-1)
        )
        acc = term if acc is None else acc + term
    return acc / m


def mesmoc_plus_log(x: np.ndarray, contexts: Sequence[AcquisitionContext]) -> np.ndarray:
    x2 = np.atleast_2d(np.asarray(x, float))
    single = np.asarray(x, float).ndim == 1
    moments = [predictive_moments(c, x2) for c in contexts]
    vals = mesmoc_plus_log_from_moments(
        moments,
        [c.front for c in contexts],
        [c.adf_seed for c in contexts],
        contexts[0].noise_f,
        contexts[0].noise_c,
    )
    return _squeeze(vals, single)


# ---------------------------------------------------------------------------
# Per-box max-value baseline.
# ---------------------------------------------------------------------------


def _log_phi(g: np.ndarray) -> np.ndarray:
    return -0.5 * g**2 - 0.5 * _LOG_2PI


def _mes_term(gamma: np.ndarray) -> np.ndarray:
    """gamma phi(gamma) / (2 Phi(gamma)) - log Phi(gamma), non-negative."""
    ratio = np.exp(_log_phi(gamma) - log_ndtr(gamma))
    return gamma * ratio / 2.0 - log_ndtr(gamma)


def mesmoc_baseline_terms(
    x: np.ndarray, contexts: Sequence[AcquisitionContext]
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-box baseline terms averaged over contexts.

    Extreme values pool each context's sampled front with every observation
    of that box. Objectives are minimized (extreme = lowest value seen);
    constraint margins are maximized (extreme = highest value seen).
    """
    x2 = np.atleast_2d(np.asarray(x, float))
    k = len(contexts[0].models_f)
    c = len(contexts[0].models_c)
    acc_f = np.zeros((len(x2), k))
    acc_c = np.zeros((len(x2), c))
    for ctx in contexts:
        mom = predictive_moments(ctx, x2)
        sd_f = np.sqrt(mom.var_f)
        sd_c = np.sqrt(mom.var_c)
        for i in range(k):
            pool = ctx.front.objectives[:, i]
            obs = ctx.models_f[i].y
            best = min(pool.min(), obs.min()) if len(obs) else pool.min()
            gamma = (mom.mean_f[:, i] - best) / sd_f[:, i]
            acc_f[:, i] += _mes_term(gamma)
        for j in range(c):
            pool = ctx.front.constraint_values[:, j]
            obs = ctx.models_c[j].y
            top = max(pool.max(), obs.max()) if len(obs) else pool.max()
            gamma = (top - mom.mean_c[:, j]) / sd_c[:, j]
            acc_c[:, j] += _mes_term(gamma)
    return acc_f / len(contexts), acc_c / len(contexts)


def constraint_mean_mask(
    x: np.ndarray, contexts: Sequence[AcquisitionContext]
) -> np.ndarray:
    """True where every constraint's hyper-averaged posterior mean is
    strictly positive. With no constraints, true everywhere."""
    x2 = np.atleast_2d(np.asarray(x, float))
    c = len(contexts[0].models_c)
    if c == 0:
        return np.ones(len(x2), dtype=bool)
    means = np.zeros((len(x2), c))
    for ctx in contexts:
        for j, model in enumerate(ctx.models_c):
            m, _ = predict(model, x2)
            means[:, j] += m
    means /= len(contexts)
    return np.all(means > 0.0, axis=1)


def mesmoc_baseline(
    x: np.ndarray,
    contexts: Sequence[AcquisitionContext],
    feasibility_mask: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Summed per-box baseline terms; masked-out candidates score -inf."""
    x2 = np.atleast_2d(np.asarray(x, float))
    single = np.asarray(x, float).ndim == 1
    terms_f, terms_c = mesmoc_baseline_terms(x2, contexts)
    total = fold_sum(terms_f, terms_c)
    if feasibility_mask is not None:
        mask = np.atleast_1d(np.asarray(feasibility_mask, bool))
        total = np.where(mask, total, -np.inf)
    return _squeeze(total, single)


# ---------------------------------------------------------------------------
# Quadrature reference for K + C <= 3.
# ---------------------------------------------------------------------------


def _axis_cells(mean, var, breakpoints, quad: QuadSpec):
    """Cell decomposition of one axis with edges snapped at breakpoints.

    Returns (edges, mass, wlogq) where mass is the exact Gaussian measure of
    each cell and wlogq the exact integral of N log N over it, so downstream
    sums carry no discretization error beyond the +-span tail cutoff."""
    sd = np.sqrt(var)
    lo = mean - quad.span_sigmas * sd
    hi = mean + quad.span_sigmas * sd
    edges = np.linspace(lo, hi, quad.points_per_dim + 1)
    inner = [b for b in np.atleast_1d(breakpoints) if lo < b < hi]
    if inner:
        edges = np.unique(np.concatenate([edges, inner]))
    std_edges = (edges - mean) / sd
    cdf = ndtr(std_edges)
    mass = np.diff(cdf)
    # integral over a cell of (y-mean)^2 N(y) dy = var * (mass - d(z phi(z)))
    zphi = std_edges * np.exp(-0.5 * std_edges**2) / np.sqrt(2.0 * np.pi)
    second = var * (mass - np.diff(zphi))
    wlogq = -np.log(sd * np.sqrt(2.0 * np.pi)) * mass - second / (2.0 * var)
    return edges, mass, wlogq


def _staircase(upper_edges: List[np.ndarray], fstars: np.ndarray) -> np.ndarray:
    """Boolean tensor over objective cells: cell removed-candidate region of
    some front point (cell upper edge <= front value on every axis)."""
    k = len(upper_edges)
    inside = [upper_edges[i][:, None] <= fstars[None, :, i] for i in range(k)]
    if k == 1:
        return inside[0].any(axis=-1)
    if k == 2:
        return (inside[0][:, None, :] & inside[1][None, :, :]).any(axis=-1)
    shape = tuple(len(u) for u in upper_edges)
    out = np.zeros(shape, dtype=bool)
    for p in range(fstars.shape[0]):
        out |= (
            inside[0][:, p][:, None, None]
            & inside[1][:, p][None, :, None]
            & inside[2][:, p][None, None, :]
        )
    return out


_EINSUM = {1: "a,a->", 2: "a,b,ab->", 3: "a,b,c,abc->"}


def _conditioned_entropy(
    moments: BoxMoments, front_objectives: np.ndarray, quad: QuadSpec
) -> Tuple[float, bool]:
    """Differential entropy of the normalized Gaussian-times-compatibility
    density at one candidate, by separable cell quadrature.

    Exploits H = log Z - (1/Z) * integral of q Omega log q, with log q
    splitting over boxes, so only per-axis sums and a staircase tensor over
    the objective axes are needed.
    """
    k = moments.mean_f.shape[-1]
    c = moments.mean_c.shape[-1]
    fstars = np.atleast_2d(front_objectives)

    f_axes = [
        _axis_cells(moments.mean_f[i], moments.var_f[i], fstars[:, i], quad)
        for i in range(k)
    ]
    c_axes = [
        _axis_cells(moments.mean_c[j], moments.var_c[j], [0.0], quad)
        for j in range(c)
    ]

    # feasible-axis mass per constraint (cells entirely within c >= 0)
    pc_each = np.array(
        [mass[edges[:-1] >= 0.0].sum() for edges, mass, _ in c_axes]
    )
    pc = float(np.prod(pc_each)) if c else 1.0

    stair = _staircase([edges[1:] for edges, _, _ in f_axes], fstars)
    masses = [mass for _, mass, _ in f_axes]
    spec = _EINSUM[k]
    s_a = float(np.einsum(spec, *masses, stair))

    z = 1.0 - s_a * pc
    if z < DEGENERATE_MASS:
        return 0.0, True

    # full-axis integrals of q log q per box
    e_full = [float(wlogq.sum()) for _, _, wlogq in f_axes]
    e_full += [float(wlogq.sum()) for _, _, wlogq in c_axes]

    # integrals of q D log q per box
    t_terms = []
    for i in range(k):
        weighted = list(masses)
        weighted[i] = f_axes[i][2]
        t_terms.append(pc * float(np.einsum(spec, *weighted, stair)))
    for j in range(c):
        edges, _, wlogq = c_axes[j]
        feas = edges[:-1] >= 0.0
        others = float(np.prod(np.delete(pc_each, j))) if c > 1 else 1.0
        t_terms.append(s_a * others * float(wlogq[feas].sum()))

    integral = sum(e_full) - sum(t_terms)
    return float(np.log(z) - integral / z), False


def exact_acquisition(
    x: np.ndarray,
    contexts: Sequence[AcquisitionContext],
    quad: QuadSpec = QuadSpec(),
    return_flags: bool = False,
):
    """Entropy-reduction acquisition by direct quadrature (latent, noise-free
    entropies). Slow; intended as a reference for small problems.

    Degenerate candidates (conditioned mass below 1e-12) contribute their
    unconditioned entropy alone and set the per-candidate flag.
    """
    x2 = np.atleast_2d(np.asarray(x, float))
    single = np.asarray(x, float).ndim == 1
    k = len(contexts[0].models_f)
    c = len(contexts[0].models_c)
    if k + c > 3:
        raise ValueError("quadrature reference supports at most 3 boxes")

    values = np.zeros(len(x2))
    flags = np.zeros(len(x2), dtype=bool)
    for ctx in contexts:
        mom = predictive_moments(ctx, x2)
        h0 = gaussian_entropy_sum(mom)
        if len(np.atleast_2d(ctx.front.objectives)) == 0:
            continue  # nothing to condition on: both entropy terms coincide
        for i in range(len(x2)):
            row = BoxMoments(
                mom.mean_f[i], mom.var_f[i], mom.mean_c[i], mom.var_c[i]
            )
            h_cond, degenerate = _conditioned_entropy(
                row, ctx.front.objectives, quad
            )
            if degenerate:
                values[i] += h0[i]
                flags[i] = True
            else:
                values[i] += h0[i] - h_cond
    values /= len(contexts)
    if return_flags:
        return _squeeze(values, single), _squeeze(flags, single)
    return _squeeze(values, single)


# ---------------------------------------------------------------------------
# Optimization.
# ---------------------------------------------------------------------------


def optimize_acquisition(
    acq: Callable[[np.ndarray], np.ndarray],
    lower: np.ndarray,
    upper: np.ndarray,
    grid_size: int = 1000,
    seed=None,
) -> np.ndarray:
    """Grid scan plus bounded quasi-Newton refinement.

    `acq` maps an (n, d) batch to n values; -inf marks rejected candidates.
    Falls back to a uniform-random point when the grid gives no usable
    starting point (all rejected or all equal).
    """
    lower = np.asarray(lower, float)
    upper = np.asarray(upper, float)
    rng = np.random.default_rng(seed)
    grid = rng.uniform(lower, upper, size=(grid_size, len(lower)))
    vals = np.asarray(acq(grid), float)
    finite = np.isfinite(vals)
    if not finite.any() or np.ptp(vals[finite]) == 0.0:
        return rng.uniform(lower, upper)
    start_idx = int(np.argmax(np.where(finite, vals, -np.inf)))
    x0 = grid[start_idx]
    best_val = vals[start_idx]

    d = len(lower)
    h = 1e-4 * (upper - lower)
    eye = np.eye(d)

    def value_and_grad(x):
        pts = np.vstack([x[None, :], x + h * eye, x - h * eye])
        v = np.asarray(acq(pts), float)
        if not np.isfinite(v[0]):
            return 1e12, np.zeros(d)
        grad = (v[1 : 1 + d] - v[1 + d :]) / (2.0 * h)
        grad = np.where(np.isfinite(grad), grad, 0.0)
        return -v[0], -grad

    try:
        res = minimize(
            value_and_grad,
            x0,
            jac=True,
            method="L-BFGS-B",
            bounds=list(zip(lower, upper)),
        )
        refined = np.clip(res.x, lower, upper)
        refined_val = np.asarray(acq(refined[None, :]), float)[0]
        if np.isfinite(refined_val) and refined_val > best_val:
            return refined
    except Exception:
        pass
    return x0


def decoupled_select(
    box_acqs: Sequence[Tuple[BlackBoxId, Callable[[np.ndarray], np.ndarray]]],
    lower: np.ndarray,
    upper: np.ndarray,
    grid_size: int = 1000,
    seed=None,
) -> Tuple[BlackBoxId, np.ndarray, float]:
    """Optimize each box's acquisition separately and pick the box with the
    largest optimized value. Ties go to the earliest box in standard order
    (objectives before constraints, index ascending)."""
    ordered = sorted(box_acqs, key=lambda pair: pair[0].sort_key())
    best: Optional[Tuple[BlackBoxId, np.ndarray, float]] = None
    for box, acq in ordered:
        x = optimize_acquisition(acq, lower, upper, grid_size, seed)
        val = float(np.asarray(acq(np.atleast_2d(x)), float)[0])
        if best is None or val > best[2]:
            best = (box, x, val)
    assert best is not None
    return best
