"""Approximate posterior function draws via random Fourier features, and
extraction of sampled constrained Pareto fronts from them.

A draw is a deterministic closed-form function (cosine features with fixed
frequencies, phases and regressed weights), cheap enough to scan over grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from paretomax.gp import GpModel
from paretomax.pareto import non_dominated

# Fraction of grid points kept by the least-violation fallback when no grid
# point satisfies all sampled constraints.
FALLBACK_KEEP_FRACTION = 0.1


@dataclass(frozen=True)
class RffFunctionSample:
    """One posterior function draw: f(x) = sqrt(2a/F) cos(x W^T + b) @ w."""

    frequencies: np.ndarray  # (F, d)
    phases: np.ndarray       # (F,)
    weights: np.ndarray      # (F,)
    amplitude: float

    def features(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, float))
        proj = x @ self.frequencies.T + self.phases
        scale = np.sqrt(2.0 * self.amplitude / len(self.phases))
        return scale * np.cos(proj)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.features(x) @ self.weights


@dataclass
class FrontSample:
    """A sampled Pareto front with the constraint values and inputs that
    produced it. `used_fallback` marks fronts built from the least-violating
    points because the sample had no feasible grid point."""

    inputs: np.ndarray             # (n, d)
    objectives: np.ndarray         # (n, K)
    constraint_values: np.ndarray  # (n, C)
    used_fallback: bool = False

    def __len__(self) -> int:
        return len(self.objectives)


def _spectral_frequencies(
    rng: np.random.Generator, num_features: int, lengthscales: np.ndarray
) -> np.ndarray:
    """Frequencies from the Matern-5/2 spectral density: multivariate t with
    5 degrees of freedom, scaled per axis by the inverse lengthscale."""
    d = len(lengthscales)
    z = rng.standard_normal((num_features, d))
    u = rng.chisquare(5.0, size=(num_features, 1))
    return z * np.sqrt(5.0 / u) / lengthscales


def draw_posterior_sample(
    model: GpModel, num_features: int, seed
) -> RffFunctionSample:
    """One approximate posterior draw from a fitted GP.

    Feature weights follow exact Bayesian linear regression of the feature
    map against the training data; with no data the weights are a standard
    normal prior draw, whose function-space covariance matches the kernel in
    expectation over the features.
    """
    rng = np.random.default_rng(seed)
    p = model.params
    freqs = _spectral_frequencies(rng, num_features, p.lengthscales)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=num_features)
    sample = RffFunctionSample(freqs, phases, np.zeros(num_features), p.amplitude)

    if model.empty:
        weights = rng.standard_normal(num_features)
        return RffFunctionSample(freqs, phases, weights, p.amplitude)

    phi = sample.features(model.x)                      # (n, F)
    noise = max(p.noise_variance, 1e-10)                # keeps A invertible
    a = phi.T @ phi + noise * np.eye(num_features)
    jitter = 0.0
    while True:
        try:
            chol = cholesky(a + jitter * np.eye(num_features), lower=True)
            break
        except np.linalg.LinAlgError:
            jitter = max(jitter * 10.0, 1e-10)
            if jitter > 1e-2:
                raise
    mean_w = cho_solve((chol, True), phi.T @ model.y)
    z = rng.standard_normal(num_features)
    # covariance of weights is noise * A^-1 = (sqrt(noise) L^-T)(...)^T
    dev = solve_triangular(chol, z, lower=True, trans="T")
    weights = mean_w + np.sqrt(noise) * dev
    return RffFunctionSample(freqs, phases, weights, p.amplitude)


def _normalize_columns(values: np.ndarray) -> np.ndarray:
    lo = values.min(axis=0)
    span = values.max(axis=0) - lo
    span = np.where(span > 0, span, 1.0)
    return (values - lo) / span


def _thin_max_min(objectives: np.ndarray, front_size: int) -> np.ndarray:
    """Greedy max-min dispersion in normalized objective space, seeded with
    the per-objective minimum points. Returns kept indices."""
    norm = _normalize_columns(objectives)
    selected: List[int] = []
    for k in range(objectives.shape[1]):
        i = int(np.argmin(objectives[:, k]))
        if i not in selected:
            selected.append(i)
    if len(selected) > front_size:
        selected = selected[:front_size]
    d2 = np.full(len(norm), np.inf)
    for i in selected:
        d2 = np.minimum(d2, np.sum((norm - norm[i]) ** 2, axis=1))
    while len(selected) < front_size:
        i = int(np.argmax(d2))
        selected.append(i)
        d2 = np.minimum(d2, np.sum((norm - norm[i]) ** 2, axis=1))
    return np.array(sorted(selected), dtype=int)


def sample_front(
    objective_samples: Sequence[RffFunctionSample],
    constraint_samples: Sequence[RffFunctionSample],
    lower: np.ndarray,
    upper: np.ndarray,
    observed_inputs: Optional[np.ndarray],
    grid_size: int,
    front_size: int,
    rng: np.random.Generator,
) -> FrontSample:
    """Extract one sampled constrained Pareto front.

    Function draws are scanned over a uniform-random grid plus the observed
    inputs. Points whose sampled constraints are all non-negative survive;
    their non-dominated objective subset forms the front, thinned to at most
    `front_size` points. If no point is feasible under the sample, the
    least-violating tenth of the grid is used instead and the result flagged.
    """
    lower = np.asarray(lower, float)
    upper = np.asarray(upper, float)
    grid = rng.uniform(lower, upper, size=(grid_size, len(lower)))
    if observed_inputs is not None and len(observed_inputs):
        grid = np.vstack([grid, np.atleast_2d(observed_inputs)])

    objs = np.column_stack([s(grid) for s in objective_samples])
    if constraint_samples:
        cons = np.column_stack([s(grid) for s in constraint_samples])
        feasible = np.all(cons >= 0.0, axis=1)
    else:
        cons = np.empty((len(grid), 0))
        feasible = np.ones(len(grid), dtype=bool)

    used_fallback = False
    if feasible.any():
        pool = np.nonzero(feasible)[0]
    else:
        used_fallback = True
        violation = np.sum(np.maximum(0.0, -cons), axis=1)
        keep = max(1, int(np.ceil(FALLBACK_KEEP_FRACTION * len(grid))))
        pool = np.argsort(violation, kind="stable")[:keep]

    nd = pool[non_dominated(objs[pool])]
    if len(nd) > front_size:
        nd = nd[_thin_max_min(objs[nd], front_size)]

    return FrontSample(
        inputs=grid[nd],
        objectives=objs[nd],
        constraint_values=cons[nd],
        used_fallback=used_fallback,
    )
