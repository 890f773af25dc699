"""Gaussian process regression with a Matern-5/2 ARD kernel and slice-sampled
hyperparameters.

Models are fit per black box. An empty model (no observations yet) falls back
to the prior: zero mean, variance equal to the kernel amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, List, Optional

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

VAR_FLOOR = 1e-12

# Jitter ladder: multiples of the mean Gram diagonal tried in order until
# the Cholesky factorization succeeds.
_JITTERS = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


@dataclass(frozen=True)
class KernelParams:
    """Matern-5/2 ARD kernel parameters plus observation-noise variance."""

    amplitude: float
    lengthscales: np.ndarray
    noise_variance: float

    def __post_init__(self):
        object.__setattr__(
            self, "lengthscales", np.atleast_1d(np.asarray(self.lengthscales, float))
        )

    def with_noise(self, noise_variance: float) -> "KernelParams":
        return replace(self, noise_variance=float(noise_variance))


def _scaled_sqdist(xa: np.ndarray, xb: np.ndarray, lengthscales: np.ndarray) -> np.ndarray:
    sa = xa / lengthscales
    sb = xb / lengthscales
    d2 = (
        np.sum(sa**2, axis=1)[:, None]
        + np.sum(sb**2, axis=1)[None, :]
        - 2.0 * sa @ sb.T
    )
    return np.maximum(d2, 0.0)


def matern52(xa: np.ndarray, xb: np.ndarray, params: KernelParams) -> np.ndarray:
    """Matern-5/2 covariance a * (1 + s + s^2/3) * exp(-s), s = sqrt(5) r,
    with r the ARD-scaled Euclidean distance."""
    xa = np.atleast_2d(np.asarray(xa, float))
    xb = np.atleast_2d(np.asarray(xb, float))
    s = np.sqrt(5.0 * _scaled_sqdist(xa, xb, params.lengthscales))
    return params.amplitude * (1.0 + s + s**2 / 3.0) * np.exp(-s)


def kernel_matrix(x: np.ndarray, params: KernelParams) -> np.ndarray:
    """Gram matrix with observation noise on the diagonal."""
    k = matern52(x, x, params)
    return k + params.noise_variance * np.eye(len(x))


@dataclass
class GpModel:
    """Fitted GP posterior state: inputs, Cholesky factor, alpha = K^-1 y."""

    params: KernelParams
    x: np.ndarray
    y: np.ndarray
    chol: Optional[np.ndarray]
    alpha: Optional[np.ndarray]
    jitter: float

    @property
    def empty(self) -> bool:
        return len(self.y) == 0


def fit(x: np.ndarray, y: np.ndarray, params: KernelParams) -> GpModel:
    """Factorize the noisy Gram matrix, walking up the jitter ladder if the
    plain factorization fails."""
    x = np.atleast_2d(np.asarray(x, float))
    y = np.asarray(y, float).ravel()
    if len(y) == 0:
        if x.shape[0] != 0:
            x = x.reshape(0, x.shape[-1])
        return GpModel(params, x, y, None, None, 0.0)
    gram = kernel_matrix(x, params)
    scale = float(np.mean(np.diag(gram)))
    last_err: Exception = RuntimeError("unreachable")
    for jitter in (0.0,) + tuple(j * scale for j in _JITTERS):
        try:
            chol = cholesky(gram + jitter * np.eye(len(y)), lower=True)
        except np.linalg.LinAlgError as err:
            last_err = err
            continue
        alpha = cho_solve((chol, True), y)
        return GpModel(params, x, y, chol, alpha, jitter)
    raise np.linalg.LinAlgError(
        f"Gram matrix not positive definite even with jitter: {last_err}"
    )


def predict(model: GpModel, xq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance (noise-free latent) at query points.

    Returns arrays of shape (n,). Variances are floored at 1e-12.
    """
    xq = np.atleast_2d(np.asarray(xq, float))
    if model.empty:
        mean = np.zeros(len(xq))
        var = np.full(len(xq), model.params.amplitude)
        return mean, np.maximum(var, VAR_FLOOR)
    ks = matern52(xq, model.x, model.params)
    mean = ks @ model.alpha
    v = solve_triangular(model.chol, ks.T, lower=True)
    var = model.params.amplitude - np.sum(v**2, axis=0)
    return mean, np.maximum(var, VAR_FLOOR)


def log_marginal_likelihood(x: np.ndarray, y: np.ndarray, params: KernelParams) -> float:
    """Gaussian log evidence -1/2 y^T K^-1 y - 1/2 log|K| - n/2 log 2 pi."""
    y = np.asarray(y, float).ravel()
    n = len(y)
    if n == 0:
        return 0.0
    try:
        model = fit(x, y, params)
    except np.linalg.LinAlgError:
        return -np.inf
    quad = float(y @ model.alpha)
    logdet = 2.0 * float(np.sum(np.log(np.diag(model.chol))))
    return -0.5 * quad - 0.5 * logdet - 0.5 * n * np.log(2.0 * np.pi)


# ---------------------------------------------------------------------------
# Hyperparameter prior and slice sampling.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HyperPrior:
    """Independent log-normal priors on amplitude, lengthscales and noise.

    Medians 1.0 for amplitude and lengthscales, 1e-3 for noise variance,
    all with log-scale sigma 1.0. `fixed_noise` pins the noise variance
    instead of sampling it (used for noiseless problems).
    """

    amplitude_log_median: float = 0.0
    lengthscale_log_median: float = 0.0
    noise_log_median: float = np.log(1e-3)
    log_sigma: float = 1.0
    fixed_noise: Optional[float] = None

    def num_free(self, dim: int) -> int:
        return 1 + dim + (0 if self.fixed_noise is not None else 1)

    def log_medians(self, dim: int) -> np.ndarray:
        meds = [self.amplitude_log_median] + [self.lengthscale_log_median] * dim
        if self.fixed_noise is None:
            meds.append(self.noise_log_median)
        return np.array(meds)

    def log_density(self, theta: np.ndarray, dim: int) -> float:
        """Density of log-parameters (Gaussian in log space)."""
        z = (theta - self.log_medians(dim)) / self.log_sigma
        return float(-0.5 * np.sum(z**2))

    def draw(self, rng: np.random.Generator, dim: int) -> np.ndarray:
        return self.log_medians(dim) + self.log_sigma * rng.standard_normal(
            self.num_free(dim)
        )

    def to_params(self, theta: np.ndarray, dim: int) -> KernelParams:
        amp = float(np.exp(theta[0]))
        ls = np.exp(theta[1 : 1 + dim])
        noise = (
            self.fixed_noise
            if self.fixed_noise is not None
            else float(np.exp(theta[1 + dim]))
        )
        return KernelParams(amp, ls, noise)


def slice_sample(
    log_density: Callable[[np.ndarray], float],
    start: np.ndarray,
    rng: np.random.Generator,
    num_samples: int,
    width: float = 1.0,
    max_steps: int = 100,
) -> np.ndarray:
    """Coordinate-wise slice sampling with stepping out.

    Each kept sample is the state after one full sweep over coordinates.
    Returns an array of shape (num_samples, len(start)).
    """
    x = np.asarray(start, float).copy()
    logf = log_density(x)
    out = np.empty((num_samples, len(x)))
    for s in range(num_samples):
        for i in range(len(x)):
            log_level = logf + np.log(rng.uniform())
            lo = x[i] - width * rng.uniform()
            hi = lo + width
            steps = int(rng.integers(0, max_steps + 1))
            steps_lo, steps_hi = steps, max_steps - steps
            xi = x[i]

            def at(v: float) -> float:
                x[i] = v
                return log_density(x)

            j = 0
            while j < steps_lo and at(lo) > log_level:
                lo -= width
                j += 1
            j = 0
            while j < steps_hi and at(hi) > log_level:
                hi += width
                j += 1
            while True:
                prop = rng.uniform(lo, hi)
                logf_prop = at(prop)
                if logf_prop > log_level:
                    x[i] = prop
                    logf = logf_prop
                    break
                if prop < xi:
                    lo = prop
                else:
                    hi = prop
                if hi - lo < 1e-12:
                    x[i] = xi
                    logf = at(xi)
                    break
        out[s] = x
    return out


def slice_sample_hypers(
    x: np.ndarray,
    y: np.ndarray,
    prior: HyperPrior,
    dim: int,
    rng: np.random.Generator,
    num_samples: int = 10,
    burn_in: int = 10,
    start: Optional[np.ndarray] = None,
) -> List[KernelParams]:
    """Posterior samples of kernel parameters via slice sampling in log space.

    With no data the posterior is the prior, so samples are prior draws.
    If every likelihood evaluation is non-finite the chain cannot move and
    prior draws are returned instead.
    """
    x = np.atleast_2d(np.asarray(x, float)) if np.size(x) else np.empty((0, dim))
    y = np.asarray(y, float).ravel()

    if len(y) == 0:
        return [prior.to_params(prior.draw(rng, dim), dim) for _ in range(num_samples)]

    def log_post(theta: np.ndarray) -> float:
        lp = prior.log_density(theta, dim)
        ll = log_marginal_likelihood(x, y, prior.to_params(theta, dim))
        if not np.isfinite(ll):
            return -np.inf
        return lp + ll

    theta0 = np.asarray(start, float) if start is not None else prior.log_medians(dim)
    if not np.isfinite(log_post(theta0)):
        for _ in range(20):
            theta0 = prior.draw(rng, dim)
            if np.isfinite(log_post(theta0)):
                break
        else:
            return [prior.to_params(prior.draw(rng, dim), dim) for _ in range(num_samples)]

    chain = slice_sample(log_post, theta0, rng, burn_in + num_samples)
    kept = chain[burn_in:]
    return [prior.to_params(t, dim) for t in kept]
