"""Conditioning a factorized Gaussian predictive on a sampled Pareto front.

Each front point contributes one compatibility factor removing the event
"the candidate is feasible and weakly improves on that point in every
objective". A single assumed-density-filtering pass moment-matches the
factors one at a time in seeded random order.

All operations accept either single-point moments (vectors of length K / C)
or a batch (arrays of shape (n, K) / (n, C)); the box axis is always last.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.special import log_ndtr

VAR_FLOOR = 1e-12
Z_MIN = 1e-10

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass
class BoxMoments:
    """Means and variances of the per-box Gaussian predictive at candidates."""

    mean_f: np.ndarray  # (..., K)
    var_f: np.ndarray   # (..., K)
    mean_c: np.ndarray  # (..., C)
    var_c: np.ndarray   # (..., C)

    def __post_init__(self):
        self.mean_f = np.asarray(self.mean_f, float)
        self.var_f = np.asarray(self.var_f, float)
        self.mean_c = np.asarray(self.mean_c, float)
        self.var_c = np.asarray(self.var_c, float)

    def copy(self) -> "BoxMoments":
        return BoxMoments(
            self.mean_f.copy(), self.var_f.copy(),
            self.mean_c.copy(), self.var_c.copy(),
        )

    @property
    def batched(self) -> bool:
        return self.mean_f.ndim > 1


# The predictive before conditioning and the approximation after it share
# one representation; the aliases mark intent at call sites.
PredictiveMoments = BoxMoments
ConditionedMoments = BoxMoments


@dataclass
class ZGrads:
    """Partials of log Z with respect to each box mean and variance."""

    dmean_f: np.ndarray
    dvar_f: np.ndarray
    dmean_c: np.ndarray
    dvar_c: np.ndarray


@dataclass
class AdfDiagnostics:
    applied: int = 0
    skipped_low_z: int = 0
    skipped_nonfinite: int = 0


def gammas(moments: BoxMoments, fstar) -> Tuple[np.ndarray, np.ndarray]:
    """Standardized margins: gamma_f = (fstar - m_f)/sqrt(v_f) per objective,
    gamma_c = m_c/sqrt(v_c) per constraint."""
    fstar = np.asarray(fstar, float)
    gf = (fstar - moments.mean_f) / np.sqrt(moments.var_f)
    gc = moments.mean_c / np.sqrt(moments.var_c)
    return gf, gc


def z_factor(gamma_f: np.ndarray, gamma_c: np.ndarray) -> np.ndarray:
    """Mass surviving one compatibility factor:
    Z = 1 - prod_j Phi(gamma_c_j) * prod_k Phi(gamma_f_k), clamped to
    [1e-10, 1]."""
    log_p = _log_p(np.asarray(gamma_f, float), np.asarray(gamma_c, float))
    return np.clip(-np.expm1(log_p), Z_MIN, 1.0)


def _log_p(gamma_f: np.ndarray, gamma_c: np.ndarray) -> np.ndarray:
    return log_ndtr(gamma_f).sum(axis=-1) + log_ndtr(gamma_c).sum(axis=-1)


def _log_phi(g: np.ndarray) -> np.ndarray:
    return -0.5 * g**2 - _LOG_SQRT_2PI


def _factor_terms(moments: BoxMoments, fstar):
    """Shared quantities for one factor: gammas, raw and clamped Z, and the
    per-box tail ratios exp(t_b) = phi(gamma_b) P / (Phi(gamma_b) Z)."""
    gf, gc = gammas(moments, fstar)
    log_p = _log_p(gf, gc)
    z_raw = -np.expm1(log_p)
    log_z = np.log(np.clip(z_raw, Z_MIN, 1.0))
    rest = log_p[..., None] - log_z[..., None]
    # (log_p - log_ndtr(gamma_b)) is the log product over the other boxes.
    tf = _log_phi(gf) + np.minimum(rest - log_ndtr(gf), -log_z[..., None])
    tc = _log_phi(gc) + np.minimum(rest - log_ndtr(gc), -log_z[..., None])
    return gf, gc, z_raw, np.exp(tf), np.exp(tc)


def _grads_from_terms(moments: BoxMoments, gf, gc, ef, ec) -> ZGrads:
    return ZGrads(
        dmean_f=ef / np.sqrt(moments.var_f),
        dvar_f=ef * gf / (2.0 * moments.var_f),
        dmean_c=-ec / np.sqrt(moments.var_c),
        dvar_c=ec * gc / (2.0 * moments.var_c),
    )


def dlogz(moments: BoxMoments, fstar) -> ZGrads:
    """Closed-form partials of log Z.

    Raising an objective mean toward fstar shrinks the removed region, so
    the objective-mean partials are positive; raising a constraint mean
    grows it, so the constraint-mean partials are negative.
    """
    gf, gc, _, ef, ec = _factor_terms(moments, fstar)
    return _grads_from_terms(moments, gf, gc, ef, ec)


def _moment_match(mean, var, dmean, dvar):
    new_mean = mean + var * dmean
    new_var = var - var**2 * (dmean**2 - 2.0 * dvar)
    return new_mean, np.maximum(new_var, VAR_FLOOR)


def adf_step(
    moments: BoxMoments,
    fstar,
    diagnostics: Optional[AdfDiagnostics] = None,
) -> BoxMoments:
    """Moment-match one compatibility factor into the Gaussian approximation.

    The factor is skipped (moments unchanged) where its surviving mass fell
    below the clamp floor or the update produced non-finite values.
    """
    gf, gc, z_raw, ef, ec = _factor_terms(moments, fstar)
    grads = _grads_from_terms(moments, gf, gc, ef, ec)
    mf, vf = _moment_match(moments.mean_f, moments.var_f, grads.dmean_f, grads.dvar_f)
    mc, vc = _moment_match(moments.mean_c, moments.var_c, grads.dmean_c, grads.dvar_c)

    finite = (
        np.all(np.isfinite(mf), axis=-1)
        & np.all(np.isfinite(vf), axis=-1)
        & np.all(np.isfinite(mc), axis=-1)
        & np.all(np.isfinite(vc), axis=-1)
    )
    low_z = z_raw < Z_MIN
    apply = finite & ~low_z

    if diagnostics is not None:
        diagnostics.applied += int(np.count_nonzero(apply))
        diagnostics.skipped_low_z += int(np.count_nonzero(low_z))
        diagnostics.skipped_nonfinite += int(np.count_nonzero(~finite & ~low_z))

    sel = apply[..., None]
    return BoxMoments(
        np.where(sel, mf, moments.mean_f),
        np.where(sel, vf, moments.var_f),
        np.where(sel, mc, moments.mean_c) if mc.size else moments.mean_c,
        np.where(sel, vc, moments.var_c) if vc.size else moments.var_c,
    )


def condition_on_front(
    moments: PredictiveMoments,
    front,
    seed,
    diagnostics: Optional[AdfDiagnostics] = None,
) -> ConditionedMoments:
    """One ADF pass over all front points in a seeded random permutation.

    `front` is anything with an `objectives` array of shape (P, K); the
    constraint side of each factor uses the candidate's own constraint
    moments, so front constraint values play no role here.
    """
    objectives = np.atleast_2d(np.asarray(front.objectives, float))
    if len(objectives) == 0:
        raise ValueError("front must contain at least one point")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(objectives))
    current = moments.copy()
    for i in order:
        current = adf_step(current, objectives[i], diagnostics)
    return current
