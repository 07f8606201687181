"""Gaussian-prior GAMP and the dense posterior it approximates.

Model: ``y = Phi beta + n`` with ``n ~ CN(0, I / gamma)`` and independent priors
``beta_n ~ CN(0, 1 / eta_n)``.  Both routines return the posterior mean and the
diagonal of the posterior covariance.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

log = logging.getLogger(__name__)

DIRECT_MAX_N = 4096


@dataclass(frozen=True)
class GampConfig:
    max_inner_iters: int = 50
    damping: float = 0.7
    tol: float = 1e-6
    variance_floor: float = 1e-12
    uniform_variance: bool = False
    divergence_patience: int = 10

    def __post_init__(self):
        if self.max_inner_iters < 1:
            raise ValueError("max_inner_iters must be >= 1")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.tol <= 0 or self.variance_floor <= 0:
            raise ValueError("tol and variance_floor must be positive")


@dataclass
class GampResult:
    mean: np.ndarray
    variance: np.ndarray
    iters_used: int
    converged: bool
    diverged: bool = False
    # output-side message, kept so a later call can warm-start from it
    s_hat: np.ndarray | None = None


def _check_inputs(phi, y, eta, gamma):
    phi = np.asarray(phi)
    y = np.asarray(y)
    eta = np.asarray(eta, dtype=float)
    T, N = phi.shape
    if y.shape != (T,) or eta.shape != (N,):
        raise ValueError(f"shape mismatch: phi {phi.shape}, y {y.shape}, eta {eta.shape}")
    if not np.all(eta > 0):
        raise ValueError("prior precisions eta must be positive")
    if not gamma > 0:
        raise ValueError("noise precision gamma must be positive")
    return phi, y, eta


def gamp_gaussian(
    phi: np.ndarray,
    y: np.ndarray,
    eta: np.ndarray,
    gamma: float,
    cfg: GampConfig = GampConfig(),
    warm_start: GampResult | None = None,
    phi_abs2: np.ndarray | None = None,
) -> GampResult:
    """Sum-product GAMP for a circular Gaussian prior and AWGN output channel.

    Parameters
    ----------
    phi : (T, N) complex array
    y : (T,) complex array
    eta : (N,) prior precisions
    gamma : noise precision ``1 / sigma^2``
    cfg : iteration controls
    warm_start : previous result whose mean and output message seed the iteration
    phi_abs2 : precomputed ``|phi|**2``; pass it when calling repeatedly with one matrix

    Returns
    -------
    GampResult
        On divergence (fixed-point residual ``||x_t - x_{t-1}||`` growing for
        ``cfg.divergence_patience`` straight iterations, or a non-finite
        iterate) the iterate with the smallest such residual is returned with
        ``converged=False`` and ``diverged=True``.
    """
    phi, y, eta = _check_inputs(phi, y, eta, gamma)
    T, N = phi.shape
    noise_var = 1.0 / gamma
    damp = cfg.damping
    floor = cfg.variance_floor
    phi_h = phi.conj().T

    if cfg.uniform_variance:
        fro2 = float(np.sum(phi.real**2 + phi.imag**2))
        A2 = A2t = None
    else:
        A2 = phi_abs2 if phi_abs2 is not None else phi.real**2 + phi.imag**2
        A2t = A2.T

    if warm_start is not None:
        x = warm_start.mean.copy()
        s = warm_start.s_hat.copy() if warm_start.s_hat is not None else np.zeros(T, complex)
    else:
        x = np.zeros(N, dtype=complex)
        s = np.zeros(T, dtype=complex)
    vx = 1.0 / eta
    vs = None

    best = (np.inf, x, vx, s)
    prev_step = np.inf
    growth = 0
    converged = diverged = False
    it = 0
    for it in range(1, cfg.max_inner_iters + 1):
        # output (measurement) side
        if cfg.uniform_variance:
            vp = np.full(T, fro2 / T * vx.mean())
        else:
            vp = A2 @ vx
        p = phi @ x - vp * s
        vs_new = 1.0 / (vp + noise_var)
        s_new = (y - p) * vs_new
        if vs is None:
            s, vs = s_new, vs_new
        else:
            s = damp * s_new + (1 - damp) * s
            vs = damp * vs_new + (1 - damp) * vs

        # input (coefficient) side
        if cfg.uniform_variance:
            vr = np.full(N, 1.0 / (fro2 / N * vs.mean()))
        else:
            vr = 1.0 / (A2t @ vs)
        r = x + vr * (phi_h @ s)
        shrink = 1.0 / (1.0 + eta * vr)
        x_new = damp * (r * shrink) + (1 - damp) * x
        vx_new = np.maximum(damp * (vr * shrink) + (1 - damp) * vx, floor)

        step = float(np.linalg.norm(x_new - x))
        scale = np.linalg.norm(x_new)
        if not np.isfinite(step):
            diverged = True
            break
        # the mean can sit still (e.g. y = 0) while the variances are still moving
        v_settled = np.linalg.norm(vx_new - vx) <= cfg.tol * np.linalg.norm(vx_new)
        x, vx = x_new, vx_new

        if step < best[0]:
            best = (step, x, vx, s)
        growth = growth + 1 if step > prev_step else 0
        prev_step = step
        if growth >= cfg.divergence_patience:
            diverged = True
            break
        if step <= cfg.tol * scale and v_settled:
            converged = True
            break

    if diverged:
        log.debug("GAMP diverged after %d iterations; returning best iterate", it)
        _, x, vx, s = best
    return GampResult(x, vx, it, converged, diverged, s)


def posterior_direct(
    phi: np.ndarray, y: np.ndarray, eta: np.ndarray, gamma: float
) -> GampResult:
    """Exact Gaussian posterior via a Cholesky factorization of ``gamma Phi^H Phi + diag(eta)``."""
    phi, y, eta = _check_inputs(phi, y, eta, gamma)
    N = phi.shape[1]
    if N > DIRECT_MAX_N:
        raise ValueError(f"N={N} too large for dense posterior (limit {DIRECT_MAX_N})")
    P = gamma * (phi.conj().T @ phi)
    P[np.diag_indices(N)] += eta
    try:
        cf = scipy.linalg.cho_factor(P)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("posterior precision is not positive definite") from exc
    mean = scipy.linalg.cho_solve(cf, gamma * (phi.conj().T @ y))
    cov = scipy.linalg.cho_solve(cf, np.eye(N))
    return GampResult(mean, np.real(np.diag(cov)).copy(), 1, True)
