"""Channel estimators: 2D/1D pattern-coupled SBL, block OMP and polar-domain OMP."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse

from .dictionary import PolarDictionary, SparseGridCoefficients, UpaDictionary
from .gamp import GampConfig, GampResult, gamp_gaussian, posterior_direct

log = logging.getLogger(__name__)

COUPLINGS = ("one_dimensional", "two_dimensional")


@dataclass(frozen=True)
class PcsblHyperParams:
    a: float = 1.5
    b: float = 1e-6
    rho: float = 1.0
    coupling: str = "two_dimensional"
    eps: float = 1e-6
    t_max: int = 100

    def __post_init__(self):
        if not self.a > 1:
            raise ValueError("a must exceed 1")
        if not self.b > 0:
            raise ValueError("b must be positive")
        if not 0 <= self.rho <= 1:
            raise ValueError("rho must lie in [0, 1]")
        if self.coupling not in COUPLINGS:
            raise ValueError(f"coupling must be one of {COUPLINGS}")
        if self.t_max < 1:
            raise ValueError("t_max must be >= 1")


@dataclass
class PcsblState:
    alpha: np.ndarray
    eta: np.ndarray
    mu: np.ndarray
    psi_diag: np.ndarray
    iter: int = 0


@dataclass
class RecoveryResult:
    beta_hat: SparseGridCoefficients
    h_hat: np.ndarray
    H_hat: np.ndarray
    iterations: int
    converged: bool
    residual_norm: float
    # greedy methods: residual norm after each iteration (index 0 is ||y||)
    residual_history: list[float] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)


def neighbor_set(n: int, grid_nx: int, grid_ny: int, coupling: str) -> set[int]:
    """Indices coupled to coefficient ``n`` (column-major position on the grid)."""
    size = grid_nx * grid_ny
    if not 0 <= n < size:
        raise IndexError(f"index {n} outside grid of {size}")
    if coupling == "one_dimensional":
        return {k for k in (n - 1, n + 1) if 0 <= k < size}
    if coupling != "two_dimensional":
        raise ValueError(f"unknown coupling {coupling!r}")
    i, j = n % grid_nx, n // grid_nx
    out = set()
    for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        ii, jj = i + di, j + dj
        if 0 <= ii < grid_nx and 0 <= jj < grid_ny:
            out.add(ii + jj * grid_nx)
    return out


def coupling_matrix(grid_nx: int, grid_ny: int, coupling: str) -> scipy.sparse.csr_matrix:
    """Sparse 0/1 adjacency ``G`` with ``(G @ v)[n] = sum of v over neighbor_set(n)``."""
    size = grid_nx * grid_ny
    rows, cols = [], []
    for n in range(size):
        for k in neighbor_set(n, grid_nx, grid_ny, coupling):
            rows.append(n)
            cols.append(k)
    return scipy.sparse.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(size, size)
    )


def coupled_precision(alpha: np.ndarray, G, rho: float) -> np.ndarray:
    return alpha + rho * (G @ alpha)


def m_step(mu: np.ndarray, psi_diag: np.ndarray, G, hp: PcsblHyperParams) -> np.ndarray:
    """Hyperparameter update ``alpha_n = (a - 1) / (0.5 omega_n + b)``."""
    second_moment = np.abs(mu) ** 2 + psi_diag
    omega = second_moment + hp.rho * (G @ second_moment)
    return (hp.a - 1) / (0.5 * omega + hp.b)


def _result(beta, grid_shape, block_size, dictionary, n_x, n_y, **kw) -> RecoveryResult:
    h = dictionary.reconstruct(beta)
    coeffs = SparseGridCoefficients(beta, *grid_shape, block_size=block_size)
    return RecoveryResult(coeffs, h, np.reshape(h, (n_x, n_y), order="F"), **kw)


def pcsbl_estimate(
    y: np.ndarray,
    phi: np.ndarray,
    dictionary: UpaDictionary,
    gamma: float,
    hp: PcsblHyperParams = PcsblHyperParams(),
    gamp_cfg: GampConfig = GampConfig(),
    e_step: str = "gamp",
    block_size: int = 6,
    trace: list | None = None,
) -> RecoveryResult:
    """EM recovery of 2D (or 1D) pattern-coupled sparse coefficients.

    The E-step is GAMP (``e_step="gamp"``, warm-started across EM iterations)
    or the dense posterior (``e_step="direct"``).  ``trace``, if given,
    receives a ``PcsblState`` snapshot after every M-step.
    """
    T, N = phi.shape
    nx, ny = dictionary.grid_shape
    if N != nx * ny or y.shape != (T,):
        raise ValueError("dimension mismatch between y, phi and dictionary")
    if not gamma > 0:
        raise ValueError("gamma must be positive")

    G = coupling_matrix(nx, ny, hp.coupling)
    alpha = np.ones(N)
    eta = coupled_precision(alpha, G, hp.rho)
    beta_prev = np.zeros(N, dtype=complex)
    phi_abs2 = phi.real**2 + phi.imag**2
    post: GampResult | None = None
    gamp_ok = True
    converged = False
    t = 0
    while t < hp.t_max:
        if e_step == "gamp":
            post = gamp_gaussian(phi, y, eta, gamma, gamp_cfg, warm_start=post, phi_abs2=phi_abs2)
            gamp_ok &= not post.diverged
        elif e_step == "direct":
            post = posterior_direct(phi, y, eta, gamma)
        else:
            raise ValueError(f"unknown e_step {e_step!r}")
        alpha = m_step(post.mean, post.variance, G, hp)
        eta = coupled_precision(alpha, G, hp.rho)
        t += 1
        if trace is not None:
            trace.append(PcsblState(alpha.copy(), eta.copy(), post.mean.copy(), post.variance.copy(), t))
        change = float(np.sum(np.abs(post.mean - beta_prev) ** 2))
        beta_prev = post.mean
        if change < hp.eps:
            converged = True
            break

    beta = beta_prev
    res = float(np.linalg.norm(y - phi @ beta))
    flags = [] if gamp_ok else ["gamp_diverged"]
    return _result(
        beta, (nx, ny), block_size, dictionary, nx, ny,
        iterations=t, converged=converged and gamp_ok, residual_norm=res, flags=flags,
    )


def _least_squares(A: np.ndarray, y: np.ndarray):
    """LS fit, returning ``None`` when ``A`` has fewer rows than columns or is rank deficient."""
    if A.shape[1] > A.shape[0]:
        return None
    x, _, rank, _ = scipy.linalg.lstsq(A, y, lapack_driver="gelsd")
    if rank < A.shape[1]:
        return None
    return x


def _greedy(y, phi, groups, max_groups, residual_tol):
    """Shared (block) OMP loop over column groups.

    Returns ``(coefficients, iterations, residual_history, flags)``.
    """
    N = phi.shape[1]
    x = np.zeros(N, dtype=complex)
    r = y.astype(complex)
    history = [float(np.linalg.norm(r))]
    flags: list[str] = []
    selected: list[int] = []
    excluded = np.zeros(len(groups), dtype=bool)
    col_norm = np.linalg.norm(phi, axis=0)
    col_norm[col_norm == 0] = 1.0
    label = np.empty(N, dtype=int)
    for gi, g in enumerate(groups):
        label[g] = gi
    it = 0
    while len(selected) < max_groups and history[-1] > residual_tol:
        corr = np.abs(phi.conj().T @ r) / col_norm
        score = np.bincount(label, weights=corr**2, minlength=len(groups))
        score[excluded] = -np.inf
        if not np.isfinite(score.max()):
            break
        best = int(np.argmax(score))  # argmax keeps the lowest index on ties
        trial = selected + [best]
        cols = np.concatenate([groups[g] for g in trial])
        coef = _least_squares(phi[:, cols], y)
        excluded[best] = True
        if coef is None:
            flags.append(f"dropped_group_{best}")
            continue
        selected = trial
        x = np.zeros(N, dtype=complex)
        x[cols] = coef
        r = y - phi[:, cols] @ coef
        history.append(float(np.linalg.norm(r)))
        it += 1
    return x, it, history, flags


def block_tiles(grid_nx: int, grid_ny: int, block_size: int) -> list[np.ndarray]:
    """Column indices of each ``B x B`` tile of the coefficient grid."""
    probe = SparseGridCoefficients(np.zeros(grid_nx * grid_ny), grid_nx, grid_ny, block_size)
    return probe.tile_indices()


def bomp_estimate(
    y: np.ndarray,
    phi: np.ndarray,
    dictionary: UpaDictionary,
    block_size: int = 6,
    max_blocks: int = 6,
    residual_tol: float = 0.0,
) -> RecoveryResult:
    """Block OMP over ``B x B`` tiles of the coefficient grid."""
    nx, ny = dictionary.grid_shape
    if phi.shape[1] != nx * ny:
        raise ValueError("phi columns do not match the dictionary grid")
    groups = block_tiles(nx, ny, block_size)
    beta, it, hist, flags = _greedy(y, phi, groups, max_blocks, residual_tol)
    return _result(
        beta, (nx, ny), block_size, dictionary, nx, ny,
        iterations=it, converged=hist[-1] <= residual_tol, residual_norm=hist[-1],
        residual_history=hist, flags=flags,
    )


def polar_omp_estimate(
    y: np.ndarray,
    f: np.ndarray,
    polar: PolarDictionary,
    n_x: int,
    n_y: int,
    max_atoms: int = 12,
    residual_tol: float = 0.0,
    phi: np.ndarray | None = None,
) -> RecoveryResult:
    """OMP over the polar-domain dictionary; ``phi = f @ polar.atoms`` may be passed in."""
    if f.shape[1] != polar.atoms.shape[0] or polar.atoms.shape[0] != n_x * n_y:
        raise ValueError("measurement matrix, polar dictionary and array size disagree")
    if phi is None:
        phi = f @ polar.atoms
    groups = list(np.arange(polar.n_atoms)[:, None])
    x, it, hist, flags = _greedy(y, phi, groups, max_atoms, residual_tol)
    h = polar.atoms @ x
    return RecoveryResult(
        SparseGridCoefficients(x, None, None, block_size=1),
        h,
        np.reshape(h, (n_x, n_y), order="F"),
        iterations=it,
        converged=hist[-1] <= residual_tol,
        residual_norm=hist[-1],
        residual_history=hist,
        flags=flags,
    )
