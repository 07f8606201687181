"""Fast invariant suite behind ``nfupa selftest``."""
from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .channel import UpaGeometry
from .dictionary import (
    SparseGridCoefficients,
    block_slices,
    block_support_1d,
    modified_dft,
    sigma_support,
    upa_dictionary,
)
from .estimators import PcsblHyperParams, pcsbl_estimate
from .gamp import GampConfig, gamp_gaussian, posterior_direct

# a GAMP budget that reaches the fixed point on small instances
ORACLE_GAMP = GampConfig(max_inner_iters=500, tol=1e-8)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def random_block_sparse(n: int, block_size: int, n_active: int, rng) -> tuple[np.ndarray, set[int]]:
    """Vector whose nonzeros fill exactly ``n_active`` randomly chosen blocks."""
    blocks = block_slices(n, block_size)
    active = rng.choice(len(blocks), size=min(n_active, len(blocks)), replace=False)
    v = np.zeros(n, dtype=complex)
    for b in active:
        s = blocks[b]
        m = s.stop - s.start
        v[s] = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    return v, {int(b) for b in active}


def random_gaussian_instance(rng, n_max: int = 32, t_max: int = 64):
    """Small linear-Gaussian instance ``(phi, y, eta, gamma)``."""
    N = int(rng.integers(4, n_max + 1))
    T = int(rng.integers(4, t_max + 1))
    phi = (rng.standard_normal((T, N)) + 1j * rng.standard_normal((T, N))) / np.sqrt(2 * T)
    x = np.zeros(N, dtype=complex)
    x[rng.choice(N, size=min(3, N), replace=False)] = 1.0
    eta = rng.uniform(0.1, 10.0, N)
    gamma = 10 ** rng.uniform(0, 3)
    noise = (rng.standard_normal(T) + 1j * rng.standard_normal(T)) / np.sqrt(2 * gamma)
    return phi, phi @ x + noise, eta, gamma


def check_unitarity(rng, corrupt: bool = False) -> str:
    geom = UpaGeometry(16, 16)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 65))
        D = modified_dft(n, rng.uniform(-1, 1), rng.uniform(0.05, 10.0), geom).matrix
        if corrupt:
            D = D.copy()
            D[:, 0] *= 1.5
            corrupt = False
        worst = max(worst, np.abs(D.conj().T @ D - np.eye(n)).max())
    dico = upa_dictionary(geom, 0.3, -0.2, 0.5)
    K = dico.matrix
    worst = max(worst, np.abs(K.conj().T @ K - np.eye(geom.n)).max())
    if worst > 1e-10:
        raise AssertionError(f"max |D^H D - I| = {worst:.2e}")
    return f"max |D^H D - I| = {worst:.1e}"


def check_support(rng, cases: int = 200) -> str:
    for _ in range(cases):
        nx, ny = (int(v) for v in rng.integers(6, 40, size=2))
        B = int(rng.integers(2, 8))
        u, su = random_block_sparse(nx, B, int(rng.integers(1, 4)), rng)
        v, sv = random_block_sparse(ny, B, int(rng.integers(1, 4)), rng)
        S = np.outer(u, v)
        coeffs = SparseGridCoefficients(S.ravel(order="F"), nx, ny, B)
        got = sigma_support(coeffs)
        want = {(p, q) for p in block_support_1d(u, B) for q in block_support_1d(v, B)}
        if got != want or want != {(p, q) for p in su for q in sv}:
            raise AssertionError(f"support mismatch on {nx}x{ny}, B={B}")
    return f"{cases} rank-1 cases"


def check_gamp_oracle(rng, cases: int = 20) -> str:
    worst = 0.0
    for _ in range(cases):
        phi, y, eta, gamma = random_gaussian_instance(rng)
        g = gamp_gaussian(phi, y, eta, gamma, ORACLE_GAMP)
        d = posterior_direct(phi, y, eta, gamma)
        worst = max(worst, np.linalg.norm(g.mean - d.mean) / np.linalg.norm(d.mean))
    if worst > 1e-2:
        raise AssertionError(f"relative error {worst:.2e}")
    return f"max relative error {worst:.1e}"


def check_rho_zero(rng, cases: int = 3) -> str:
    geom = UpaGeometry(8, 8)
    hp = PcsblHyperParams(rho=0.0, eps=0.0, t_max=5)
    for _ in range(cases):
        dico = upa_dictionary(geom, rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.3)
        F = np.exp(2j * np.pi * rng.random((32, geom.n))) / np.sqrt(geom.n)
        phi = dico.measurement_matrix(F)
        y = phi @ (rng.standard_normal(geom.n) * (rng.random(geom.n) < 0.1)) + 0.01
        runs = [
            pcsbl_estimate(y, phi, dico, 100.0, replace(hp, coupling=c))
            for c in ("one_dimensional", "two_dimensional")
        ]
        if not np.array_equal(runs[0].beta_hat.values, runs[1].beta_hat.values):
            raise AssertionError("1D and 2D iterates differ at rho = 0")
    return f"{cases} instances bitwise equal"


def run_checks(
    seed: int = 0, corrupt_dictionary: bool = False, report: Callable[[str], None] | None = print
) -> list[CheckResult]:
    """Run every check; ``corrupt_dictionary`` breaks one basis to exercise the failure path."""
    rng = np.random.default_rng(seed)
    checks = [
        ("unitarity", lambda: check_unitarity(rng, corrupt_dictionary)),
        ("block_support", lambda: check_support(rng)),
        ("gamp_vs_direct", lambda: check_gamp_oracle(rng)),
        ("rho_zero_equivalence", lambda: check_rho_zero(rng)),
    ]
    out = []
    for name, fn in checks:
        t0 = time.perf_counter()
        try:
            detail, ok = fn(), True
        except AssertionError as exc:
            detail, ok = str(exc), False
        res = CheckResult(name, ok, detail, time.perf_counter() - t0)
        out.append(res)
        if report:
            report(f"{'PASS' if ok else 'FAIL'}  {name}: {detail} ({res.seconds:.2f} s)")
    return out
