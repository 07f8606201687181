"""GAMP as a cheap stand-in for the Gaussian posterior.

For a linear model with a complex Gaussian prior, GAMP's fixed point is the
exact posterior mean.  Here it is compared with a dense Cholesky solve.
"""
# %%
import time

import numpy as np

from nfupa import GampConfig, gamp_gaussian, posterior_direct

rng = np.random.default_rng(0)
T, N = 64, 32
phi = (rng.standard_normal((T, N)) + 1j * rng.standard_normal((T, N))) / np.sqrt(2 * T)
x = np.zeros(N, complex)
x[[3, 4, 17]] = [1, -1j, 0.5]
gamma = 100.0
y = phi @ x + (rng.standard_normal(T) + 1j * rng.standard_normal(T)) / np.sqrt(2 * gamma)
eta = rng.uniform(0.1, 10, N)

exact = posterior_direct(phi, y, eta, gamma)

# %%
# Default settings (50 damped iterations) and a longer run
for cfg in (GampConfig(), GampConfig(max_inner_iters=500, tol=1e-10)):
    t0 = time.perf_counter()
    g = gamp_gaussian(phi, y, eta, gamma, cfg)
    err = np.linalg.norm(g.mean - exact.mean) / np.linalg.norm(exact.mean)
    vr = g.variance / exact.variance
    print(f"iters {g.iters_used:3d}  converged {g.converged}  mean error {err:.1e}  "
          f"variance ratio {vr.min():.2f}..{vr.max():.2f}  ({(time.perf_counter() - t0) * 1e3:.1f} ms)")

# %%
# Warm starts: a slightly different prior reuses the previous messages.
cold = gamp_gaussian(phi, y, eta, gamma)
warm = gamp_gaussian(phi, y, eta * 1.05, gamma, warm_start=cold)
print("cold start iterations", cold.iters_used, "- warm start iterations", warm.iters_used)
