"""The four channel estimators on one desk-scale trial.

Draws a three-path channel for a 16x16 array, sends T = 128 pilots at 10 dB
SNR and recovers the channel with 2D-PCSBL, 1D PCSBL, block OMP and
polar-domain OMP.
"""
# %%
import time
from dataclasses import replace

import numpy as np

from nfupa import PcsblHyperParams, ScenarioConfig, UpaGeometry
from nfupa import bomp_estimate, pcsbl_estimate, polar_omp_estimate, nmse_db
from nfupa.simulation import EstimatorSettings, build_polar, make_trial, trial_dictionary, trial_rng

cfg = ScenarioConfig(UpaGeometry(16, 16), n_paths=3, t_samples=128, snr_db=10.0)
data = make_trial(cfg, trial_rng(seed=1, trial_id=0))
settings = EstimatorSettings()
for p in data.paths:
    print(f"path |g| = {abs(p.gain):.3f}  r = {p.r:.3f} m  zeta = ({p.zeta_a:+.2f}, {p.zeta_e:+.2f})")

# %%
# Genie dictionary: the modified DFT referenced at the LoS path
dico = trial_dictionary(cfg, data, settings)
phi = dico.measurement_matrix(data.F)
polar = build_polar(cfg, settings)

runs = {
    "2d-pcsbl": lambda: pcsbl_estimate(data.y, phi, dico, data.gamma, PcsblHyperParams()),
    "pcsbl": lambda: pcsbl_estimate(
        data.y, phi, dico, data.gamma, PcsblHyperParams(coupling="one_dimensional")),
    "bomp": lambda: bomp_estimate(data.y, phi, dico, 6, max_blocks=6),
    "polar-omp": lambda: polar_omp_estimate(data.y, data.F, polar, 16, 16, max_atoms=12),
}
# One trial is noisy; 05_monte_carlo_sweep.py averages over many.
for name, run in runs.items():
    t0 = time.perf_counter()
    res = run()
    print(f"{name:>9}: NMSE {nmse_db(data.H, res.H_hat):6.2f} dB  "
          f"iterations {res.iterations:3d}  {1e3 * (time.perf_counter() - t0):6.1f} ms")

# %%
# With rho = 0 the two couplings are the same algorithm.
hp = PcsblHyperParams(rho=0.0, t_max=20)
a = pcsbl_estimate(data.y, phi, dico, data.gamma, hp)
b = pcsbl_estimate(data.y, phi, dico, data.gamma, replace(hp, coupling="one_dimensional"))
print("rho = 0, identical estimates:", np.array_equal(a.h_hat, b.h_hat))
