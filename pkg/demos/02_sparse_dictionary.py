"""Modified 2D-DFT dictionary and the block-sparse channel picture.

A three-path channel on a 64x64 array is moved into the sparse domain with
the modified DFT referenced at the LoS path.  The energy collects in a few
row and column bands, and the strongest tiles sit where those bands cross.
"""
# %%
from pathlib import Path

import numpy as np

from nfupa import PathParams, UpaGeometry, synthesize_channel, upa_dictionary
from nfupa.dictionary import SparseGridCoefficients, sigma_support
from nfupa.plotting import sparsity_heatmap

out = Path(__file__).with_name("output")
out.mkdir(exist_ok=True)

geom = UpaGeometry(64, 64)
los = PathParams(1.0, 0.3, 0.4, -0.3)
nlos = [PathParams(0.2239j, 0.5, -0.6, 0.5), PathParams(-0.2239, 0.8, 0.9, 0.2)]
H = synthesize_channel(geom, [los, *nlos])

# %%
dico = upa_dictionary(geom, los.zeta_a, los.zeta_e, los.r)
S = dico.analyze(H)  # Dx^H H conj(Dy)
print("unitary transform keeps the energy:", np.linalg.norm(S), np.linalg.norm(H))

coeffs = SparseGridCoefficients(S.ravel(order="F"), 64, 64, block_size=6)
E = coeffs.block_energy()
print("tile energy grid", E.shape, "- share held by the top 10 tiles:",
      round(np.sort(E.ravel())[::-1][:10].sum() / E.sum(), 3))
print("tiles above 1% of the peak:", sorted(sigma_support(coeffs, threshold=1e-2)))

# %%
# For a rank-1 coefficient matrix the active tiles are exactly the product of
# the per-axis active blocks.
u = np.zeros(36, complex); u[6:12] = 1
v = np.zeros(36, complex); v[0:6] = 1; v[24:30] = 2
rank1 = SparseGridCoefficients(np.outer(u, v).ravel(order="F"), 36, 36, 6)
print("rank-1 support:", sorted(sigma_support(rank1)))

# %%
svg = sparsity_heatmap(S, out / "sigma_64x64.svg", block_size=6)
print("heatmap written to", svg)
