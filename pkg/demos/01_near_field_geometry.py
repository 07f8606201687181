"""Near-field geometry of a planar array.

Builds the exact spherical-wavefront steering matrix for a 16x16 array at
0.1 THz, compares it with the separable (outer-product) approximation and
prints the Fresnel and Rayleigh boundaries that bound the near field.
"""
# %%
import numpy as np

from nfupa import PathParams, UpaGeometry, field_boundaries
from nfupa import steering_matrix_exact, steering_matrix_factored, distance_approx, distance_exact

geom = UpaGeometry(16, 16)
fb = field_boundaries(geom)
print(f"lambda = {geom.lambda_c * 1e3:.3f} mm, spacing d = {geom.d * 1e3:.3f} mm")
print(f"aperture D = {fb.aperture * 100:.2f} cm, F_r = {fb.fresnel:.3f} m, F_R = {fb.rayleigh:.3f} m")

# The large array used for the full-scale experiments
big = field_boundaries(UpaGeometry(32, 256))
print(f"32x256: F_r = {big.fresnel:.2f} m, F_R = {big.rayleigh:.2f} m")

# %%
# One path in the middle of the near field.  Every entry of the exact matrix
# is a pure phase of modulus 1/sqrt(N).
path = PathParams(gain=1.0, r=0.3, theta=0.4, phi=-0.3)
A = steering_matrix_exact(geom, path)
print("entry moduli:", np.ptp(np.abs(A)), "(spread), norm", np.linalg.norm(A))

# The second-order distance drops the n_x n_y cross term, so the corner
# element carries the largest error.
for ix, iy in [(0, 0), (15, 0), (15, 15)]:
    ex, ap = distance_exact(geom, path, ix, iy), distance_approx(geom, path, ix, iy)
    print(f"element ({ix:2d},{iy:2d}): exact {ex:.6f} m, approx {ap:.6f} m")

# %%
# How good is the separable model?  The error shrinks with range.
for r in np.geomspace(fb.fresnel, fb.rayleigh, 6):
    p = PathParams(1.0, r, 0.4, -0.3)
    Ae, Af = steering_matrix_exact(geom, p), steering_matrix_factored(geom, p)
    err = np.linalg.norm(Ae - Af) / np.linalg.norm(Ae)
    print(f"r = {r:6.3f} m  relative Frobenius error {err:.3f}")
