"""Near-field UPA geometry, steering matrices and channel synthesis.

Antenna indices are 0-based, with antenna (0, 0) the reference element.  The
horizontal index ``n_x`` moves along the array's first axis (aligned with the
elevation reference, so ``zeta_a = cos(theta)``) and ``n_y`` along the second
(``zeta_e = sin(theta) sin(phi)``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

# Coefficient of the Fresnel boundary F_r = c * sqrt(D^3 / lambda).  The usual
# antenna-theory value 0.62 reproduces the published 2.73 m boundary of the
# 32x256 array at 0.1 THz; 0.5 gives 2.18 m.
FRESNEL_COEFF = 0.62

FAR_FIELD_R = 1e12


@dataclass(frozen=True)
class UpaGeometry:
    """Uniform planar array of ``n_x * n_y`` elements with spacing ``d``."""

    n_x: int
    n_y: int
    f_c: float = 100e9
    d: float | None = None
    lambda_c: float = field(init=False)

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise ValueError(f"array dimensions must be >= 1, got {self.n_x}x{self.n_y}")
        if self.f_c <= 0:
            raise ValueError("carrier frequency must be positive")
        object.__setattr__(self, "lambda_c", SPEED_OF_LIGHT / self.f_c)
        if self.d is None:
            object.__setattr__(self, "d", self.lambda_c / 2)
        elif self.d <= 0:
            raise ValueError("element spacing must be positive")

    @property
    def n(self) -> int:
        return self.n_x * self.n_y

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi / self.lambda_c


@dataclass(frozen=True)
class PathParams:
    """One propagation path: complex gain, range and angles.

    ``zeta_a`` and ``zeta_e`` are derived from the angles and cannot be set.
    """

    gain: complex
    r: float
    theta: float
    phi: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"path distance must be positive, got {self.r}")

    @property
    def zeta_a(self) -> float:
        return float(np.cos(self.theta))

    @property
    def zeta_e(self) -> float:
        return float(np.sin(self.theta) * np.sin(self.phi))


@dataclass(frozen=True)
class FieldBoundaries:
    fresnel: float
    rayleigh: float
    aperture: float


def _check_index(geom: UpaGeometry, n_x: int, n_y: int) -> None:
    if not (0 <= n_x < geom.n_x and 0 <= n_y < geom.n_y):
        raise IndexError(
            f"antenna index ({n_x}, {n_y}) outside {geom.n_x}x{geom.n_y} array"
        )


def _grid(geom: UpaGeometry):
    return np.arange(geom.n_x)[:, None], np.arange(geom.n_y)[None, :]


def _exact_distances(geom: UpaGeometry, path: PathParams, ix, iy):
    r, th, ph, d = path.r, path.theta, path.phi, geom.d
    return np.sqrt(
        (r * np.sin(th) * np.cos(ph)) ** 2
        + (r * np.cos(th) - ix * d) ** 2
        + (r * np.sin(th) * np.sin(ph) - iy * d) ** 2
    )


def _approx_distances(geom: UpaGeometry, path: PathParams, ix, iy):
    r, d = path.r, geom.d
    za, ze = path.zeta_a, path.zeta_e
    return (
        r
        - d * (ix * za + iy * ze)
        + d**2 / (2 * r) * (ix**2 * (1 - za**2) + iy**2 * (1 - ze**2))
    )


def distance_exact(geom: UpaGeometry, path: PathParams, n_x: int, n_y: int) -> float:
    """Spherical-wavefront distance from antenna ``(n_x, n_y)`` to the scatterer."""
    _check_index(geom, n_x, n_y)
    return float(_exact_distances(geom, path, n_x, n_y))


def distance_approx(geom: UpaGeometry, path: PathParams, n_x: int, n_y: int) -> float:
    """Second-order (Fresnel) distance with the bilinear ``n_x n_y`` term dropped."""
    _check_index(geom, n_x, n_y)
    return float(_approx_distances(geom, path, n_x, n_y))


def ula_steering_vector(zeta: float, r: float, n: int, geom: UpaGeometry) -> np.ndarray:
    """Unit-norm near-field ULA response ``a(zeta, r, n)``.

    Element ``k`` is ``exp(-j k0 (-k d zeta + k^2 d^2 (1 - zeta^2) / (2 r))) / sqrt(n)``.
    """
    if not r > 0:
        raise ValueError(f"distance must be positive, got {r}")
    if abs(zeta) > 1 + 1e-12:
        raise ValueError(f"|zeta| must be <= 1, got {zeta}")
    k = np.arange(n)
    d = geom.d
    phase = -k * d * zeta + (k * d) ** 2 / (2 * r) * (1 - zeta**2)
    return np.exp(-1j * geom.wavenumber * phase) / np.sqrt(n)


def steering_matrix_exact(geom: UpaGeometry, path: PathParams) -> np.ndarray:
    """``n_x x n_y`` near-field steering matrix from exact element distances."""
    ix, iy = _grid(geom)
    dist = _exact_distances(geom, path, ix, iy)
    return np.exp(-1j * geom.wavenumber * (dist - path.r)) / np.sqrt(geom.n)


def steering_matrix_factored(geom: UpaGeometry, path: PathParams) -> np.ndarray:
    """Rank-1 approximation ``a(zeta_a, r, n_x) a(zeta_e, r, n_y)^T``."""
    ax = ula_steering_vector(path.zeta_a, path.r, geom.n_x, geom)
    ay = ula_steering_vector(path.zeta_e, path.r, geom.n_y, geom)
    return np.outer(ax, ay)


def synthesize_channel(
    geom: UpaGeometry, paths: Sequence[PathParams], mode: str = "exact"
) -> np.ndarray:
    """Multipath channel ``H = sum_l gain_l A_l`` as an ``n_x x n_y`` matrix.

    ``mode`` selects the exact spherical model or the outer-product factorization.
    """
    if not paths:
        raise ValueError("at least one path is required")
    if mode == "exact":
        steer = steering_matrix_exact
    elif mode == "factored":
        steer = steering_matrix_factored
    else:
        raise ValueError(f"unknown channel mode {mode!r}; use 'exact' or 'factored'")
    H = np.zeros((geom.n_x, geom.n_y), dtype=complex)
    for p in paths:
        H += p.gain * steer(geom, p)
    return H


def field_boundaries(geom: UpaGeometry, fresnel_coeff: float = FRESNEL_COEFF) -> FieldBoundaries:
    """Fresnel and Rayleigh distances using the array diagonal as aperture."""
    D = float(np.hypot((geom.n_x - 1) * geom.d, (geom.n_y - 1) * geom.d))
    return FieldBoundaries(
        fresnel=fresnel_coeff * np.sqrt(D**3 / geom.lambda_c),
        rayleigh=2 * D**2 / geom.lambda_c,
        aperture=D,
    )
