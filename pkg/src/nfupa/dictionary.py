"""Modified DFT dictionaries, their Kronecker lift and the polar-domain baseline.

Coefficient grids follow column-major vectorization: for an ``n_x x n_y``
coefficient matrix ``S`` the flat vector is ``S.ravel(order="F")`` so that
``vec(Dx S Dy^T) == kron(Dy, Dx) @ vec(S)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import dft

from .channel import FAR_FIELD_R, UpaGeometry, field_boundaries, ula_steering_vector


def unitary_dft(n: int) -> np.ndarray:
    """Unitary DFT whose column ``k`` is the far-field ULA response at ``zeta = 2k/n``."""
    return dft(n, scale="sqrtn").conj()


def quadratic_phase(n: int, zeta: float, r: float, geom: UpaGeometry) -> np.ndarray:
    """Unit-modulus near-field correction ``exp(-j k0 k^2 d^2 (1 - zeta^2) / 2r)``."""
    if not r > 0:
        raise ValueError(f"reference distance must be positive, got {r}")
    if abs(zeta) > 1 + 1e-12:
        raise ValueError(f"|zeta| must be <= 1, got {zeta}")
    k = np.arange(n)
    return np.exp(-1j * geom.wavenumber * (k * geom.d) ** 2 / (2 * r) * (1 - zeta**2))


@dataclass(frozen=True)
class ModifiedDft:
    """``diag(b(zeta_ref, r_ref)) @ DFT`` for one array axis."""

    matrix: np.ndarray
    zeta_ref: float
    r_ref: float
    axis: str = "horizontal"

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def modified_dft(
    n: int, zeta: float, r: float, geom: UpaGeometry, axis: str = "horizontal"
) -> ModifiedDft:
    """Build the modified DFT basis for an ``n``-element axis.

    The quadratic-phase diagonal is kept at unit modulus (the ``1/sqrt(n)``
    normalization lives in the DFT), so the result is unitary.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if axis not in ("horizontal", "vertical"):
        raise ValueError(f"axis must be 'horizontal' or 'vertical', got {axis!r}")
    b = quadratic_phase(n, zeta, r, geom)
    return ModifiedDft(b[:, None] * unitary_dft(n), float(zeta), float(r), axis)


def to_sparse_domain(a: np.ndarray, dft_: ModifiedDft) -> np.ndarray:
    """Coefficients ``D^H a`` of a length-``n`` vector in the modified basis."""
    a = np.asarray(a)
    if a.shape != (dft_.n,):
        raise ValueError(f"vector of shape {a.shape} does not match dictionary size {dft_.n}")
    return dft_.matrix.conj().T @ a


def kron_dictionary(dx: ModifiedDft, dy: ModifiedDft) -> np.ndarray:
    """Full ``N x N`` dictionary ``kron(Dy, Dx)`` acting on column-major ``vec(S)``."""
    if dx.axis != "horizontal" or dy.axis != "vertical":
        raise ValueError("expected a horizontal dx and a vertical dy")
    return np.kron(dy.matrix, dx.matrix)


@dataclass(frozen=True)
class UpaDictionary:
    """Pair of axis dictionaries and their Kronecker lift for one geometry."""

    dx: ModifiedDft
    dy: ModifiedDft

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.dx.n, self.dy.n

    @cached_property
    def matrix(self) -> np.ndarray:
        return kron_dictionary(self.dx, self.dy)

    def synthesize(self, beta: np.ndarray) -> np.ndarray:
        """Channel matrix ``Dx S Dy^T`` for the column-major coefficient vector ``beta``."""
        S = np.reshape(beta, self.grid_shape, order="F")
        return self.dx.matrix @ S @ self.dy.matrix.T

    def measurement_matrix(self, f: np.ndarray) -> np.ndarray:
        """``F @ kron(Dy, Dx)`` without forming the ``N x N`` dictionary.

        Row ``t`` of ``F`` is ``vec(B_t)^T``; the product row is ``vec(Dx^T B_t Dy)^T``.
        """
        nx, ny = self.grid_shape
        B = f.reshape(f.shape[0], ny, nx).transpose(0, 2, 1)
        M = self.dx.matrix.T @ B @ self.dy.matrix
        return M.transpose(0, 2, 1).reshape(f.shape[0], nx * ny)

    def reconstruct(self, beta: np.ndarray) -> np.ndarray:
        """Vectorized channel ``kron(Dy, Dx) @ beta``."""
        return self.synthesize(beta).ravel(order="F")

    def analyze(self, H: np.ndarray) -> np.ndarray:
        """Coefficient matrix ``S = Dx^H H conj(Dy)``."""
        return self.dx.matrix.conj().T @ H @ self.dy.matrix.conj()


def upa_dictionary(
    geom: UpaGeometry, zeta_a: float, zeta_e: float, r: float
) -> UpaDictionary:
    """Modified 2D-DFT dictionary referenced at ``(zeta_a, zeta_e, r)``.

    Both axes share the same reference distance.
    """
    return UpaDictionary(
        modified_dft(geom.n_x, zeta_a, r, geom, "horizontal"),
        modified_dft(geom.n_y, zeta_e, r, geom, "vertical"),
    )


def nominal_dictionary(
    geom: UpaGeometry, zeta_a: float = 0.0, zeta_e: float = 0.0, r: float | None = None
) -> UpaDictionary:
    """Dictionary built without channel knowledge; ``r`` defaults to the Rayleigh distance."""
    if r is None:
        r = field_boundaries(geom).rayleigh
    return upa_dictionary(geom, zeta_a, zeta_e, r)


def block_slices(n: int, block_size: int) -> list[slice]:
    """Contiguous blocks of ``block_size`` covering ``range(n)``; the last may be shorter."""
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    return [slice(s, min(s + block_size, n)) for s in range(0, n, block_size)]


@dataclass(frozen=True)
class SparseGridCoefficients:
    """Coefficient vector over an ``grid_nx x grid_ny`` grid, partitioned in blocks.

    ``grid_nx``/``grid_ny`` are ``None`` when the coefficients do not live on a
    2D grid (e.g. polar-domain atoms).
    """

    values: np.ndarray
    grid_nx: int | None
    grid_ny: int | None
    block_size: int = 6

    def __post_init__(self):
        if self.grid_nx is not None and self.values.shape != (self.grid_nx * self.grid_ny,):
            raise ValueError(
                f"{self.values.shape} coefficients for a {self.grid_nx}x{self.grid_ny} grid"
            )

    @property
    def matrix(self) -> np.ndarray:
        return np.reshape(self.values, (self.grid_nx, self.grid_ny), order="F")

    @property
    def row_blocks(self) -> list[slice]:
        return block_slices(self.grid_nx, self.block_size)

    @property
    def col_blocks(self) -> list[slice]:
        return block_slices(self.grid_ny, self.block_size)

    def block_energy(self) -> np.ndarray:
        """Energy of every 2D tile, shape ``(n_row_blocks, n_col_blocks)``."""
        P = np.abs(self.matrix) ** 2
        return np.array(
            [[P[rb, cb].sum() for cb in self.col_blocks] for rb in self.row_blocks]
        )

    def tile_indices(self) -> list[np.ndarray]:
        """Flat (column-major) indices of each 2D tile, row-block major order."""
        idx = np.arange(self.grid_nx * self.grid_ny).reshape(
            (self.grid_nx, self.grid_ny), order="F"
        )
        return [idx[rb, cb].ravel(order="F") for rb in self.row_blocks for cb in self.col_blocks]


def block_support_1d(v: np.ndarray, block_size: int, threshold: float = 1e-6) -> set[int]:
    """Blocks of ``v`` whose energy exceeds ``threshold`` times the largest block energy."""
    e = np.array([np.sum(np.abs(v[s]) ** 2) for s in block_slices(len(v), block_size)])
    if e.max() == 0:
        return set()
    return {int(i) for i in np.flatnonzero(e > threshold * e.max())}


def sigma_support(
    beta: SparseGridCoefficients, threshold: float = 1e-6
) -> set[tuple[int, int]]:
    """Active 2D tiles ``(p, q)`` whose energy exceeds ``threshold`` times the peak tile."""
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    E = beta.block_energy()
    if E.max() == 0:
        return set()
    return {(int(p), int(q)) for p, q in zip(*np.nonzero(E > threshold * E.max()))}


@dataclass(frozen=True)
class PolarDictionary:
    """Overcomplete near-field dictionary on a separable (zeta_a, zeta_e, r) grid."""

    atoms: np.ndarray
    grid: np.ndarray  # (n_atoms, 3): zeta_a, zeta_e, r

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]


def polar_dictionary(
    geom: UpaGeometry, angle_samples: int, distance_samples: int
) -> PolarDictionary:
    """Factored UPA atoms on a uniform zeta grid and inverse-distance rings.

    Rings sit at ``F_R / s`` for ``s = 1 .. distance_samples - 1`` plus a far-field
    ring (``s = 0``).  The zeta grid ``-1 + 2k/S`` coincides with the DFT grid
    when ``S`` equals the axis size.
    """
    if angle_samples < 1 or distance_samples < 1:
        raise ValueError("sample counts must be >= 1")
    zetas = -1 + 2 * np.arange(angle_samples) / angle_samples
    rayleigh = field_boundaries(geom).rayleigh
    radii = [FAR_FIELD_R] + [rayleigh / s for s in range(1, distance_samples)]

    atoms, grid = [], []
    for r in radii:
        AX = np.stack([ula_steering_vector(z, r, geom.n_x, geom) for z in zetas], axis=1)
        AY = np.stack([ula_steering_vector(z, r, geom.n_y, geom) for z in zetas], axis=1)
        # column (i, j) -> vec(ax_i ay_j^T) = kron(ay_j, ax_i)
        block = np.einsum("yj,xi->yxji", AY, AX).reshape(geom.n, -1)
        atoms.append(block)
        za, ze = np.meshgrid(zetas, zetas, indexing="xy")
        grid.append(np.column_stack([za.ravel(), ze.ravel(), np.full(za.size, r)]))
    atoms = np.concatenate(atoms, axis=1)
    atoms /= np.linalg.norm(atoms, axis=0, keepdims=True)
    return PolarDictionary(atoms, np.concatenate(grid))
