"""Fourier basis on the periodic square, transforms and derivative operators.

Normalization: ``forward`` divides by N**2 so that the zero mode is the field
mean, and ``inverse(forward(f)) == f``. Arrays are indexed ``[ix, iy]`` with
``x = ix * dx``. Mode ``n`` of ``forward(f)`` multiplies ``exp(+i k.x)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    L: float
    N: int

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"grid length must be positive, got {self.L!r}")
        if self.N < 8 or self.N & (self.N - 1):
            raise ValueError(f"grid size must be a power of two >= 8, got {self.N!r}")

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.N) * self.dx

    def mesh(self):
        return np.meshgrid(self.x, self.x, indexing="ij")


class FourierBasis:
    """Wavevector tables for a :class:`Grid`.

    ``n1, n2`` are the integer mode indices on the standard FFT ordering,
    ``kx, ky`` the wavevector components and ``k`` the magnitude. The zero
    mode sits at ``[0, 0]``; ``nyquist`` flags the unpaired ``n = -N/2``
    lines, which carry no resolved information for odd derivatives.
    """

    def __init__(self, grid: Grid, dealias: bool = False):
        self.grid = grid
        self.dealias = dealias
        N = grid.N
        n = np.fft.fftfreq(N, 1.0 / N).astype(int)
        self.n = n
        self.n1, self.n2 = np.meshgrid(n, n, indexing="ij")
        self.k1d = 2.0 * np.pi / grid.L * n
        self.kx, self.ky = np.meshgrid(self.k1d, self.k1d, indexing="ij")
        self.k2 = self.kx**2 + self.ky**2
        self.k = np.sqrt(self.k2)
        self.nyquist = (self.n1 == -N // 2) | (self.n2 == -N // 2)
        self.zero = (0, 0)

    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def L(self) -> float:
        return self.grid.L

    @cached_property
    def resolved(self) -> np.ndarray:
        """Modes that participate in odd derivatives and point sources."""
        mask = ~self.nyquist
        if self.dealias:
            cut = self.N // 3
            mask &= (np.abs(self.n1) <= cut) & (np.abs(self.n2) <= cut)
        return mask

    @cached_property
    def nonzero(self) -> np.ndarray:
        mask = np.ones((self.N, self.N), dtype=bool)
        mask[0, 0] = False
        return mask

    @cached_property
    def cd2_symbol(self) -> np.ndarray:
        """Eigenvalues of the periodic 5-point Laplacian on each mode."""
        dx = self.grid.dx
        s = (4.0 / dx**2) * np.sin(self.k1d * dx / 2.0) ** 2
        return -(s[:, None] + s[None, :])


def forward(field: np.ndarray, basis: FourierBasis | None = None) -> np.ndarray:
    field = np.asarray(field)
    if field.ndim != 2 or field.shape[0] != field.shape[1]:
        raise ShapeError(f"expected a square 2-D field, got shape {field.shape}")
    if basis is not None and field.shape[0] != basis.N:
        raise ShapeError(f"field has {field.shape[0]} points per side, basis has {basis.N}")
    return np.fft.fft2(field) / field.size


def inverse(coeffs: np.ndarray, basis: FourierBasis | None = None) -> np.ndarray:
    coeffs = np.asarray(coeffs)
    if coeffs.ndim != 2 or coeffs.shape[0] != coeffs.shape[1]:
        raise ShapeError(f"expected square 2-D coefficients, got shape {coeffs.shape}")
    if basis is not None and coeffs.shape[0] != basis.N:
        raise ShapeError(f"coefficients have {coeffs.shape[0]} modes per side, basis has {basis.N}")
    return np.fft.ifft2(coeffs).real * coeffs.size


def conjugate_partner(coeffs: np.ndarray) -> np.ndarray:
    """Coefficient array re-indexed so entry ``n`` holds the value at ``-n``."""
    return np.roll(np.flip(coeffs, axis=(0, 1)), 1, axis=(0, 1))


def hermitian_defect(coeffs: np.ndarray) -> float:
    """Relative violation of c(-n) = conj(c(n)); zero for a real field."""
    scale = np.max(np.abs(coeffs))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(coeffs - np.conj(conjugate_partner(coeffs)))) / scale)


def laplacian_spectral(coeffs: np.ndarray, basis: FourierBasis) -> np.ndarray:
    return -basis.k2 * coeffs


def laplacian_cd2(field: np.ndarray, dx: float) -> np.ndarray:
    f = np.asarray(field, dtype=float)
    return (
        np.roll(f, 1, 0) + np.roll(f, -1, 0) + np.roll(f, 1, 1) + np.roll(f, -1, 1) - 4.0 * f
    ) / dx**2


def _phases(basis: FourierBasis, point):
    x, y = float(point[0]), float(point[1])
    return np.exp(1j * basis.k1d * x), np.exp(1j * basis.k1d * y)


def eval_at(coeffs: np.ndarray, basis: FourierBasis, point) -> float:
    """Value of the band-limited field at an arbitrary point (direct sum)."""
    ex, ey = _phases(basis, point)
    return float((ex @ coeffs @ ey).real)


def grad_at(coeffs: np.ndarray, basis: FourierBasis, point) -> np.ndarray:
    ex, ey = _phases(basis, point)
    c = np.where(basis.resolved, coeffs, 0.0)
    gx = (ex * (1j * basis.k1d)) @ c @ ey
    gy = ex @ c @ (ey * (1j * basis.k1d))
    return np.array([gx.real, gy.real])


def point_source(basis: FourierBasis, point) -> np.ndarray:
    """Coefficients of the band-limited unit delta at ``point``."""
    ex, ey = _phases(basis, point)
    src = np.outer(ex.conj(), ey.conj()) / basis.L**2
    src[~basis.resolved] = 0.0
    return src


def cell_source(basis: FourierBasis, point) -> np.ndarray:
    """Coefficients of a single-cell spike of weight 1/dx^2 at the nearest node."""
    dx = basis.grid.dx
    i = int(np.floor(point[0] / dx + 0.5)) % basis.N
    j = int(np.floor(point[1] / dx + 0.5)) % basis.N
    ex = np.exp(-1j * basis.k1d * (i * dx))
    ey = np.exp(-1j * basis.k1d * (j * dx))
    return np.outer(ex, ey) / basis.L**2


def bilinear_at(field: np.ndarray, grid: Grid, point) -> float:
    """Periodic bilinear interpolation of a real grid field."""
    N, dx = grid.N, grid.dx
    fx, fy = point[0] / dx, point[1] / dx
    i0, j0 = int(np.floor(fx)), int(np.floor(fy))
    ax, ay = fx - i0, fy - j0
    i0, j0 = i0 % N, j0 % N
    i1, j1 = (i0 + 1) % N, (j0 + 1) % N
    return float(
        (1 - ax) * (1 - ay) * field[i0, j0]
        + ax * (1 - ay) * field[i1, j0]
        + (1 - ax) * ay * field[i0, j1]
        + ax * ay * field[i1, j1]
    )


def gradient_fields(coeffs: np.ndarray, basis: FourierBasis):
    c = np.where(basis.resolved, coeffs, 0.0)
    return inverse(1j * basis.kx * c), inverse(1j * basis.ky * c)
