"""Dirichlet-to-Neumann operator over flat and variable bottom topography.

The potential below the free surface is expanded as

    phi(x, z) = sum_k e^{ik.x} [ q(k) cosh(mu k (z+1)) / cosh(mu k)
                               + X(k) sinh(mu k z) / (k cosh^2(mu k)) ]

with z in units of the reference depth (bottom at z = -H(x)). The
topographic coefficients X(k) are fixed by the no-flux bottom condition,
which after depth integration between z = -1 and z = -H reads

    div sum_k q(k) e^{ik.x} sinh(mu k b(x)) / cosh(mu k) k/|k|
        = div sum_k X(k) e^{ik.x} cosh(mu k (1 + b(x))) / cosh^2(mu k) k/|k|^2

where b = H - 1 is the depth excess over the reference. Both sides are
projected onto e^{iw.x} for every truncated wavevector w (Galerkin), which
gives the square system B X = A q.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .spectral import FourierBasis, inverse
from .topography import Topography

CONDITION_LIMIT = 1e12


class DtnAssemblyError(RuntimeError):
    pass


def _sech(a):
    e = np.exp(-np.abs(a))
    return 2.0 * e / (1.0 + e * e)


def flat_multiplier(basis: FourierBasis, mu: float, depth: float = 1.0) -> np.ndarray:
    """Symbol mu k tanh(mu k depth) of the flat-bottom operator (zero at k = 0)."""
    return mu * basis.k * np.tanh(mu * basis.k * depth)


def dtn_flat(qh: np.ndarray, basis: FourierBasis, mu: float, depth: float = 1.0) -> np.ndarray:
    return flat_multiplier(basis, mu, depth) * qh


def _sinh_over_cosh(kmu, b):
    """sinh(kmu * b) / cosh(kmu), without overflow for large kmu."""
    e2 = np.exp(-2.0 * kmu)
    return (np.exp(kmu * (b - 1.0)) - np.exp(-kmu * (b + 1.0))) / (1.0 + e2)


def _cosh_over_cosh(kmu, H):
    """cosh(kmu * H) / cosh(kmu)."""
    e2 = np.exp(-2.0 * kmu)
    return (np.exp(kmu * (H - 1.0)) + np.exp(-kmu * (H + 1.0))) / (1.0 + e2)


@dataclass
class DtnOperator:
    """Assembled Galerkin system for a static topography.

    ``trunc`` and ``domain`` are flat indices into the N x N coefficient
    array: the truncated set ({0 < |n| <= shells}) on which X lives and the
    set of Dirichlet modes that feed the A operator. The stored B matrix is
    column-scaled by cosh(mu |k|) (unknown Y = X / cosh(mu |k|)); ``B_matrix``
    returns the unscaled one.
    """

    basis: FourierBasis
    topography: Topography
    mu: float
    shells: int
    trunc: np.ndarray
    domain: np.ndarray
    A: np.ndarray
    B_scaled: np.ndarray
    row_scale: np.ndarray
    lu: tuple
    condition: float

    @property
    def cutoff(self) -> float:
        """Largest retained wavenumber magnitude M."""
        return 2.0 * np.pi * self.shells / self.basis.L

    @property
    def k_trunc(self) -> np.ndarray:
        return self.basis.k.ravel()[self.trunc]

    @property
    def B_matrix(self) -> np.ndarray:
        return self.B_scaled / np.cosh(self.mu * self.k_trunc)[None, :]

    def solve_coefficients(self, qh: np.ndarray) -> np.ndarray:
        return solve_coefficients(self, qh)

    def apply(self, qh: np.ndarray) -> np.ndarray:
        return dtn_variable(self, qh)


def truncated_indices(basis: FourierBasis, shells: int) -> np.ndarray:
    nn = basis.n1**2 + basis.n2**2
    mask = basis.nonzero & ~basis.nyquist & (nn <= shells * shells)
    return np.flatnonzero(mask)


def assemble(topo: Topography, basis: FourierBasis, mu: float, shells: int | None = None,
             domain_shells: int | None = None) -> DtnOperator:
    """Build and factorize the Galerkin matrices for ``topo``.

    ``shells`` is the truncation radius in units of 2 pi / L (default N/3).
    ``domain_shells`` optionally restricts the Dirichlet modes entering A;
    by default every non-Nyquist nonzero mode does.
    """
    N = basis.N
    if topo.grid != basis.grid:
        raise DtnAssemblyError("topography and basis live on different grids")
    if shells is None:
        shells = N // 3
    if shells < 1 or shells > N // 2 - 1:
        raise DtnAssemblyError(f"Galerkin truncation M_galerkin={shells} shells outside [1, {N // 2 - 1}]")

    trunc = truncated_indices(basis, shells)
    nn = (basis.n1**2 + basis.n2**2).ravel()
    dmask = (basis.nonzero & ~basis.nyquist).ravel()
    if domain_shells is not None:
        dmask &= nn <= domain_shells * domain_shells
    domain = np.flatnonzero(dmask)

    n1, n2 = basis.n1.ravel(), basis.n2.ravel()
    w1, w2 = n1[trunc], n2[trunc]
    scale = 2.0 * np.pi / basis.L
    H = np.asarray(topo.H, dtype=float)
    b = H - 1.0

    A = np.zeros((trunc.size, domain.size), dtype=complex)
    B = np.zeros((trunc.size, trunc.size), dtype=complex)

    for s in np.unique(nn[domain]):
        kk = scale * np.sqrt(s)
        kmu = mu * kk
        cols = np.flatnonzero(nn[domain] == s)
        k1, k2 = n1[domain[cols]], n2[domain[cols]]
        dot = scale * scale * (w1[:, None] * k1[None, :] + w2[:, None] * k2[None, :])
        diff = ((w1[:, None] - k1[None, :]) % N, (w2[:, None] - k2[None, :]) % N)

        g_hat = np.fft.fft2(_sinh_over_cosh(kmu, b)) / N**2
        A[:, cols] = 1j * dot / kk * g_hat[diff]

        bsel = np.flatnonzero(np.isin(domain[cols], trunc))
        if bsel.size:
            bcols = np.searchsorted(trunc, domain[cols][bsel])
            h_hat = np.fft.fft2(_cosh_over_cosh(kmu, H)) / N**2
            B[:, bcols] = 1j * dot[:, bsel] / kk**2 * h_hat[diff[0][:, bsel], diff[1][:, bsel]]

    row_scale = 1.0 / np.max(np.abs(B), axis=1)
    Bs = B * row_scale[:, None]
    lu, piv = scipy.linalg.lu_factor(Bs, check_finite=True)
    anorm = np.max(np.sum(np.abs(Bs), axis=0))
    rcond, info = lapack.zgecon(lu, anorm, norm="1")
    condition = np.inf if rcond == 0 else 1.0 / rcond
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise DtnAssemblyError(
            f"Galerkin matrix B_M is ill-conditioned (cond ~ {condition:.3g}) for M_galerkin={shells} shells"
        )
    return DtnOperator(basis, topo, mu, shells, trunc, domain, A, B, row_scale, (lu, piv), condition)


def solve_coefficients(op: DtnOperator, qh: np.ndarray) -> np.ndarray:
    """Topographic coefficients X on the full coefficient array (zero off the truncated set)."""
    rhs = op.A @ qh.ravel()[op.domain]
    y = scipy.linalg.lu_solve(op.lu, op.row_scale * rhs)
    X = np.zeros(qh.size, dtype=complex)
    X[op.trunc] = y * np.cosh(op.mu * op.k_trunc)
    return X.reshape(qh.shape)


def dtn_variable(op: DtnOperator, qh: np.ndarray) -> np.ndarray:
    rhs = op.A @ qh.ravel()[op.domain]
    y = scipy.linalg.lu_solve(op.lu, op.row_scale * rhs)
    out = flat_multiplier(op.basis, op.mu) * qh
    flat_out = out.reshape(-1)
    flat_out[op.trunc] += op.mu * y * _sech(op.mu * op.k_trunc)
    return out


def linear_residual(op: DtnOperator, qh: np.ndarray, X: np.ndarray) -> float:
    """Relative residual of B X = A q for a coefficient array X."""
    lhs = op.B_matrix @ X.ravel()[op.trunc]
    rhs = op.A @ qh.ravel()[op.domain]
    scale = max(np.max(np.abs(rhs)), np.max(np.abs(lhs)), 1e-300)
    return float(np.max(np.abs(lhs - rhs)) / scale)


def vertical_profiles(basis: FourierBasis, mu: float, z: float):
    """Mode-wise depth factors of the q and X terms at level z."""
    k = basis.k
    kmu = mu * k
    with np.errstate(invalid="ignore", divide="ignore"):
        cq = _cosh_over_cosh(kmu, z + 1.0)
        e2 = np.exp(-2.0 * kmu)
        # sinh(kmu z) / (k cosh^2(kmu)), written in decaying exponentials
        cx = 2.0 * (np.exp(kmu * (z - 2.0)) - np.exp(-kmu * (z + 2.0))) / (k * (1.0 + e2) ** 2)
    cq[0, 0] = 1.0
    cx[0, 0] = 0.0
    return cq, cx


def reconstruct_potential(op: DtnOperator | None, qh: np.ndarray, X: np.ndarray | None, z: float,
                          basis: FourierBasis | None = None, mu: float | None = None) -> np.ndarray:
    """Potential on the horizontal plane at depth ``z``.

    ``z`` must lie in [-max H, 0]; a margin of 1e-3 above the surface is
    accepted so that the surface derivative can be taken by centred
    differences of the (analytic) expansion.
    """
    if op is not None:
        basis, mu = op.basis, op.mu
        h_max = float(np.max(op.topography.H))
    else:
        h_max = 1.0
    if not (-h_max - 1e-12 <= z <= 1e-3):
        raise ValueError(f"depth z={z} outside [-{h_max}, 0]")
    cq, cx = vertical_profiles(basis, mu, z)
    coeffs = qh * cq
    if X is not None:
        coeffs = coeffs + X * cx
    return inverse(coeffs)


def bottom_flux(op: DtnOperator, qh: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Pointwise no-flux residual phi_z + mu^2 grad(phi).grad(H) at z = -H(x).

    Direct summation over the modes that carry data; intended for small grids.
    """
    basis, mu = op.basis, op.mu
    N = basis.N
    H = np.asarray(op.topography.H, dtype=float)
    Hh = np.fft.fft2(H) / N**2
    Hx = inverse(1j * basis.kx * np.where(basis.nyquist, 0, Hh))
    Hy = inverse(1j * basis.ky * np.where(basis.nyquist, 0, Hh))

    active = np.flatnonzero(((np.abs(qh) > 0) | (np.abs(X) > 0)).ravel() & basis.nonzero.ravel())
    kx = basis.kx.ravel()[active]
    ky = basis.ky.ravel()[active]
    k = basis.k.ravel()[active]
    q = qh.ravel()[active]
    x = X.ravel()[active]
    kmu = mu * k
    xg, yg = basis.grid.mesh()
    out = np.empty((N, N))
    for i in range(N):
        z = -H[i][:, None]
        phase = np.exp(1j * (xg[i][:, None] * kx + yg[i][:, None] * ky))
        c = _cosh_over_cosh(kmu, z + 1.0)
        dc = mu * k * _sinh_over_cosh(kmu, z + 1.0)
        e2 = np.exp(-2.0 * kmu)
        s = 2.0 * (np.exp(kmu * (z - 2.0)) - np.exp(-kmu * (z + 2.0))) / (k * (1.0 + e2) ** 2)
        ds = 2.0 * mu * (np.exp(kmu * (z - 2.0)) + np.exp(-kmu * (z + 2.0))) / (1.0 + e2) ** 2
        val = q * c + x * s
        dz = q * dc + x * ds
        px = np.sum(1j * kx * val * phase, axis=1).real
        py = np.sum(1j * ky * val * phase, axis=1).real
        pz = np.sum(dz * phase, axis=1).real
        out[i] = pz + mu**2 * (px * Hx[i] + py * Hy[i])
    return out
