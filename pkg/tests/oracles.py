"""Reference implementations used only by the tests.

Each oracle computes its answer by a route that shares no code with the
package: a terrain-following Laplace solver, direct quadrature of the
Galerkin inner products, breadth-first labeling, and a streaming state
machine for debounced crossings.
"""

from collections import deque

import numpy as np
from scipy.optimize import brentq


def faraday_wavenumber(freq, g, sigma, rho, depth):
    """Root of (pi f)^2 = (g k + sigma k^3 / rho) tanh(k h) by Brent's method."""
    w2 = (np.pi * freq) ** 2
    f = lambda k: (g * k + sigma * k**3 / rho) * np.tanh(k * depth) - w2  # noqa: E731
    return brentq(f, 1e-9, 1e7, xtol=1e-14, rtol=1e-15, maxiter=500)


# ------------------------------------------------------------- Laplace solver


def _cheb(n):
    x = np.cos(np.pi * np.arange(n + 1) / n)
    c = np.hstack([2, np.ones(n - 1), 2]) * (-1) ** np.arange(n + 1)
    X = np.tile(x, (n + 1, 1)).T
    dX = X - X.T
    D = np.outer(c, 1 / c) / (dX + np.eye(n + 1))
    return D - np.diag(D.sum(1)), x


def _fourier_diff(N, L):
    k = 2 * np.pi * np.fft.fftfreq(N, L / N)
    k[N // 2] = 0
    return np.real(np.fft.ifft(1j * k[:, None] * np.fft.fft(np.eye(N), axis=0), axis=0))


def terrain_dtn(q, H, dH, L, mu, nz=32):
    """Surface phi_z for mu^2 phi_xx + phi_zz = 0 on -H(x) < z < 0.

    phi = q at z = 0 and phi_z + mu^2 phi_x H_x = 0 at z = -H(x). The
    depth is mapped to sigma = z / H in [-1, 0]; Fourier in x, Chebyshev
    collocation in sigma, dense solve.
    """
    N = q.size
    D, s = _cheb(nz)
    Ds = 2 * D
    sig = (s - 1) / 2
    Dx = _fourier_diff(N, L)
    Ix, Iz = np.eye(N), np.eye(nz + 1)
    S = np.kron(np.ones(N), sig)
    Hv = np.repeat(H, nz + 1)
    dHv = np.repeat(dH, nz + 1)
    DX = np.kron(Dx, Iz)
    DS = np.kron(Ix, Ds)
    Px = DX - (S * dHv / Hv)[:, None] * DS
    Pz = (1 / Hv)[:, None] * DS
    op = mu**2 * Px @ Px + Pz @ Pz
    rhs = np.zeros(N * (nz + 1))
    top = np.arange(N) * (nz + 1)
    bot = top + nz
    op[top] = 0
    op[top, top] = 1
    rhs[top] = q
    op[bot] = (Pz + mu**2 * dHv[:, None] * Px)[bot]
    phi = np.linalg.solve(op, rhs)
    return (Pz @ phi)[top]


# ------------------------------------------------------- Galerkin quadrature


def galerkin_quadrature(H, L, mu, test_modes, trial_modes):
    """Trapezoidal inner products <div[e^{ik.x} f_k(x) k/|k|^p], e^{iw.x}> / L^2.

    Returns (A, B) with f = sinh(mu k (H - 1)) / cosh(mu k), p = 1 for A and
    f = cosh(mu k H) / cosh^2(mu k), p = 2 for B. Modes are integer pairs.
    Integration by parts turns the divergence into i (w.k) times the kernel.
    """
    N = H.shape[0]
    x = np.arange(N) * L / N
    X, Y = np.meshgrid(x, x, indexing="ij")
    dA = (L / N) ** 2
    scale = 2 * np.pi / L
    A = np.zeros((len(test_modes), len(trial_modes)), complex)
    B = np.zeros((len(test_modes), len(trial_modes)), complex)
    for i, (w1, w2) in enumerate(test_modes):
        wv = scale * np.array([w1, w2])
        for j, (k1, k2) in enumerate(trial_modes):
            kv = scale * np.array([k1, k2])
            k = np.hypot(*kv)
            phase = np.exp(1j * ((kv[0] - wv[0]) * X + (kv[1] - wv[1]) * Y))
            dot = wv @ kv
            g = np.sinh(mu * k * (H - 1.0)) / np.cosh(mu * k)
            h = np.cosh(mu * k * H) / np.cosh(mu * k) ** 2
            A[i, j] = 1j * dot / k * np.sum(g * phase) * dA / L**2
            B[i, j] = 1j * dot / k**2 * np.sum(h * phase) * dA / L**2
    return A, B


# ------------------------------------------------------------------ labeling


def bfs_labels(mask):
    """4-connected periodic components, numbered in row-major discovery order."""
    N0, N1 = mask.shape
    labels = np.zeros(mask.shape, int)
    current = 0
    for i in range(N0):
        for j in range(N1):
            if mask[i, j] and not labels[i, j]:
                current += 1
                labels[i, j] = current
                queue = deque([(i, j)])
                while queue:
                    a, b = queue.popleft()
                    for da, db in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                        u, v = (a + da) % N0, (b + db) % N1
                        if mask[u, v] and not labels[u, v]:
                            labels[u, v] = current
                            queue.append((u, v))
    return labels, current


def grid_layout_adjacency(rows, cols):
    """Edge count of a rows x cols lattice of wells (4-neighbour)."""
    return rows * (cols - 1) + cols * (rows - 1)


# ---------------------------------------------------------------- crossings


def streaming_crossings(times, labels, debounce):
    """One pass: a new label is confirmed once seen continuously for >= debounce."""
    confirmed = None
    candidate, cand_start, cand_t0 = None, None, None
    events = []
    for t, lab in zip(times, labels):
        if lab == 0:
            continue
        if lab != candidate:
            candidate, cand_start = lab, t
            cand_t0 = t
        if candidate != confirmed and t - cand_start >= debounce:
            if confirmed is not None:
                events.append((cand_t0, confirmed, candidate))
            confirmed = candidate
    return events
