"""Nondimensional depth fields H(x, y) on the periodic square.

Depths are in units of the reference depth h (H = 1 at the reference), and
horizontal lengths are in units of the Faraday wavelength.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import Grid, forward


class TopographyError(ValueError):
    pass


@dataclass(frozen=True)
class CavitySpec:
    rows: int
    cols: int
    well_width: float
    barrier_width: float
    deep_depth: float
    shallow_depth: float
    smoothing: float = 0.25

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise TopographyError("cavity layout needs at least one row and one column")
        if not self.shallow_depth > 0:
            raise TopographyError("shallow depth must be positive")
        if not self.deep_depth > self.shallow_depth:
            raise TopographyError("deep depth must exceed shallow depth")
        if not self.well_width > 0:
            raise TopographyError("well width must be positive")
        if self.barrier_width <= 0 and (self.rows > 1 or self.cols > 1):
            raise TopographyError("wells overlap: barrier width must be positive")
        if self.smoothing < 0:
            raise TopographyError("smoothing width must be non-negative")

    def extent(self, axis: int) -> float:
        count = self.rows if axis == 0 else self.cols
        return count * self.well_width + (count - 1) * self.barrier_width

    def intervals(self, axis: int, L: float):
        """Well intervals along one axis, centred in [0, L)."""
        count = self.rows if axis == 0 else self.cols
        start = 0.5 * (L - self.extent(axis))
        pitch = self.well_width + self.barrier_width
        return [(start + i * pitch, start + i * pitch + self.well_width) for i in range(count)]


@dataclass(frozen=True)
class Topography:
    grid: Grid
    H: np.ndarray
    spec: CavitySpec | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.H.shape != (self.grid.N, self.grid.N):
            raise TopographyError(f"depth field shape {self.H.shape} does not match grid {self.grid.N}")
        if not np.all(self.H > 0):
            raise TopographyError("depth must be strictly positive everywhere (dry points found)")
        self.H.setflags(write=False)

    @property
    def is_flat(self) -> bool:
        return bool(np.all(self.H == self.H.flat[0]))

    def max_slope(self) -> float:
        dx = self.grid.dx
        gx = (np.roll(self.H, -1, 0) - np.roll(self.H, 1, 0)) / (2 * dx)
        gy = (np.roll(self.H, -1, 1) - np.roll(self.H, 1, 1)) / (2 * dx)
        return float(np.max(np.hypot(gx, gy)))


def flat(grid: Grid, h0: float = 1.0) -> Topography:
    if not h0 > 0:
        raise TopographyError(f"flat depth must be positive, got {h0!r}")
    return Topography(grid, np.full((grid.N, grid.N), float(h0)))


def _ramp(x: np.ndarray, a: float, b: float, s: float, L: float) -> np.ndarray:
    """Smoothed periodic indicator of [a, b]; exact step when s == 0."""
    out = np.zeros_like(x)
    for shift in (-L, 0.0, L):
        xs = x - shift
        if s == 0:
            up = np.where(xs > a, 1.0, np.where(xs == a, 0.5, 0.0))
            down = np.where(xs > b, 1.0, np.where(xs == b, 0.5, 0.0))
            out += up - down
        else:
            # tiny s overflows to +-inf, which tanh maps to the exact step
            with np.errstate(over="ignore"):
                out += 0.5 * (np.tanh((xs - a) / s) - np.tanh((xs - b) / s))
    return out


def cavities(grid: Grid, spec: CavitySpec) -> Topography:
    L = grid.L
    margin = 0.5 * min(L - spec.extent(0), L - spec.extent(1))
    if margin <= 0:
        raise TopographyError(
            f"wells do not fit: layout spans {max(spec.extent(0), spec.extent(1)):.4g} on a domain of {L:.4g}"
        )
    x = grid.x
    rx = [_ramp(x, a, b, spec.smoothing, L) for a, b in spec.intervals(0, L)]
    ry = [_ramp(x, a, b, spec.smoothing, L) for a, b in spec.intervals(1, L)]
    wells = np.zeros((grid.N, grid.N))
    for fx in rx:
        for fy in ry:
            wells += np.outer(fx, fy)
    H = spec.shallow_depth + (spec.deep_depth - spec.shallow_depth) * wells
    return Topography(grid, H, spec=spec, meta={"margin": margin})


def spectral_quality(topo: Topography) -> float:
    """Fraction of depth-variance energy in the top third of wavenumbers."""
    Hh = forward(topo.H)
    Hh[0, 0] = 0.0
    energy = np.abs(Hh) ** 2
    total = energy.sum()
    if total == 0:
        return 0.0
    N = topo.grid.N
    n = np.fft.fftfreq(N, 1.0 / N)
    nn = np.hypot(n[:, None], n[None, :])
    return float(energy[nn > N / 3].sum() / total)


SPECTRAL_WARNING = 1e-3
