"""Time evolution of the coupled wave field and droplet.

The wave state lives in spectral space (``forward`` normalization). Each
sub-step of length ``dt`` (in Faraday periods) follows the contact/flight
branch structure: while the droplet is in contact the potential is advanced
by a half step, the droplet velocity is updated from the local slope, the
surface is advanced with the Dirichlet-to-Neumann map, the droplet moves,
and the potential receives its second half step. In flight the same wave
update runs with the velocity frozen and the droplet moving ballistically.

Two integrators are available. ``leapfrog`` is the kick-drift-kick form of
the staggered leapfrog; it is self-starting, so no bootstrap step is taken.
Viscous terms are treated by the trapezoidal rule inside it. ``rk4`` is the
classical fourth-order Runge-Kutta method on the full right-hand side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import dtn as dtn_mod
from .params import NondimGroups, wave_frequency
from .spectral import (
    FourierBasis,
    bilinear_at,
    cell_source,
    forward,
    grad_at,
    inverse,
    point_source,
)
from .topography import Topography

INTEGRATORS = ("leapfrog", "rk4")
SCHEMES = ("pseudo-spectral", "central-difference")


class NumericalError(RuntimeError):
    """Non-finite values or an invalid step; carries the offending state."""

    def __init__(self, message, state=None, droplet=None, artifacts=None):
        super().__init__(message)
        self.state = state
        self.droplet = droplet
        self.artifacts = artifacts


@dataclass
class WaveState:
    eta: np.ndarray  # spectral coefficients of the surface elevation
    phi: np.ndarray  # spectral coefficients of the surface potential
    t: float = 0.0

    @classmethod
    def zeros(cls, N: int, t: float = 0.0) -> "WaveState":
        return cls(np.zeros((N, N), complex), np.zeros((N, N), complex), t)

    @classmethod
    def from_fields(cls, eta, phi, t: float = 0.0) -> "WaveState":
        return cls(forward(eta).astype(complex), forward(phi).astype(complex), t)

    def copy(self) -> "WaveState":
        return WaveState(self.eta.copy(), self.phi.copy(), self.t)


@dataclass
class DropletState:
    x: np.ndarray
    v: np.ndarray
    tau: float = 0.0  # contact-phase clock, fraction of a Faraday period
    contact_fraction: float = 0.25

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(2).copy()
        self.v = np.asarray(self.v, dtype=float).reshape(2).copy()
        if not 0.0 <= self.tau < 1.0:
            raise ValueError(f"contact phase must lie in [0, 1), got {self.tau!r}")

    @property
    def in_contact(self) -> bool:
        return self.tau < self.contact_fraction

    def wrapped(self, L: float) -> "DropletState":
        return replace(self, x=np.mod(self.x, L))

    def copy(self) -> "DropletState":
        return replace(self, x=self.x.copy(), v=self.v.copy())


@dataclass(frozen=True)
class StepConfig:
    dt: float
    integrator: str = "leapfrog"
    scheme: str = "pseudo-spectral"
    contact_fraction: float = 0.25

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"time step must be positive, got {self.dt!r}")
        per_period = 1.0 / self.dt
        if abs(per_period - round(per_period)) > 1e-9 * per_period:
            raise ValueError(f"time step {self.dt!r} does not divide the Faraday period evenly")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"unknown integrator {self.integrator!r}; expected one of {INTEGRATORS}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not 0.0 < self.contact_fraction < 1.0:
            raise ValueError(f"contact fraction must lie in (0, 1), got {self.contact_fraction!r}")

    @property
    def steps_per_period(self) -> int:
        return int(round(1.0 / self.dt))


class WaveModel:
    """Static ingredients of the evolution: basis, groups, depth and DtN map.

    ``dtn_sign`` multiplies the DtN term of the surface equation. +1 gives
    oscillating gravity-capillary waves; -1 is kept only as a diagnostic.
    """

    def __init__(self, basis: FourierBasis, groups: NondimGroups, topography: Topography | None = None,
                 scheme: str = "pseudo-spectral", dtn_operator: dtn_mod.DtnOperator | None = None,
                 shells: int | None = None, domain_shells: int | None = None, dtn_sign: int = 1):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
        if dtn_sign not in (1, -1):
            raise ValueError("dtn_sign must be +1 or -1")
        self.basis = basis
        self.groups = groups
        self.scheme = scheme
        self.dtn_sign = dtn_sign
        self.topography = topography
        if topography is not None and topography.grid != basis.grid:
            raise ValueError("topography and basis live on different grids")

        self.operator = dtn_operator
        self.depth = 1.0
        if topography is not None and topography.is_flat:
            self.depth = float(topography.H.flat[0])
        elif topography is not None and dtn_operator is None:
            self.operator = dtn_mod.assemble(topography, basis, groups.mu, shells, domain_shells)

        if self.operator is None:
            self._flat_symbol = dtn_mod.flat_multiplier(basis, groups.mu, self.depth) / groups.mu
        if scheme == "pseudo-spectral":
            self.neg_laplacian = basis.k2.copy()
        else:
            self.neg_laplacian = -basis.cd2_symbol
        self.stiffness = groups.Bo * self.neg_laplacian
        self.viscous = groups.damping * self.neg_laplacian

    @property
    def is_flat(self) -> bool:
        return self.operator is None

    @property
    def max_depth(self) -> float:
        if self.topography is None:
            return self.depth
        return float(np.max(self.topography.H))

    def surface_flux(self, phi: np.ndarray) -> np.ndarray:
        """(1/mu) phi_z at the surface, with the configured sign."""
        if self.operator is None:
            out = self._flat_symbol * phi
        else:
            out = self.operator.apply(phi) / self.groups.mu
        return out if self.dtn_sign == 1 else -out

    def source(self, x) -> np.ndarray:
        if self.scheme == "pseudo-spectral":
            return point_source(self.basis, x)
        return cell_source(self.basis, x)

    def slope(self, eta: np.ndarray, x) -> np.ndarray:
        """Surface gradient at the droplet position."""
        if self.scheme == "pseudo-spectral":
            return grad_at(eta, self.basis, x)
        field = inverse(eta)
        dx = self.basis.grid.dx
        gx = (np.roll(field, -1, 0) - np.roll(field, 1, 0)) / (2 * dx)
        gy = (np.roll(field, -1, 1) - np.roll(field, 1, 1)) / (2 * dx)
        return np.array([bilinear_at(gx, self.basis.grid, x), bilinear_at(gy, self.basis.grid, x)])


def forcing_F(tau: float, groups: NondimGroups, contact_fraction: float = 0.25) -> float:
    """Scalar contact-pressure prefactor; the delta is applied separately."""
    if not 0.0 <= tau < 1.0:
        raise ValueError(f"contact phase must lie in [0, 1), got {tau!r}")
    if tau >= contact_fraction:
        return 0.0
    return groups.impulse * math.sin(4.0 * math.pi * tau)


def _potential_forcing(model: WaveModel, eta, t, droplet: DropletState | None, x=None, tau=None):
    """Non-dissipative part of d(phi)/dt: restoring terms and contact pressure."""
    g = model.groups
    out = -(g.G * (1.0 + g.gamma * math.cos(4.0 * math.pi * t)) + model.stiffness) * eta
    if droplet is not None:
        tau = droplet.tau if tau is None else tau % 1.0
        F = forcing_F(tau, g, droplet.contact_fraction)
        if F != 0.0:
            out = out - g.G * g.M * F * model.source(droplet.x if x is None else x)
    return out


def rhs_wave(state: WaveState, droplet: DropletState | None, model: WaveModel):
    """Time derivatives (d phi/dt, d eta/dt) of the spectral wave state."""
    dphi = _potential_forcing(model, state.eta, state.t, droplet) - model.viscous * state.phi
    deta = model.surface_flux(state.phi) - model.viscous * state.eta
    return dphi, deta


def rhs_droplet(droplet: DropletState, eta: np.ndarray, model: WaveModel) -> np.ndarray:
    if not droplet.in_contact:
        return np.zeros(2)
    g = model.groups
    return -g.kick * model.slope(eta, droplet.x) - g.drag * math.sin(4.0 * math.pi * droplet.tau) * droplet.v


def _velocity_update(droplet: DropletState, eta, model: WaveModel, h: float) -> np.ndarray:
    # drag is stiff for large c: treat it implicitly at the mid-step phase
    g = model.groups
    s = math.sin(4.0 * math.pi * (droplet.tau + 0.5 * h))
    return (droplet.v - h * g.kick * model.slope(eta, droplet.x)) / (1.0 + h * g.drag * s)


def _leapfrog_wave(model: WaveModel, eta, phi, t, h, drop, x0, tau0, x1, tau1, phi_half=None):
    a = 0.5 * h * model.viscous
    if phi_half is None:
        phi_half = phi * (1.0 - a) + 0.5 * h * _potential_forcing(model, eta, t, drop, x0, tau0)
    eta1 = (eta * (1.0 - a) + h * model.surface_flux(phi_half)) / (1.0 + a)
    phi1 = (phi_half + 0.5 * h * _potential_forcing(model, eta1, t + h, drop, x1, tau1)) / (1.0 + a)
    return eta1, phi1


def _rk4_wave(model: WaveModel, eta, phi, t, h, drop, x, tau):
    def f(e, p, s):
        dp = -model.viscous * p
        if drop is not None:
            dp = dp + _potential_forcing(model, e, t + s, drop, x, tau + s)
        else:
            dp = dp + _potential_forcing(model, e, t + s, None)
        return model.surface_flux(p) - model.viscous * e, dp

    e1, p1 = f(eta, phi, 0.0)
    e2, p2 = f(eta + 0.5 * h * e1, phi + 0.5 * h * p1, 0.5 * h)
    e3, p3 = f(eta + 0.5 * h * e2, phi + 0.5 * h * p2, 0.5 * h)
    e4, p4 = f(eta + h * e3, phi + h * p3, h)
    eta1 = eta + (h / 6.0) * (e1 + 2 * e2 + 2 * e3 + e4)
    phi1 = phi + (h / 6.0) * (p1 + 2 * p2 + 2 * p3 + p4)
    return eta1, phi1


def _advance_tau(tau: float, h: float) -> float:
    return (tau + h) % 1.0


def step(state: WaveState, droplet: DropletState | None, model: WaveModel, cfg: StepConfig):
    """Advance by one sub-step ``cfg.dt``; returns new (state, droplet)."""
    h = cfg.dt
    t = state.t
    L = model.basis.L
    eta, phi = state.eta, state.phi

    if droplet is None:
        if cfg.integrator == "leapfrog":
            eta1, phi1 = _leapfrog_wave(model, eta, phi, t, h, None, None, None, None, None)
        else:
            eta1, phi1 = _rk4_wave(model, eta, phi, t, h, None, None, None)
        new_drop = None
    elif droplet.in_contact:
        tau1 = _advance_tau(droplet.tau, h)
        if cfg.integrator == "leapfrog":
            a = 0.5 * h * model.viscous
            phi_half = phi * (1.0 - a) + 0.5 * h * _potential_forcing(model, eta, t, droplet)
            v1 = _velocity_update(droplet, eta, model, h)
            x1 = np.mod(droplet.x + h * v1, L)
            eta1, phi1 = _leapfrog_wave(model, eta, phi, t, h, droplet, None, None, x1, tau1, phi_half)
        else:
            eta_m, phi_m = _rk4_wave(model, eta, phi, t, 0.5 * h, droplet, droplet.x, droplet.tau)
            v1 = _velocity_update(droplet, eta_m, model, h)
            x1 = np.mod(droplet.x + h * v1, L)
            eta1, phi1 = _rk4_wave(model, eta_m, phi_m, t + 0.5 * h, 0.5 * h, droplet, x1, droplet.tau + 0.5 * h)
        new_drop = replace(droplet, x=x1, v=v1, tau=tau1)
    else:
        tau1 = _advance_tau(droplet.tau, h)
        x1 = np.mod(droplet.x + h * droplet.v, L)
        if cfg.integrator == "leapfrog":
            eta1, phi1 = _leapfrog_wave(model, eta, phi, t, h, droplet, droplet.x, droplet.tau, x1, tau1)
        else:
            eta1, phi1 = _rk4_wave(model, eta, phi, t, h, droplet, droplet.x, droplet.tau)
        # velocity is left untouched in flight
        new_drop = replace(droplet, x=x1, v=droplet.v, tau=tau1)

    new_state = WaveState(eta1, phi1, t + h)
    if not (np.all(np.isfinite(eta1)) and np.all(np.isfinite(phi1))):
        raise NumericalError(f"non-finite wave field at t={t + h:.6g}", new_state, new_drop)
    if new_drop is not None and not (np.all(np.isfinite(new_drop.x)) and np.all(np.isfinite(new_drop.v))):
        raise NumericalError(f"non-finite droplet state at t={t + h:.6g}", new_state, new_drop)
    return new_state, new_drop


@dataclass(frozen=True)
class CflReport:
    ok: bool
    dt: float
    limit: float
    c_max: float
    k_limiting: float
    courant: float

    def __str__(self):
        verdict = "ok" if self.ok else "violation"
        return (f"CFL {verdict}: dt={self.dt:.6g}, limit={self.limit:.6g} "
                f"(c_max={self.c_max:.6g} at |k|={self.k_limiting:.6g}, C={self.courant})")


def cfl_check(cfg: StepConfig, basis: FourierBasis, groups: NondimGroups, depth: float = 1.0,
              courant: float = 0.5) -> CflReport:
    """Compare dt with C * dx / c_max, c_max the largest resolved phase speed."""
    mask = basis.resolved & basis.nonzero
    k = basis.k[mask]
    c = wave_frequency(k, groups, depth) / k
    i = int(np.argmax(c))
    c_max = float(c[i])
    limit = courant * basis.grid.dx / c_max
    return CflReport(cfg.dt <= limit, cfg.dt, limit, c_max, float(k[i]), courant)


TRAJECTORY_COLUMNS = ("t", "x", "y", "vx", "vy", "in_contact", "cavity")


@dataclass
class RunConfig:
    model: WaveModel
    step: StepConfig
    wave: WaveState
    droplet: DropletState | None = None
    t_max: float = 0.0  # Faraday periods
    snapshot_stride: int = 0  # Faraday periods between snapshots, 0 for initial only
    cavity_of: Callable | None = None
    courant: float = 0.5


@dataclass
class RunArtifacts:
    trajectory: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)  # (t, {"eta": array, "phi": array})
    events: list = field(default_factory=list)
    final_state: WaveState | None = None
    final_droplet: DropletState | None = None


def _snapshot(state: WaveState):
    return state.t, {"eta": inverse(state.eta), "phi": inverse(state.phi)}


def _row(t, drop: DropletState | None, cavity_of):
    if drop is None:
        return (t, math.nan, math.nan, math.nan, math.nan, 0, 0)
    cav = int(cavity_of(drop.x)) if cavity_of is not None else 0
    return (t, float(drop.x[0]), float(drop.x[1]), float(drop.v[0]), float(drop.v[1]), int(drop.in_contact), cav)


def run(rc: RunConfig) -> RunArtifacts:
    """Execute ``t_max`` Faraday periods; deterministic for a given config."""
    cfg, model = rc.step, rc.model
    if cfg.scheme != model.scheme:
        raise ValueError(f"step scheme {cfg.scheme!r} does not match model scheme {model.scheme!r}")
    report = cfl_check(cfg, model.basis, model.groups, model.max_depth, rc.courant)
    if not report.ok:
        raise NumericalError(str(report))

    art = RunArtifacts()
    state = rc.wave.copy()
    drop = None if rc.droplet is None else rc.droplet.wrapped(model.basis.L)
    art.events.append({"t": state.t, "kind": "start", "detail": str(report)})
    art.snapshots.append(_snapshot(state))

    n_steps = int(round(rc.t_max / cfg.dt))
    stride = rc.snapshot_stride * cfg.steps_per_period
    t0 = state.t
    for n in range(1, n_steps + 1):
        try:
            state, drop = step(state, drop, model, cfg)
        except NumericalError as exc:
            art.events.append({"t": t0 + n * cfg.dt, "kind": "abort", "detail": str(exc)})
            if exc.state is not None:
                art.snapshots.append(_snapshot(exc.state))
            art.final_state, art.final_droplet = exc.state, exc.droplet
            exc.artifacts = art
            raise
        # recompute t from the step count so that long runs do not drift
        state.t = t0 + n * cfg.dt
        art.trajectory.append(_row(state.t, drop, rc.cavity_of))
        if stride and n % stride == 0:
            art.snapshots.append(_snapshot(state))

    art.events.append({"t": state.t, "kind": "end", "detail": f"{n_steps} steps"})
    art.final_state, art.final_droplet = state, drop
    return art
