"""Fluid and forcing parameters, Faraday scales and nondimensional groups."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    """Raised for physically invalid or inconsistent parameters."""


@dataclass(frozen=True)
class FluidParams:
    density: float  # kg/m^3
    surface_tension: float  # N/m
    kinematic_viscosity: float  # m^2/s
    drop_mass: float  # kg
    drop_damping: float  # c in the droplet trajectory equation

    def __post_init__(self):
        for name in ("density", "surface_tension", "kinematic_viscosity", "drop_mass", "drop_damping"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name.replace('_', ' ')} must be positive, got {value!r}")

    @classmethod
    def from_dynamic_viscosity(cls, density, surface_tension, dynamic_viscosity, drop_mass, drop_damping):
        if not density > 0:
            raise ConfigError(f"density must be positive, got {density!r}")
        return cls(density, surface_tension, dynamic_viscosity / density, drop_mass, drop_damping)


@dataclass(frozen=True)
class ForcingParams:
    frequency: float  # shaker frequency, Hz
    amplitude_ratio: float = 0.0  # Gamma = gamma / g
    gravity: float = 9.81

    def __post_init__(self):
        if not (math.isfinite(self.frequency) and self.frequency > 0):
            raise ConfigError(f"forcing frequency must be positive, got {self.frequency!r}")
        if not (math.isfinite(self.amplitude_ratio) and self.amplitude_ratio >= 0):
            raise ConfigError(f"forcing amplitude ratio must be non-negative, got {self.amplitude_ratio!r}")
        if not (math.isfinite(self.gravity) and self.gravity > 0):
            raise ConfigError(f"gravity must be positive, got {self.gravity!r}")


@dataclass(frozen=True)
class FaradayScales:
    period: float  # T_F, s
    wavelength: float  # lambda_F, m

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength


@dataclass(frozen=True)
class NondimGroups:
    """Nondimensional coefficients of the wave and droplet equations.

    Lengths are in units of the Faraday wavelength and times in units of the
    Faraday period. ``kick``, ``drag`` and ``impulse`` are the prefactors of
    the droplet equation and of the contact pressure; they are derived from
    the dimensional parameters by :func:`nondim_groups` but can be set
    directly for numerical experiments.
    """

    mu: float
    G: float
    Bo: float
    Re: float
    M: float
    gamma: float = 0.0
    c: float = 0.0
    kick: float = 0.0
    drag: float = 0.0
    impulse: float = 4.0 * math.pi**2
    extras: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def damping(self) -> float:
        """Coefficient of the horizontal Laplacian in the viscous terms."""
        return 0.0 if math.isinf(self.Re) else 2.0 / self.Re


def dispersion_residual(k, omega, fluid: FluidParams, forcing: ForcingParams, depth):
    """Relative residual of the finite-depth gravity-capillary relation.

    The response is subharmonic, so the wave angular frequency is
    ``2 pi (omega / 2) = pi omega`` for a shaker frequency ``omega`` in Hz.
    """
    rhs = (forcing.gravity * k + fluid.surface_tension * k**3 / fluid.density) * math.tanh(k * depth)
    lhs = (math.pi * omega) ** 2
    return (rhs - lhs) / lhs


def faraday_scales(fluid: FluidParams, forcing: ForcingParams, mean_depth: float, rtol: float = 1e-12) -> FaradayScales:
    if not (math.isfinite(mean_depth) and mean_depth > 0):
        raise ConfigError(f"mean depth must be positive, got {mean_depth!r}")
    omega = forcing.frequency
    f = lambda k: dispersion_residual(k, omega, fluid, forcing, mean_depth)  # noqa: E731

    # residual is monotone increasing in k, -1 at k = 0
    lo, hi = 0.0, 1.0
    while f(hi) < 0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:
            raise ConfigError(f"no Faraday wavenumber found for forcing frequency {omega!r}")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    k = 0.5 * (lo + hi)
    return FaradayScales(period=2.0 / omega, wavelength=2.0 * math.pi / k)


def nondim_groups(fluid: FluidParams, forcing: ForcingParams, scales: FaradayScales, mean_depth: float) -> NondimGroups:
    T, lam = scales.period, scales.wavelength
    g, omega = forcing.gravity, forcing.frequency
    return NondimGroups(
        mu=mean_depth / lam,
        G=g * T**2 / lam,
        Bo=fluid.surface_tension * T**2 / (fluid.density * lam**3),
        Re=lam**2 / (fluid.kinematic_viscosity * T),
        M=fluid.drop_mass / (fluid.density * lam**3),
        gamma=forcing.amplitude_ratio,
        c=fluid.drop_damping,
        kick=8.0 * T * g * math.pi**2 / (lam * omega),
        drag=8.0 * fluid.drop_damping * g * math.pi**2 / omega,
        impulse=8.0 * math.pi**2 / (omega * T),
        extras={"period": T, "wavelength": lam},
    )


def wave_frequency(k, groups: NondimGroups, depth=1.0):
    """Angular frequency (per Faraday period) of an undamped free mode."""
    k = np.asarray(k, dtype=float)
    return np.sqrt((groups.G * k + groups.Bo * k**3) * np.tanh(groups.mu * k * depth))


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def validate(config) -> ValidationReport:
    """Check a mapping of raw parameters; never raises.

    Recognized keys: density, surface_tension, kinematic_viscosity or
    dynamic_viscosity, drop_mass, drop_damping, frequency, gamma, gravity,
    mean_depth and threshold_hint.
    """
    report = ValidationReport()
    positive = ["density", "surface_tension", "drop_mass", "drop_damping", "frequency", "gravity", "mean_depth"]
    for key in positive:
        if key not in config or config[key] is None:
            continue
        value = config[key]
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            report.errors.append(f"{key.replace('_', ' ')} must be positive")
    for key in ("kinematic_viscosity", "dynamic_viscosity"):
        value = config.get(key)
        if value is not None and not (math.isfinite(value) and value > 0):
            report.errors.append(f"{key.replace('_', ' ')} must be positive")
    gamma = config.get("gamma", 0.0)
    if gamma is not None:
        if not (math.isfinite(gamma) and gamma >= 0):
            report.errors.append("gamma must be non-negative")
        else:
            hint = config.get("threshold_hint")
            if hint is not None and gamma > hint:
                report.warnings.append(f"supercritical forcing: gamma {gamma} exceeds threshold hint {hint}")
    return report
