"""Flat ``key.path = value`` configuration files.

One assignment per line, ``#`` starts a comment. Every key has a type and
either a default or is mandatory; unknown keys are rejected. A ``preset``
line expands to a block of fluid and forcing values which explicit keys
override regardless of their position in the file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .params import ConfigError

PRESETS = {
    "silicone_80hz": {
        "fluid.density": 965.0,
        "fluid.surface_tension": 0.0209,
        "fluid.dynamic_viscosity": 2e-2,
        "forcing.frequency": 80.0,
        "forcing.gravity": 9.81,
    },
}

_REQUIRED = object()


@dataclass(frozen=True)
class Key:
    kind: str  # float, int, bool, str, vec2, choice
    default: object = _REQUIRED
    choices: tuple = ()
    doc: str = ""


SCHEMA: dict[str, Key] = {
    "fluid.density": Key("float", doc="kg/m^3"),
    "fluid.surface_tension": Key("float", doc="N/m"),
    "fluid.kinematic_viscosity": Key("float", None, doc="m^2/s; or give fluid.dynamic_viscosity"),
    "fluid.dynamic_viscosity": Key("float", None, doc="Pa s"),
    "fluid.drop_mass": Key("float", doc="kg"),
    "fluid.drop_damping": Key("float", doc="contact drag constant c"),
    "forcing.frequency": Key("float", doc="shaker frequency, Hz"),
    "forcing.gamma": Key("float", 0.0, doc="forcing acceleration over gravity"),
    "forcing.gravity": Key("float", 9.81, doc="m/s^2"),
    "domain.length": Key("float", 8.0, doc="side of the periodic square, Faraday wavelengths"),
    "domain.N": Key("int", 64, doc="grid points per side, power of two"),
    "domain.mean_depth": Key("float", 6e-3, doc="reference depth h, m"),
    "domain.topography": Key("choice", "flat", ("flat", "cavities", "file")),
    "domain.flat_depth": Key("float", 1.0, doc="depth of the flat bottom, units of h"),
    "domain.rows": Key("int", 1),
    "domain.cols": Key("int", 2),
    "domain.well_width": Key("float", 1.87, doc="Faraday wavelengths"),
    "domain.barrier_width": Key("float", 0.4, doc="Faraday wavelengths"),
    "domain.deep_depth": Key("float", 1.0, doc="units of h"),
    "domain.shallow_depth": Key("float", 0.5 / 6.0, doc="units of h"),
    "domain.topography_file": Key("str", "", doc="PWF1 snapshot with an H field"),
    "numerics.scheme": Key("choice", "pseudo-spectral", ("pseudo-spectral", "central-difference")),
    "numerics.integrator": Key("choice", "leapfrog", ("leapfrog", "rk4")),
    "numerics.dt": Key("float", 1.0 / 64.0, doc="sub-step, Faraday periods"),
    "numerics.galerkin_shells": Key("int", 0, doc="0 selects N/3"),
    "numerics.domain_shells": Key("int", 0, doc="0 keeps every mode in the A operator"),
    "numerics.contact_fraction": Key("float", 0.25),
    "numerics.smoothing": Key("float", 0.25, doc="ramp width, Faraday wavelengths"),
    "numerics.dealias": Key("bool", False),
    "numerics.courant": Key("float", 0.5),
    "numerics.dtn_sign": Key("int", 1, doc="diagnostic only"),
    "run.t_max": Key("float", 10.0, doc="Faraday periods"),
    "run.snapshot_stride": Key("int", 1, doc="Faraday periods, 0 for initial only"),
    "run.seed": Key("int", 0),
    "run.noise": Key("float", 0.0, doc="amplitude of seeded initial surface noise"),
    "run.output": Key("str", "run"),
    "droplet.enabled": Key("bool", True),
    "droplet.x0": Key("vec2", None, doc="Faraday wavelengths; default the cavity or domain centre"),
    "droplet.v0": Key("vec2", (0.0, 0.0)),
    "droplet.impact_phase": Key("float", 0.0, doc="start of contact within the period"),
}


def _parse_value(key: str, spec: Key, text: str, where: str):
    try:
        if spec.kind == "float":
            value = float(text)
        elif spec.kind == "int":
            value = int(text)
        elif spec.kind == "bool":
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            value = low in ("true", "1", "yes")
        elif spec.kind == "vec2":
            parts = [p for p in text.replace(" ", "").split(",") if p]
            if len(parts) != 2:
                raise ValueError(text)
            value = (float(parts[0]), float(parts[1]))
        else:
            value = text
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {text!r} as {spec.kind} for {key}") from None
    if spec.kind == "choice" and value not in spec.choices:
        raise ConfigError(f"{where}: {key} must be one of {', '.join(spec.choices)}, got {text!r}")
    if spec.kind == "float" and not math.isfinite(value):
        raise ConfigError(f"{where}: {key} must be finite, got {text!r}")
    return value


def _format_value(spec: Key, value) -> str:
    if value is None:
        return ""
    if spec.kind == "float":
        return repr(float(value))
    if spec.kind == "bool":
        return "true" if value else "false"
    if spec.kind == "vec2":
        return f"{float(value[0])!r}, {float(value[1])!r}"
    return str(value)


@dataclass
class SimConfig:
    """Resolved configuration: a value for every schema key."""

    values: dict
    source: str = "<memory>"
    explicit: set = field(default_factory=set)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def block(self, name: str) -> dict:
        prefix = name + "."
        return {k[len(prefix):]: v for k, v in self.values.items() if k.startswith(prefix)}

    def with_overrides(self, **dotted) -> "SimConfig":
        """Copy with keys replaced; use ``__`` for the dot, e.g. ``forcing__gamma``."""
        values = dict(self.values)
        for name, value in dotted.items():
            key = name.replace("__", ".")
            if key not in SCHEMA:
                raise ConfigError(f"unknown key {key}")
            values[key] = value
        return SimConfig(values, self.source, self.explicit | {k.replace("__", ".") for k in dotted})

    def kinematic_viscosity(self) -> float:
        nu = self.values.get("fluid.kinematic_viscosity")
        if nu is not None:
            return nu
        return self.values["fluid.dynamic_viscosity"] / self.values["fluid.density"]

    def resolved_text(self) -> str:
        lines = [f"# resolved configuration (source: {self.source})"]
        for key, spec in SCHEMA.items():
            if key == "fluid.dynamic_viscosity":
                continue
            if key == "fluid.kinematic_viscosity":
                lines.append(f"{key} = {_format_value(spec, self.kinematic_viscosity())}")
                continue
            value = self.values[key]
            if value is None:
                lines.append(f"# {key} = (auto)")
            elif value == "":
                lines.append(f"# {key} = (unset)")
            else:
                lines.append(f"{key} = {_format_value(spec, value)}")
        return "\n".join(lines) + "\n"


def parse_config(text: str, source: str = "<string>") -> SimConfig:
    seen: dict[str, int] = {}
    assigned: dict[str, object] = {}
    preset = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        if key in seen:
            raise ConfigError(f"{where}: duplicate key {key} (first set on line {seen[key]}, again on line {lineno})")
        seen[key] = lineno
        if key == "preset":
            if value not in PRESETS:
                raise ConfigError(f"{where}: unknown preset {value!r}; known: {', '.join(PRESETS)}")
            preset = value
            continue
        if key not in SCHEMA:
            raise ConfigError(f"{where}: unknown key {key}")
        assigned[key] = _parse_value(key, SCHEMA[key], value, where)

    values = {}
    if preset is not None:
        values.update(PRESETS[preset])
    values.update(assigned)
    if "fluid.kinematic_viscosity" in assigned and "fluid.dynamic_viscosity" in values:
        if "fluid.dynamic_viscosity" in assigned:
            raise ConfigError(f"{source}: give only one of fluid.kinematic_viscosity and fluid.dynamic_viscosity")
        del values["fluid.dynamic_viscosity"]
    for key, spec in SCHEMA.items():
        if key in values:
            continue
        if spec.default is _REQUIRED:
            raise ConfigError(f"{source}: missing mandatory key {key}")
        values[key] = spec.default
    if values["fluid.kinematic_viscosity"] is None and values["fluid.dynamic_viscosity"] is None:
        raise ConfigError(f"{source}: missing mandatory key fluid.kinematic_viscosity (or fluid.dynamic_viscosity)")
    return SimConfig(values, source, set(assigned))


def load_config(path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path))
