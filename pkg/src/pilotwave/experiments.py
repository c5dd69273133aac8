"""Tunneling measurements and verification drivers.

Cavities are the connected components of the deep region of a topography.
A trajectory is reduced to its sequence of cavity labels; barrier samples
(label 0) are skipped and visits shorter than the debounce window are
treated as jitter. Crossing events are the label changes that remain.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from . import dynamics as dyn
from .config import SimConfig
from .params import (
    ConfigError,
    FluidParams,
    ForcingParams,
    NondimGroups,
    faraday_scales,
    nondim_groups,
    wave_frequency,
)
from .spectral import FourierBasis, Grid, eval_at, inverse
from .topography import CavitySpec, Topography, cavities, flat


class CavityError(ConfigError):
    pass


# ---------------------------------------------------------------- cavities


@dataclass
class CavityMap:
    labels: np.ndarray  # 0 for barrier/exterior, cavity ids from 1
    count: int
    adjacency: list  # sorted (a, b) pairs with a < b
    grid: Grid
    threshold: float

    def label_at(self, x) -> int:
        dx = self.grid.dx
        i = int(math.floor(x[0] / dx + 0.5)) % self.grid.N
        j = int(math.floor(x[1] / dx + 0.5)) % self.grid.N
        return int(self.labels[i, j])

    def centroids(self) -> dict:
        """Circular-mean centre of each cavity, in domain units."""
        out = {}
        L, N = self.grid.L, self.grid.N
        ang = 2 * np.pi * np.arange(N) / N
        for c in range(1, self.count + 1):
            ii, jj = np.nonzero(self.labels == c)
            cx = np.angle(np.mean(np.exp(1j * ang[ii]))) % (2 * np.pi)
            cy = np.angle(np.mean(np.exp(1j * ang[jj]))) % (2 * np.pi)
            out[c] = (cx * L / (2 * np.pi), cy * L / (2 * np.pi))
        return out

    def is_adjacent(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in set(self.adjacency)


def _periodic_components(mask: np.ndarray) -> np.ndarray:
    raw, n = ndimage.label(mask)  # 4-connectivity
    parent = list(range(n + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in list(zip(raw[0, :], raw[-1, :])) + list(zip(raw[:, 0], raw[:, -1])):
        if a and b:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(a) for a in range(n + 1)])
    merged = roots[raw]
    # renumber by first cell in row-major order
    out = np.zeros_like(raw)
    order = {}
    for r in merged.ravel():
        if r and r not in order:
            order[r] = len(order) + 1
    for r, new in order.items():
        out[merged == r] = new
    return out


def _adjacency(labels: np.ndarray, max_gap: int | None):
    pairs = set()
    for lines in (labels, labels.T):
        for line in lines:
            last, gap = 0, 0
            for v in line:
                if v == 0:
                    gap += 1
                    continue
                if last and v != last and gap > 0 and (max_gap is None or gap <= max_gap):
                    pairs.add((min(last, v), max(last, v)))
                last, gap = int(v), 0
    return sorted(pairs)


def label_cavities(topo: Topography, depth_threshold: float | None = None,
                   max_gap: int | None = None) -> CavityMap:
    """Cavities are 4-connected (periodic) components of H > depth_threshold.

    Two cavities are adjacent when a grid row or column passes from one to
    the other through barrier cells only, without wrapping around the
    domain. ``max_gap`` optionally bounds the barrier run length in cells.
    """
    H = np.asarray(topo.H)
    lo, hi = float(H.min()), float(H.max())
    if depth_threshold is None:
        depth_threshold = 0.5 * (lo + hi) if hi > lo else 0.5 * hi
    labels = _periodic_components(H > depth_threshold)
    count = int(labels.max())
    if count == 0:
        raise CavityError(f"no cavities deeper than {depth_threshold:g} (depth range {lo:g} to {hi:g})")
    return CavityMap(labels, count, _adjacency(labels, max_gap), topo.grid, depth_threshold)


# ---------------------------------------------------------------- crossings


@dataclass(frozen=True)
class CrossingEvent:
    time: float
    from_cavity: int
    to_cavity: int
    position: tuple
    diagonal: bool = False

    def as_dict(self) -> dict:
        return {
            "kind": "crossing",
            "t": self.time,
            "from": self.from_cavity,
            "to": self.to_cavity,
            "x": self.position[0],
            "y": self.position[1],
            "diagonal": self.diagonal,
        }


def trajectory_labels(trajectory, cmap: CavityMap) -> list[int]:
    return [cmap.label_at((row[1], row[2])) for row in trajectory]


def _visits(trajectory, labels):
    """Runs of equal nonzero labels: [label, first index, last index]."""
    runs = []
    for i, lab in enumerate(labels):
        if lab == 0:
            continue
        if runs and runs[-1][0] == lab:
            runs[-1][2] = i
        else:
            runs.append([lab, i, i])
    return runs


def detect_crossings(trajectory, cmap: CavityMap, debounce: float = 1.0) -> list[CrossingEvent]:
    """Crossing events between cavities.

    Barrier samples are ignored, so a pass A -> barrier -> B counts once. A
    visit is kept only if its first and last samples are at least
    ``debounce`` Faraday periods apart; shorter visits are jitter.
    """
    labels = trajectory_labels(trajectory, cmap)
    kept = [r for r in _visits(trajectory, labels)
            if trajectory[r[2]][0] - trajectory[r[1]][0] >= debounce]
    adjacent = set(cmap.adjacency)
    events = []
    current = None
    for lab, first, _ in kept:
        if current is not None and lab != current:
            row = trajectory[first]
            pair = (min(current, lab), max(current, lab))
            events.append(CrossingEvent(float(row[0]), current, lab, (float(row[1]), float(row[2])),
                                        diagonal=pair not in adjacent))
        current = lab
    return events


@dataclass
class OccupancyStats:
    dwell: dict  # cavity -> Faraday periods
    fraction: dict  # cavity -> fraction of the run
    edge_counts: dict  # (a, b) with a < b -> crossings
    total_crossings: int
    duration: float  # Faraday periods
    barrier_time: float
    rate_per_minute: float

    def rows(self):
        """Long-format rows (section, a, b, value) for the stats CSV."""
        out = [("duration", "", "", self.duration), ("barrier_time", "", "", self.barrier_time),
               ("crossings", "", "", self.total_crossings), ("rate_per_minute", "", "", self.rate_per_minute)]
        for c in sorted(self.dwell):
            out.append(("dwell", c, "", self.dwell[c]))
            out.append(("fraction", c, "", self.fraction[c]))
        for (a, b) in sorted(self.edge_counts):
            out.append(("edge", a, b, self.edge_counts[(a, b)]))
        return out


def occupancy(trajectory, cmap: CavityMap, events, period_seconds: float) -> OccupancyStats:
    """Dwell times per cavity; each sample interval goes to the label at its start."""
    labels = trajectory_labels(trajectory, cmap)
    dwell = {c: 0.0 for c in range(1, cmap.count + 1)}
    barrier = 0.0
    for i in range(len(trajectory) - 1):
        dt = trajectory[i + 1][0] - trajectory[i][0]
        if labels[i]:
            dwell[labels[i]] += dt
        else:
            barrier += dt
    duration = trajectory[-1][0] - trajectory[0][0] if len(trajectory) > 1 else 0.0
    fraction = {c: (d / duration if duration > 0 else 0.0) for c, d in dwell.items()}
    edges = Counter((min(e.from_cavity, e.to_cavity), max(e.from_cavity, e.to_cavity)) for e in events)
    minutes = duration * period_seconds / 60.0
    rate = len(events) / minutes if minutes > 0 else 0.0
    return OccupancyStats(dwell, fraction, dict(edges), len(events), duration, barrier, rate)


def heatmap_rows(stats: OccupancyStats, cmap: CavityMap):
    """Per-cavity dwell fractions at cavity centres and per-edge counts at edge midpoints."""
    cents = cmap.centroids()
    rows = [("cavity", c, "", cents[c][0], cents[c][1], stats.fraction[c]) for c in sorted(cents)]
    for a, b in cmap.adjacency:
        mx = 0.5 * (cents[a][0] + cents[b][0])
        my = 0.5 * (cents[a][1] + cents[b][1])
        rows.append(("edge", a, b, mx, my, stats.edge_counts.get((a, b), 0)))
    for (a, b), n in sorted(stats.edge_counts.items()):
        if (a, b) not in set(cmap.adjacency):
            rows.append(("diagonal", a, b, math.nan, math.nan, n))
    return rows


def mean_speed(trajectory, window: float = 10.0) -> float:
    """Mean droplet speed over the last ``window`` Faraday periods."""
    if not trajectory:
        return 0.0
    t_end = trajectory[-1][0]
    speeds = [math.hypot(r[3], r[4]) for r in trajectory if r[0] > t_end - window]
    return float(np.mean(speeds))


# ---------------------------------------------------------------- simulation


@dataclass
class Setup:
    """Everything derived from a configuration before time stepping."""

    config: SimConfig
    fluid: FluidParams
    forcing: ForcingParams
    groups: NondimGroups
    period_seconds: float
    grid: Grid
    basis: FourierBasis
    topography: Topography
    step: dyn.StepConfig


def _topography(cfg: SimConfig, grid: Grid) -> Topography:
    kind = cfg["domain.topography"]
    if kind == "flat":
        return flat(grid, cfg["domain.flat_depth"])
    if kind == "cavities":
        spec = CavitySpec(cfg["domain.rows"], cfg["domain.cols"], cfg["domain.well_width"],
                          cfg["domain.barrier_width"], cfg["domain.deep_depth"],
                          cfg["domain.shallow_depth"], cfg["numerics.smoothing"])
        return cavities(grid, spec)
    from .io import read_snapshot

    path = cfg["domain.topography_file"]
    if not path:
        raise ConfigError("domain.topography = file needs domain.topography_file")
    snap = read_snapshot(path)
    if "H" not in snap.fields:
        raise ConfigError(f"{path} has no H field")
    if snap.N != grid.N or snap.L != grid.L:
        raise ConfigError(f"{path} is {snap.N} points on L={snap.L}, config asks for {grid.N} on L={grid.L}")
    return Topography(grid, snap.fields["H"].copy())


def prepare(cfg: SimConfig) -> Setup:
    """Physical parameters, groups, grid and topography for a configuration."""
    try:
        fluid = FluidParams(cfg["fluid.density"], cfg["fluid.surface_tension"], cfg.kinematic_viscosity(),
                            cfg["fluid.drop_mass"], cfg["fluid.drop_damping"])
        forcing = ForcingParams(cfg["forcing.frequency"], cfg["forcing.gamma"], cfg["forcing.gravity"])
        depth = cfg["domain.mean_depth"]
        scales = faraday_scales(fluid, forcing, depth)
        groups = nondim_groups(fluid, forcing, scales, depth)
        grid = Grid(cfg["domain.length"], cfg["domain.N"])
        step = dyn.StepConfig(cfg["numerics.dt"], cfg["numerics.integrator"], cfg["numerics.scheme"],
                              cfg["numerics.contact_fraction"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    basis = FourierBasis(grid, dealias=cfg["numerics.dealias"])
    try:
        topo = _topography(cfg, grid)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return Setup(cfg, fluid, forcing, groups, scales.period, grid, basis, topo, step)


def build_model(setup: Setup) -> dyn.WaveModel:
    cfg = setup.config
    shells = cfg["numerics.galerkin_shells"] or None
    domain_shells = cfg["numerics.domain_shells"] or None
    return dyn.WaveModel(setup.basis, setup.groups, setup.topography, cfg["numerics.scheme"],
                         shells=shells, domain_shells=domain_shells, dtn_sign=cfg["numerics.dtn_sign"])


def initial_droplet(setup: Setup, cmap: CavityMap | None = None) -> dyn.DropletState | None:
    cfg = setup.config
    if not cfg["droplet.enabled"]:
        return None
    x0 = cfg["droplet.x0"]
    if x0 is None:
        if cmap is not None and setup.topography.spec is not None:
            x0 = cmap.centroids()[1]
        else:
            x0 = (0.5 * setup.grid.L, 0.5 * setup.grid.L)
    tau0 = (-cfg["droplet.impact_phase"]) % 1.0
    return dyn.DropletState(x0, cfg["droplet.v0"], tau=tau0, contact_fraction=cfg["numerics.contact_fraction"])


def initial_wave(setup: Setup) -> dyn.WaveState:
    cfg = setup.config
    N = setup.grid.N
    state = dyn.WaveState.zeros(N)
    amp = cfg["run.noise"]
    if amp:
        rng = np.random.default_rng(cfg["run.seed"])
        state = dyn.WaveState.from_fields(amp * rng.standard_normal((N, N)), np.zeros((N, N)))
        state.eta[0, 0] = 0.0
        state.eta[setup.basis.nyquist] = 0.0
    return state


@dataclass
class SimulationResult:
    setup: Setup
    artifacts: dyn.RunArtifacts
    cavity_map: CavityMap
    crossings: list
    stats: OccupancyStats

    @property
    def mean_speed(self) -> float:
        return mean_speed(self.artifacts.trajectory)


def simulate(cfg: SimConfig, setup: Setup | None = None, model: dyn.WaveModel | None = None) -> SimulationResult:
    setup = setup or prepare(cfg)
    model = model or build_model(setup)
    cmap = label_cavities(setup.topography)
    rc = dyn.RunConfig(model, setup.step, initial_wave(setup), initial_droplet(setup, cmap),
                       t_max=cfg["run.t_max"], snapshot_stride=cfg["run.snapshot_stride"],
                       cavity_of=cmap.label_at, courant=cfg["numerics.courant"])
    art = dyn.run(rc)
    traj = art.trajectory if rc.droplet is not None else []
    events = detect_crossings(traj, cmap)
    stats = occupancy(traj, cmap, events, setup.period_seconds)
    art.events.extend(e.as_dict() for e in events)
    art.events.sort(key=lambda e: (e["t"], e["kind"] != "start", e["kind"] == "end"))
    return SimulationResult(setup, art, cmap, events, stats)


# ---------------------------------------------------------------- sweeps

SWEEP_AXES = {
    "gamma": "forcing.gamma",
    "well_width": "domain.well_width",
    "barrier_width": "domain.barrier_width",
    "depth_ratio": "domain.shallow_depth",
}


@dataclass
class SweepRow:
    value: float
    mean_speed: float = math.nan
    crossing_rate: float = math.nan
    crossings: int = 0
    dwell: dict = field(default_factory=dict)
    error: str | None = None


@dataclass
class SweepResult:
    axis: str
    rows: list

    @property
    def interior_maximum(self) -> bool:
        """True when the crossing rate peaks strictly inside the swept range."""
        rates = [r.crossing_rate for r in self.rows if r.error is None]
        if len(rates) < 3 or not any(rates):
            return False
        i = int(np.argmax(rates))
        return 0 < i < len(rates) - 1

    def table(self):
        header = ("value", "mean_speed", "crossing_rate", "crossings", "dwell", "error")
        body = []
        for r in self.rows:
            dwell = ";".join(f"{c}:{f!r}" for c, f in sorted(r.dwell.items()))
            body.append((r.value, r.mean_speed, r.crossing_rate, r.crossings, dwell, r.error or ""))
        return header, body


def apply_axis(cfg: SimConfig, axis: str, value: float) -> SimConfig:
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {', '.join(SWEEP_AXES)}")
    key = SWEEP_AXES[axis]
    if axis == "depth_ratio":
        value = value * cfg["domain.deep_depth"]
    return cfg.with_overrides(**{key.replace(".", "__"): float(value)})


def _sweep_one(args) -> SweepRow:
    cfg, axis, value = args
    try:
        res = simulate(apply_axis(cfg, axis, value))
    except Exception as exc:  # one failed run must not stop the sweep
        return SweepRow(value, error=f"{type(exc).__name__}: {exc}")
    return SweepRow(value, res.mean_speed, res.stats.rate_per_minute, res.stats.total_crossings,
                    dict(res.stats.fraction))


def sweep(base: SimConfig, axis: str, values, workers: int = 1) -> SweepResult:
    """One simulation per value; rows are ordered by value."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {', '.join(SWEEP_AXES)}")
    values = sorted(float(v) for v in values)
    jobs = [(base, axis, v) for v in values]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    return SweepResult(axis, rows)


# ---------------------------------------------------------------- drivers


def rotate_quarter(field: np.ndarray, center: int) -> np.ndarray:
    """Field rotated by 90 degrees about grid node (center, center)."""
    f = np.roll(field, (-center, -center), axis=(0, 1))
    N = f.shape[0]
    idx = (-np.arange(N)) % N
    g = f.T[idx, :]  # g[i, j] = f[j, -i]
    return np.roll(g, (center, center), axis=(0, 1))


@dataclass
class ImpactReport:
    asymmetry: float
    crest_radii: list
    crest_spacing: float | None
    no_wave: bool
    periods: float
    amplitude: float

    @property
    def summary(self) -> str:
        if self.no_wave:
            return "no wave"
        spacing = "n/a" if self.crest_spacing is None else f"{self.crest_spacing:.4f}"
        return f"asymmetry {self.asymmetry:.3e}, crest spacing {spacing} Faraday wavelengths"


def radial_profile(eta_hat: np.ndarray, basis: FourierBasis, center, r_max: float, dr: float):
    r = np.arange(0.0, r_max, dr)
    vals = np.array([eval_at(eta_hat, basis, (center[0] + ri, center[1])) for ri in r])
    return r, vals


def crest_radii(r: np.ndarray, profile: np.ndarray, r_min: float, floor: float) -> list:
    """Local maxima of a sampled profile beyond r_min, refined by a parabola."""
    out = []
    dr = r[1] - r[0]
    for i in range(1, len(r) - 1):
        if r[i] < r_min or profile[i] <= floor:
            continue
        if profile[i] > profile[i - 1] and profile[i] >= profile[i + 1]:
            a, b, c = profile[i - 1], profile[i], profile[i + 1]
            denom = a - 2 * b + c
            shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
            out.append(float(r[i] + shift * dr))
    return out


def impact_test(setup: Setup, periods: float = 8.0, model: dyn.WaveModel | None = None) -> ImpactReport:
    """Single impact at the grid centre on a flat bottom.

    The droplet touches down once (its first contact window) and is then
    removed; the wave field is left to evolve for ``periods`` Faraday periods.
    """
    if not setup.topography.is_flat:
        raise ConfigError("impact test needs a flat bottom")
    model = model or build_model(setup)
    N, L = setup.grid.N, setup.grid.L
    center = N // 2
    xc = center * setup.grid.dx
    cf = setup.step.contact_fraction
    drop = dyn.DropletState((xc, xc), (0.0, 0.0), tau=0.0, contact_fraction=cf)
    state = dyn.WaveState.zeros(N)
    n_contact = int(round(1.0 / setup.step.dt))
    n_total = int(round(periods / setup.step.dt))
    for n in range(n_total):
        state, drop = dyn.step(state, drop if n < n_contact else None, model, setup.step)

    eta = inverse(state.eta)
    amp = float(np.max(np.abs(eta)))
    if amp == 0.0 or not np.isfinite(amp):
        return ImpactReport(0.0, [], None, True, periods, amp)
    asym = float(np.max(np.abs(rotate_quarter(eta, center) - eta)) / amp)
    r, prof = radial_profile(state.eta, setup.basis, (xc, xc), 0.5 * L, 1.0 / 200.0)
    crests = crest_radii(r, prof, 0.25, 1e-6 * amp)
    spacing = crests[1] - crests[0] if len(crests) >= 2 else None
    return ImpactReport(asym, crests, spacing, len(crests) < 2, periods, amp)


@dataclass
class DispersionReport:
    max_error: float
    errors: dict  # mode (n1, n2) -> relative frequency error
    passed: bool
    blowup: tuple | None = None
    note: str = ""


def _zero_crossing_period(t: np.ndarray, y: np.ndarray) -> float | None:
    s = np.signbit(y)
    idx = np.flatnonzero(s[1:] != s[:-1])
    if len(idx) < 3:
        return None
    tz = t[idx] - y[idx] * (t[idx + 1] - t[idx]) / (y[idx + 1] - y[idx])
    return 2.0 * (tz[-1] - tz[0]) / (len(tz) - 1)


def default_modes(N: int, count: int = 10):
    ns = np.unique(np.round(np.geomspace(1, N // 3, count)).astype(int))
    modes = [(int(n), 0) for n in ns]
    n = 1
    while len(modes) < count:
        modes.append((n, n))
        n += 2
    return modes[:count]


def dispersion_test(grid: Grid, groups: NondimGroups, modes=None, amplitude: float = 1e-3,
                    integrator: str = "leapfrog", dtn_sign: int = 1, depth: float = 1.0,
                    tolerance: float = 5e-3, min_oscillations: int = 4) -> DispersionReport:
    """Free single-mode oscillations against the analytic dispersion relation.

    Forcing, damping and the droplet are switched off. All modes are evolved
    in one run (they are decoupled on a flat bottom) and each period is
    measured from the zero crossings of its coefficient.
    """
    groups = replace(groups, gamma=0.0, Re=math.inf)
    basis = FourierBasis(grid)
    modes = list(modes) if modes is not None else default_modes(grid.N)
    ks = [2 * np.pi / grid.L * math.hypot(*m) for m in modes]
    omegas = [float(wave_frequency(k, groups, depth)) for k in ks]
    if amplitude == 0.0:
        return DispersionReport(0.0, {m: 0.0 for m in modes}, True, note="no oscillation: zero amplitude")

    # keep the fastest mode at 0.1 rad per step, slowest over min_oscillations periods
    dt = 2.0 ** math.floor(math.log2(0.1 / max(omegas)))
    T = min_oscillations * 2 * np.pi / min(omegas)
    n_steps = int(math.ceil(T / dt)) + 1
    cfg = dyn.StepConfig(dt, integrator)
    model = dyn.WaveModel(basis, groups, flat(grid, depth), dtn_sign=dtn_sign)

    state = dyn.WaveState.zeros(grid.N)
    for n1, n2 in modes:
        state.eta[n1 % grid.N, n2 % grid.N] = amplitude
        state.eta[-n1 % grid.N, -n2 % grid.N] = amplitude
    idx = [(n1 % grid.N, n2 % grid.N) for n1, n2 in modes]
    series = np.empty((n_steps + 1, len(modes)))
    series[0] = [state.eta[i].real for i in idx]
    times = dt * np.arange(n_steps + 1)
    for n in range(1, n_steps + 1):
        state, _ = dyn.step(state, None, model, cfg)
        series[n] = [state.eta[i].real for i in idx]
        grown = np.abs(series[n]) > 1e3 * amplitude
        if grown.any():
            m = modes[int(np.argmax(grown))]
            return DispersionReport(math.inf, {}, False, blowup=m,
                                    note=f"exponential growth of mode {m} by t={times[n]:.3g}: check the DtN sign")

    errors = {}
    for j, m in enumerate(modes):
        period = _zero_crossing_period(times, series[:, j])
        errors[m] = math.inf if period is None else abs(period * omegas[j] / (2 * np.pi) - 1.0)
    worst = max(errors.values())
    return DispersionReport(worst, errors, worst < tolerance)
