"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 configuration error, 3 numerical
failure (including a verification driver that does not pass).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import io
from .config import load_config
from .dtn import DtnAssemblyError
from .dynamics import NumericalError
from .params import ConfigError, validate
from .spectral import Grid
from .topography import Topography

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def write_run(out: Path, result: ex.SimulationResult) -> None:
    """Write every artifact of a simulation into ``out``."""
    out.mkdir(parents=True, exist_ok=True)
    setup, art = result.setup, result.artifacts
    (out / "config.resolved").write_text(setup.config.resolved_text())
    io.write_trajectory(art.trajectory, out / "trajectory.csv")
    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    for i, (t, fields) in enumerate(art.snapshots):
        io.write_snapshot(snap_dir / f"snap_{i:05d}.pwf", fields, setup.grid.L, t)
    io.write_snapshot(out / "topography.pwf", {"H": np.asarray(setup.topography.H)}, setup.grid.L, 0.0)
    io.write_events(art.events, out / "events.jsonl")
    io.write_rows(out / "stats.csv", ("section", "a", "b", "value"), result.stats.rows())
    io.write_rows(out / "heatmap.csv", ("kind", "a", "b", "x", "y", "value"),
                  ex.heatmap_rows(result.stats, result.cavity_map))


def _write_partial(out: Path, setup, exc: NumericalError) -> None:
    art = exc.artifacts
    if art is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.resolved").write_text(setup.config.resolved_text())
    io.write_trajectory(art.trajectory, out / "trajectory.csv")
    io.write_events(art.events, out / "events.jsonl")
    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    for i, (t, fields) in enumerate(art.snapshots):
        io.write_snapshot(snap_dir / f"snap_{i:05d}.pwf", fields, setup.grid.L, t)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out or cfg["run.output"])
    setup = ex.prepare(cfg)
    try:
        result = ex.simulate(cfg, setup)
    except NumericalError as exc:
        _write_partial(out, setup, exc)
        raise
    write_run(out, result)
    s = result.stats
    print(f"{len(result.artifacts.trajectory)} steps, mean speed {result.mean_speed:.6g}, "
          f"{s.total_crossings} crossings, rate {s.rate_per_minute:.4g}/min -> {out}")
    return EXIT_OK


def cmd_impact(args) -> int:
    cfg = load_config(args.config)
    setup = ex.prepare(cfg)
    report = ex.impact_test(setup, periods=args.periods)
    print(report.summary)
    if args.expect_no_wave:
        return EXIT_OK if report.no_wave else EXIT_NUMERICAL
    ok = (not report.no_wave and report.asymmetry < 1e-8
          and abs(report.crest_spacing - 1.0) < 0.1)
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_dispersion(args) -> int:
    cfg = load_config(args.config)
    setup = ex.prepare(cfg)
    report = ex.dispersion_test(setup.grid, setup.groups, integrator=setup.step.integrator,
                                dtn_sign=args.sign, depth=setup.config["domain.flat_depth"])
    if report.blowup is not None:
        print(f"FAIL: {report.note}")
        return EXIT_NUMERICAL
    for m, err in report.errors.items():
        print(f"mode {m}: relative frequency error {err:.3e}")
    print(f"max error {report.max_error:.3e}: {'pass' if report.passed else 'FAIL'}")
    return EXIT_OK if report.passed else EXIT_NUMERICAL


def _parse_values(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--values must be a comma-separated list of numbers, got {text!r}") from None
    if not values:
        raise UsageError("--values is empty")
    return values


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    values = _parse_values(args.values)
    result = ex.sweep(cfg, args.axis, values, workers=args.workers)
    header, body = result.table()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        io.write_rows(out / "sweep.csv", header, body)
    print(",".join(header))
    for row in body:
        print(",".join(str(v) for v in row))
    if result.interior_maximum:
        print("crossing rate has an interior maximum")
    return EXIT_OK


def cmd_stats(args) -> int:
    traj = io.read_trajectory(args.trajectory)
    snap = io.read_snapshot(args.topo)
    if "H" not in snap.fields:
        raise ConfigError(f"{args.topo} has no H field")
    topo = Topography(Grid(snap.L, snap.N), snap.fields["H"].copy())
    cmap = ex.label_cavities(topo)
    events = ex.detect_crossings(traj, cmap)
    stats = ex.occupancy(traj, cmap, events, args.period)
    rows = stats.rows()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        io.write_rows(out / "stats.csv", ("section", "a", "b", "value"), rows)
        io.write_rows(out / "heatmap.csv", ("kind", "a", "b", "x", "y", "value"), ex.heatmap_rows(stats, cmap))
    for row in rows:
        print(",".join(str(v) for v in row))
    return EXIT_OK


def export_dtn(op, out: Path) -> None:
    """Write the Galerkin matrices as snapshot files for offline inspection.

    A (truncated x Dirichlet modes) is zero-padded to a square; the true
    shape and the flat mode indices go to ``dtn_indices.json``.
    """
    out.mkdir(parents=True, exist_ok=True)
    B = op.B_matrix
    io.write_snapshot(out / "dtn_B.pwf", {"re": B.real, "im": B.imag}, op.basis.L)
    side = max(op.A.shape)
    A = np.zeros((side, side), dtype=complex)
    A[:op.A.shape[0], :op.A.shape[1]] = op.A
    io.write_snapshot(out / "dtn_A.pwf", {"re": A.real, "im": A.imag}, op.basis.L)
    meta = {"A_shape": list(op.A.shape), "shells": op.shells, "condition": op.condition,
            "trunc": op.trunc.tolist(), "domain": op.domain.tolist(), "N": op.basis.N}
    (out / "dtn_indices.json").write_text(json.dumps(meta) + "\n")


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    setup = ex.prepare(cfg)
    raw = {
        "density": cfg["fluid.density"],
        "surface_tension": cfg["fluid.surface_tension"],
        "kinematic_viscosity": cfg.kinematic_viscosity(),
        "drop_mass": cfg["fluid.drop_mass"],
        "drop_damping": cfg["fluid.drop_damping"],
        "frequency": cfg["forcing.frequency"],
        "gamma": cfg["forcing.gamma"],
        "gravity": cfg["forcing.gravity"],
        "mean_depth": cfg["domain.mean_depth"],
    }
    report = validate(raw)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if not report.ok:
        for e in report.errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    g = setup.groups
    from .dynamics import cfl_check

    cfl = cfl_check(setup.step, setup.basis, g, float(np.max(setup.topography.H)), cfg["numerics.courant"])
    print(f"mu={g.mu:.6g} G={g.G:.6g} Bo={g.Bo:.6g} Re={g.Re:.6g} M={g.M:.6g} "
          f"T_F={setup.period_seconds:.6g}s lambda_F={g.extras['wavelength']:.6g}m")
    print(cfl)
    if not cfl.ok:
        return EXIT_CONFIG
    if args.export_dtn:
        model = ex.build_model(setup)
        if model.operator is None:
            raise UsageError("--export-dtn needs a variable topography")
        export_dtn(model.operator, Path(args.export_dtn))
        print(f"DtN matrices written to {args.export_dtn}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pilotwave", description="Walking-droplet simulator over variable topography.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("simulate", help="run a simulation and write its artifacts")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("impact-test", help="single impact symmetry and crest spacing")
    s.add_argument("--config", required=True)
    s.add_argument("--periods", type=float, default=8.0)
    s.add_argument("--expect-no-wave", action="store_true")
    s.set_defaults(func=cmd_impact)

    s = sub.add_parser("dispersion-test", help="free-mode frequencies against the dispersion relation")
    s.add_argument("--config", required=True)
    s.add_argument("--sign", type=int, choices=(1, -1), default=1)
    s.set_defaults(func=cmd_dispersion)

    s = sub.add_parser("sweep", help="one run per parameter value")
    s.add_argument("--config", required=True)
    s.add_argument("--axis", required=True, choices=sorted(ex.SWEEP_AXES))
    s.add_argument("--values", required=True)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("stats", help="crossing and dwell statistics of a trajectory")
    s.add_argument("--trajectory", required=True)
    s.add_argument("--topo", required=True)
    s.add_argument("--period", type=float, default=0.025, help="Faraday period in seconds")
    s.add_argument("--out")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("validate", help="check a configuration")
    s.add_argument("--config", required=True)
    s.add_argument("--export-dtn", metavar="DIR", help="debug: write the assembled DtN matrices to DIR")
    s.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, DtnAssemblyError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ValueError) as exc:
        # unreadable or malformed input files
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
