"""Command-line entry point: ``tiledvr {layout,allocate,simulate,report}``.

Exit codes: 0 success, 2 usage or configuration error, 3 validation error,
4 runtime error. Output files default to ``$TILEDVR_OUT`` (or ``./tiledvr-out``).
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

from .allocation import DEFAULT_GAMMA, DEFAULT_STRIDE, allocate_and_select
from .errors import ComputationError, ConfigurationError, DomainError, ValidationError
from .fixtures import bundled_path
from .geometry import ErpFrame, ViewportPose
from .manifest import DEFAULT_LADDER_BPS, canonical_loads, emit_manifest, parse_manifest, tiled_manifest
from .quality import DEFAULT_A, DEFAULT_B, DEFAULT_Q_MAX, DEFAULT_Q_MIN, RateQualityModel
from .report import load_logs, report
from .simulator import Proposed, Reference, load_trace, load_trajectory, run_simulation

OUT_ENV = "TILEDVR_OUT"
EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3, 4


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, "tiledvr-out"))


def resolve_input(value: str) -> Path:
    """Plain path, or ``bundled:<name>`` for a packaged fixture."""
    if value.startswith("bundled:"):
        return bundled_path(value.split(":", 1)[1])
    return Path(value)


# -- run configuration --------------------------------------------------------

@dataclass
class RunConfig:
    manifest: str | None = None
    trace: str | None = None
    trajectories: list[str] = field(default_factory=list)
    policy: str = "both"
    gamma: float = DEFAULT_GAMMA
    stride: int = DEFAULT_STRIDE
    quality_stride: int = DEFAULT_STRIDE
    segment_duration: float | None = None
    hfov: float = 96.0
    vfov: float = 96.0
    a: float = DEFAULT_A
    b: float = DEFAULT_B
    q_min: float = DEFAULT_Q_MIN
    q_max: float = DEFAULT_Q_MAX
    out: str | None = None
    seed: int | None = None  # reserved; the simulation uses no randomness

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        doc = canonical_loads(Path(path).read_text())
        if not isinstance(doc, dict):
            raise ValidationError(["config root must be an object"], where=str(path))
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ValidationError([f"unknown config field {k!r}" for k in unknown], where=str(path))
        return cls(**doc)

    def validate(self) -> None:
        problems = []
        for name in ("manifest", "trace"):
            value = getattr(self, name)
            if not value:
                problems.append(f"{name}: required")
            elif not resolve_input(value).exists():
                problems.append(f"{name}: no such file {value}")
        if not self.trajectories:
            problems.append("trajectories: at least one required")
        for value in self.trajectories:
            if not resolve_input(value).exists():
                problems.append(f"trajectories: no such file {value}")
        if self.policy not in ("proposed", "reference", "both"):
            problems.append(f"policy: must be proposed, reference or both, got {self.policy!r}")
        if not 0.0 <= self.gamma <= 1.0:
            problems.append(f"gamma: must lie in [0, 1], got {self.gamma}")
        for name in ("stride", "quality_stride"):
            if int(getattr(self, name)) < 1:
                problems.append(f"{name}: must be >= 1")
        if self.segment_duration is not None and not self.segment_duration > 0:
            problems.append("segment_duration: must be positive")
        for name in ("hfov", "vfov"):
            if not 0 < getattr(self, name) < 180:
                problems.append(f"{name}: must lie in (0, 180) degrees")
        if problems:
            raise ValidationError(problems, where="run config")


# -- commands -----------------------------------------------------------------

def _parse_ladder(text: str) -> list[int]:
    if text == "default":
        return list(DEFAULT_LADDER_BPS)
    try:
        return [int(round(float(v) * 1_000_000)) for v in text.split(",")]
    except ValueError:
        raise ConfigurationError(f"ladder must be 'default' or comma-separated Mbps values, got {text!r}") from None


def cmd_layout(args) -> int:
    frame = ErpFrame.parse(args.frame)
    manifest = tiled_manifest(
        frame, args.tiles, _parse_ladder(args.ladder), args.segment_duration, args.media_duration, args.url_template
    )
    out = Path(args.out) if args.out else default_out_dir() / f"manifest_n{args.tiles}.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(emit_manifest(manifest))
    print(f"wrote {out} ({len(manifest.layout)} tiles, {len(manifest.ladder)} representations)")
    return EXIT_OK


def _parse_pose(text: str, hfov: float, vfov: float) -> ViewportPose:
    try:
        yaw, pitch, roll = (float(v) for v in text.split(","))
    except ValueError:
        raise ValidationError([f"pose must be yaw,pitch,roll in degrees, got {text!r}"]) from None
    return ViewportPose.from_degrees(yaw, pitch, roll, hfov, vfov)


ALLOCATION_COLUMNS = ["tile_id", "set", "weight", "distance", "target_bps", "rep_id", "bitrate_bps"]


def allocation_rows(result) -> list[list]:
    cls = result.classification
    rows = []
    for k, tid in enumerate(result.tile_ids):
        inside = bool(cls.inside[k])
        rows.append([
            tid,
            "IN" if inside else "OUT",
            f"{cls.weights[k]:.6f}" if inside else "",
            "" if inside else f"{cls.distances[k]:.6f}",
            f"{result.targets[k]:.1f}",
            result.rep_ids[k],
            result.bitrates[k],
        ])
    return rows


def cmd_allocate(args) -> int:
    manifest = parse_manifest(Path(args.manifest).read_text())
    pose = _parse_pose(args.pose, args.hfov, args.vfov)
    result = allocate_and_select(manifest.layout, pose, manifest.ladder, args.rcur, args.gamma, args.stride)
    rows = allocation_rows(result)

    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows([ALLOCATION_COLUMNS] + rows)
    if args.csv:
        Path(args.csv).parent.mkdir(parents=True, exist_ok=True)
        Path(args.csv).write_text(buf.getvalue())
    if args.format == "csv":
        sys.stdout.write(buf.getvalue())
    else:
        widths = [max(len(str(r[i])) for r in [ALLOCATION_COLUMNS] + rows) for i in range(len(ALLOCATION_COLUMNS))]
        for row in [ALLOCATION_COLUMNS] + rows:
            print("  ".join(str(c).rjust(w) for c, w in zip(row, widths)))
        print(f"r_cur={args.rcur:.0f} bps  gamma={args.gamma}  selected total={result.total_selected} bps")
    return EXIT_OK


def _config_from_args(args) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {
        "manifest": args.manifest, "trace": args.trace, "policy": args.policy, "gamma": args.gamma,
        "stride": args.stride, "quality_stride": args.quality_stride, "segment_duration": args.segment_duration,
        "hfov": args.hfov, "vfov": args.vfov, "a": args.a, "b": args.b, "q_min": args.q_min,
        "q_max": args.q_max, "out": args.out, "seed": args.seed,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(config, key, value)
    if args.trajectory:
        config.trajectories = list(args.trajectory)
    config.validate()
    return config


def cmd_simulate(args) -> int:
    config = _config_from_args(args)
    manifest = parse_manifest(resolve_input(config.manifest).read_text())
    if config.segment_duration is not None:
        manifest = manifest.with_segment_duration(config.segment_duration)
    trace = load_trace(resolve_input(config.trace))
    model = RateQualityModel.for_layout(manifest.layout, a=config.a, b=config.b, q_min=config.q_min, q_max=config.q_max)
    policies = {
        "proposed": [Proposed(config.gamma, config.stride)],
        "reference": [Reference()],
        "both": [Proposed(config.gamma, config.stride), Reference()],
    }[config.policy]
    out = Path(config.out) if config.out else default_out_dir()
    for traj_path in config.trajectories:
        trajectory = load_trajectory(resolve_input(traj_path))
        for policy in policies:
            log = run_simulation(
                manifest, policy, trace, trajectory, model,
                hfov=math.radians(config.hfov), vfov=math.radians(config.vfov),
                quality_stride=config.quality_stride,
            )
            paths = log.write(out)
            print(f"{log.run_id}: mean quality {log.mean_quality():.3f} dB -> {paths['ticks'].parent}")
    return EXIT_OK


def cmd_report(args) -> int:
    proposed, reference = load_logs(args.logs)
    out = Path(args.out) if args.out else default_out_dir() / "report"
    paths = report(proposed, reference, out)
    print(paths["summary"].read_text(), end="")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tiledvr", description="Viewport-aware tiled 360 video streaming experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("layout", help="build a tiled layout and write its manifest")
    p.add_argument("--frame", default="8192x4096", help="ERP frame size WIDTHxHEIGHT (default 8192x4096)")
    p.add_argument("--tiles", type=int, required=True, help="total tile count N (2 poles + N-2 equator tiles)")
    p.add_argument("--ladder", default="default",
                   help="'default' or comma-separated whole-frame target bitrates in Mbps; each tile gets target/N")
    p.add_argument("--segment-duration", type=float, default=2.0, help="segment length in seconds (default 2)")
    p.add_argument("--media-duration", type=float, default=60.0, help="media length in seconds (default 60)")
    p.add_argument("--url-template", default="tile{tile}/rep{rep}/seg{seg}.m4s",
                   help="segment URL with {tile}, {rep} and {seg} placeholders")
    p.add_argument("--out", help=f"manifest path (default ${OUT_ENV}/manifest_nN.json)")
    p.set_defaults(func=cmd_layout)

    p = sub.add_parser("allocate", help="allocate bitrates for one pose and print the per-tile table")
    p.add_argument("--manifest", required=True, help="manifest file written by 'layout'")
    p.add_argument("--pose", required=True, help="viewing direction yaw,pitch,roll in degrees")
    p.add_argument("--rcur", type=float, required=True, help="available bandwidth in bits/s")
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA, help="share of bandwidth for viewport tiles (default 0.8)")
    p.add_argument("--stride", type=int, default=DEFAULT_STRIDE, help="pixel sampling stride for viewport coverage (default 8)")
    p.add_argument("--hfov", type=float, default=96.0, help="horizontal field of view in degrees (default 96)")
    p.add_argument("--vfov", type=float, default=96.0, help="vertical field of view in degrees (default 96)")
    p.add_argument("--format", choices=("table", "csv"), default="table", help="stdout format (default table)")
    p.add_argument("--csv", help="also write the allocation as CSV to this path")
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("simulate", help="run proposed and/or reference streaming over a trace")
    p.add_argument("--config", help="run config file (canonical JSON); flags override its values")
    p.add_argument("--manifest", help="manifest file or bundled:<name>")
    p.add_argument("--trace", help="bandwidth trace CSV (time_ms,bps) or bundled:<name>")
    p.add_argument("--trajectory", action="append",
                   help="head trajectory CSV (time_ms,yaw_deg,pitch_deg,roll_deg) or bundled:<name>; repeatable")
    p.add_argument("--policy", choices=("proposed", "reference", "both"), help="which policy to run (default both)")
    p.add_argument("--gamma", type=float, help="share of bandwidth for viewport tiles (default 0.8)")
    p.add_argument("--stride", type=int, help="sampling stride used for allocation (default 8)")
    p.add_argument("--quality-stride", type=int, help="sampling stride used for viewport quality (default 8)")
    p.add_argument("--segment-duration", type=float, help="override the manifest segment length in seconds")
    p.add_argument("--hfov", type=float, help="horizontal field of view in degrees (default 96)")
    p.add_argument("--vfov", type=float, help="vertical field of view in degrees (default 96)")
    p.add_argument("--a", type=float, help=f"quality model offset in dB (default {DEFAULT_A:g})")
    p.add_argument("--b", type=float, help=f"quality model slope in dB per ln(bps/pixel) (default {DEFAULT_B:g})")
    p.add_argument("--q-min", type=float, help=f"quality floor in dB (default {DEFAULT_Q_MIN:g})")
    p.add_argument("--q-max", type=float, help=f"quality ceiling in dB (default {DEFAULT_Q_MAX:g})")
    p.add_argument("--seed", type=int, help="reserved; the simulation is deterministic and ignores it")
    p.add_argument("--out", help=f"output directory for logs (default ${OUT_ENV})")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="compare simulation logs and write report CSVs")
    p.add_argument("--logs", required=True, help="directory holding simulate output")
    p.add_argument("--out", help=f"report directory (default ${OUT_ENV}/report)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, DomainError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ComputationError, OSError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
