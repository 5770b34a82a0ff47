"""Synthetic bandwidth traces and head trajectories.

The CSV files under ``tiledvr/data`` are generated by :func:`write_bundled`
and can be referred to on the command line as ``bundled:<name>``.
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .geometry import ErpFrame
from .manifest import emit_manifest, tiled_manifest
from .simulator import BandwidthTrace, HeadTrajectory, write_trace, write_trajectory

MEDIA_MS = 60_000
SAMPLE_MS = 100


def constant_trace(bps: int, name: str | None = None) -> BandwidthTrace:
    return BandwidthTrace.constant(bps, name)


def square_wave_trace(low=4_000_000, high=22_000_000, period_ms=10_000, duration_ms=MEDIA_MS, name="square_4_22mbps"):
    """Starts high, drops to ``low`` every half period."""
    times = np.arange(0, duration_ms, period_ms // 2)
    rates = np.where(np.arange(len(times)) % 2 == 0, high, low)
    return BandwidthTrace(times, rates, name)


def ramp_trace(low=4_000_000, high=22_000_000, step_ms=2_000, duration_ms=MEDIA_MS, name="ramp_4_22mbps"):
    """Linear staircase from ``high`` down to ``low`` and back up."""
    times = np.arange(0, duration_ms, step_ms)
    phase = np.abs(np.linspace(-1.0, 1.0, len(times)))
    rates = np.round(low + (high - low) * phase).astype(np.int64)
    return BandwidthTrace(times, rates, name)


def _trajectory(yaw_deg, pitch_deg, name, sample_ms=SAMPLE_MS):
    yaw = np.asarray(yaw_deg, dtype=float)
    times = np.arange(len(yaw)) * sample_ms
    wrapped = (yaw + 180.0) % 360.0 - 180.0
    return HeadTrajectory(times, np.radians(wrapped), np.radians(pitch_deg), np.zeros(len(yaw)), name)


def static_trajectory(yaw_deg=0.0, pitch_deg=0.0, duration_ms=MEDIA_MS, name="static"):
    n = duration_ms // SAMPLE_MS
    return _trajectory(np.full(n, yaw_deg), np.full(n, pitch_deg), name)


def pan_trajectory(deg_per_s=3.0, pitch_deg=0.0, duration_ms=MEDIA_MS, name="slow_pan"):
    t = np.arange(duration_ms // SAMPLE_MS) * SAMPLE_MS
    return _trajectory(deg_per_s * t / 1000.0, np.full(len(t), pitch_deg), name)


def jump_trajectory(jump_ms=30_000, jump_deg=90.0, duration_ms=MEDIA_MS, name="abrupt_jump"):
    t = np.arange(duration_ms // SAMPLE_MS) * SAMPLE_MS
    return _trajectory(np.where(t < jump_ms, 0.0, jump_deg), np.zeros(len(t)), name)


def bundled_traces() -> dict[str, BandwidthTrace]:
    traces = [constant_trace(10_000_000, "constant_10mbps"), square_wave_trace(), ramp_trace()]
    return {t.name: t for t in traces}


def bundled_trajectories() -> dict[str, HeadTrajectory]:
    trajs = [static_trajectory(), pan_trajectory(), jump_trajectory()]
    return {t.name: t for t in trajs}


def data_dir() -> Path:
    return Path(str(resources.files("tiledvr") / "data"))


def bundled_path(name: str) -> Path:
    path = data_dir() / (name if "." in name else f"{name}.csv")
    if not path.exists():
        known = sorted(p.name for p in data_dir().iterdir() if p.suffix in (".csv", ".json"))
        raise ValidationError([f"no bundled fixture {name!r}; available: {', '.join(known)}"])
    return path


def write_bundled(directory=None) -> list[Path]:
    directory = Path(directory) if directory else data_dir()
    directory.mkdir(parents=True, exist_ok=True)
    manifest = tiled_manifest(ErpFrame(8192, 4096), 10, media_duration=MEDIA_MS // 1000)
    (directory / "manifest_n10.json").write_text(emit_manifest(manifest))
    written = [directory / "manifest_n10.json"]
    for name, trace in bundled_traces().items():
        write_trace(trace, directory / f"{name}.csv")
        written.append(directory / f"{name}.csv")
    for name, traj in bundled_trajectories().items():
        write_trajectory(traj, directory / f"{name}.csv")
        written.append(directory / f"{name}.csv")
    return written
