"""Deterministic, trace-driven playback of a tiled 360 stream.

Segments are fetched one at a time over a single aggregate connection whose
throughput follows a piecewise-constant bandwidth trace. The head trajectory
is indexed by media time. Viewport quality is sampled every display tick from
the segment on screen and the pose at that instant.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .allocation import DEFAULT_GAMMA, DEFAULT_STRIDE, classify_tiles, allocate, select_all, select_reference
from .errors import DomainError, ValidationError
from .geometry import DEFAULT_FOV, ViewportPose
from .manifest import Manifest, canonical_dumps, canonical_loads
from .quality import RateQualityModel, quality_from_classification, uniform_density_bitrates

TICK_MS = 100
BUFFER_TARGET_SEGMENTS = 2
ESTIMATOR_WINDOW = 3


# -- inputs -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BandwidthTrace:
    times_ms: np.ndarray
    bps: np.ndarray
    name: str = "trace"

    def __post_init__(self):
        t = np.asarray(self.times_ms, dtype=np.int64)
        b = np.asarray(self.bps, dtype=np.int64)
        object.__setattr__(self, "times_ms", t)
        object.__setattr__(self, "bps", b)
        problems = []
        if t.ndim != 1 or t.shape != b.shape or len(t) == 0:
            problems.append("trace needs matching, non-empty time and bps columns")
        else:
            if t[0] != 0:
                problems.append("trace must start at time 0")
            if np.any(np.diff(t) <= 0):
                problems.append("trace times must be strictly increasing")
            if np.any(b <= 0):
                problems.append("throughput must be positive")
        if problems:
            raise ValidationError(problems, where=f"trace {self.name}")

    @classmethod
    def constant(cls, bps: int, name: str | None = None) -> "BandwidthTrace":
        return cls([0], [int(bps)], name or f"constant_{int(bps)}")

    def value_at(self, t_ms: float) -> int:
        k = int(np.searchsorted(self.times_ms, t_ms, side="right")) - 1
        return int(self.bps[max(k, 0)])

    def transfer_ms(self, start_ms: float, bits: float) -> float:
        """Time to move ``bits`` starting at ``start_ms``; the last sample holds forever."""
        k = max(int(np.searchsorted(self.times_ms, start_ms, side="right")) - 1, 0)
        t = float(start_ms)
        left = float(bits)
        while True:
            rate = self.bps[k] / 1000.0  # bits per ms
            if k + 1 < len(self.times_ms):
                span = self.times_ms[k + 1] - t
                if rate * span < left:
                    left -= rate * span
                    t = float(self.times_ms[k + 1])
                    k += 1
                    continue
            return t + left / rate - start_ms


@dataclass(frozen=True, eq=False)
class HeadTrajectory:
    """Head orientation samples (radians) against media time."""

    times_ms: np.ndarray
    yaw: np.ndarray
    pitch: np.ndarray
    roll: np.ndarray
    name: str = "trajectory"

    def __post_init__(self):
        arrays = {k: np.asarray(getattr(self, k), dtype=float) for k in ("yaw", "pitch", "roll")}
        t = np.asarray(self.times_ms, dtype=np.int64)
        object.__setattr__(self, "times_ms", t)
        for k, v in arrays.items():
            object.__setattr__(self, k, v)
        problems = []
        if len(t) < 2 or any(v.shape != t.shape for v in arrays.values()):
            problems.append("trajectory needs at least two samples with all columns")
        else:
            if t[0] != 0:
                problems.append("trajectory must start at time 0")
            if np.any(np.diff(t) <= 0):
                problems.append("trajectory times must be strictly increasing")
            if np.any(np.abs(arrays["pitch"]) > math.pi / 2 + 1e-12):
                problems.append("pitch must lie in [-90, 90] degrees")
        if problems:
            raise ValidationError(problems, where=f"trajectory {self.name}")

    @property
    def duration_ms(self) -> int:
        """End of coverage: the last sample holds for one sampling interval."""
        return int(2 * self.times_ms[-1] - self.times_ms[-2])

    def pose_at(self, t_ms: float) -> tuple[float, float, float]:
        return pose_at(self, t_ms)


def pose_at(trajectory: HeadTrajectory, t_ms: float) -> tuple[float, float, float]:
    """Step-hold lookup: the latest sample at or before ``t_ms``."""
    if not 0 <= t_ms < trajectory.duration_ms:
        raise DomainError(f"time {t_ms} ms outside trajectory coverage [0, {trajectory.duration_ms})")
    k = int(np.searchsorted(trajectory.times_ms, t_ms, side="right")) - 1
    return float(trajectory.yaw[k]), float(trajectory.pitch[k]), float(trajectory.roll[k])


def _read_rows(path, header):
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or [c.strip() for c in first] != header:
            raise ValidationError([f"expected header {','.join(header)}"], where=f"{path}:1")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValidationError([f"expected {len(header)} fields, got {len(row)}"], where=f"{path}:{lineno}")
            yield lineno, [c.strip() for c in row]


def _check_time(prev, t, path, lineno):
    if prev is None and t != 0:
        raise ValidationError(["first sample must be at time 0"], where=f"{path}:{lineno}")
    if prev is not None and t <= prev:
        raise ValidationError([f"time {t} does not increase (previous {prev})"], where=f"{path}:{lineno}")


def load_trace(path) -> BandwidthTrace:
    times, rates, prev = [], [], None
    for lineno, (t, b) in _read_rows(path, ["time_ms", "bps"]):
        try:
            t, b = int(t), int(b)
        except ValueError:
            raise ValidationError(["fields must be integers"], where=f"{path}:{lineno}") from None
        _check_time(prev, t, path, lineno)
        if b <= 0:
            raise ValidationError([f"throughput must be positive, got {b}"], where=f"{path}:{lineno}")
        times.append(t)
        rates.append(b)
        prev = t
    if not times:
        raise ValidationError(["trace has no samples"], where=str(path))
    return BandwidthTrace(times, rates, Path(path).stem)


def load_trajectory(path) -> HeadTrajectory:
    cols = {"t": [], "yaw": [], "pitch": [], "roll": []}
    prev = None
    for lineno, row in _read_rows(path, ["time_ms", "yaw_deg", "pitch_deg", "roll_deg"]):
        try:
            t = int(row[0])
            yaw, pitch, roll = (float(c) for c in row[1:])
        except ValueError:
            raise ValidationError(["time_ms must be an integer and angles numeric"], where=f"{path}:{lineno}") from None
        if not all(math.isfinite(a) for a in (yaw, pitch, roll)):
            raise ValidationError(["angles must be finite"], where=f"{path}:{lineno}")
        if abs(pitch) > 90:
            raise ValidationError([f"pitch {pitch} outside [-90, 90]"], where=f"{path}:{lineno}")
        _check_time(prev, t, path, lineno)
        for key, value in zip(cols, (t, yaw, pitch, roll)):
            cols[key].append(value)
        prev = t
    return HeadTrajectory(
        cols["t"], np.radians(cols["yaw"]), np.radians(cols["pitch"]), np.radians(cols["roll"]), Path(path).stem
    )


def write_trace(trace: BandwidthTrace, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_ms", "bps"])
        w.writerows(zip(trace.times_ms.tolist(), trace.bps.tolist()))


def write_trajectory(trajectory: HeadTrajectory, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_ms", "yaw_deg", "pitch_deg", "roll_deg"])
        for t, y, p, r in zip(trajectory.times_ms, trajectory.yaw, trajectory.pitch, trajectory.roll):
            w.writerow([int(t)] + [fmt_deg(a) for a in (y, p, r)])


# -- policies -----------------------------------------------------------------

@dataclass(frozen=True)
class Proposed:
    gamma: float = DEFAULT_GAMMA
    stride: int = DEFAULT_STRIDE
    name = "proposed"


@dataclass(frozen=True)
class Reference:
    name = "reference"


Policy = Union[Proposed, Reference]


# -- log ----------------------------------------------------------------------

@dataclass(frozen=True)
class SegmentRecord:
    seg_index: int
    request_ms: float
    r_cur: float
    pose: tuple[float, float, float]
    tile_ids: tuple[int, ...]  # (0,) for the whole-frame reference stream
    targets: tuple[float, ...]
    rep_ids: tuple[int, ...]
    bitrates: tuple[int, ...]
    download_ms: float
    stall_ms: float

    @property
    def total_bitrate(self) -> int:
        return sum(self.bitrates)


@dataclass(frozen=True)
class TickRecord:
    media_ms: int
    wall_ms: float
    seg_index: int
    pose: tuple[float, float, float]
    quality: float


@dataclass
class SimulationLog:
    meta: dict
    segments: list[SegmentRecord] = field(default_factory=list)
    ticks: list[TickRecord] = field(default_factory=list)

    @property
    def run_id(self) -> str:
        return f"{self.meta['policy']}__{self.meta['trace']}__{self.meta['trajectory']}"

    def mean_quality(self) -> float:
        return float(np.mean([t.quality for t in self.ticks]))

    def segments_csv(self) -> str:
        rows = [SEGMENT_COLUMNS]
        for s in self.segments:
            for tid, target, rep, rate in zip(s.tile_ids, s.targets, s.rep_ids, s.bitrates):
                rows.append([
                    s.seg_index, fmt_ms(s.request_ms), fmt_ms(s.r_cur), *map(fmt_deg, s.pose),
                    tid, fmt_ms(target), rep, rate, fmt_ms(s.download_ms), fmt_ms(s.stall_ms),
                ])
        return csv_text(rows)

    def ticks_csv(self) -> str:
        rows = [TICK_COLUMNS]
        for t in self.ticks:
            rows.append([t.media_ms, fmt_ms(t.wall_ms), t.seg_index, *map(fmt_deg, t.pose), fmt_db(t.quality)])
        return csv_text(rows)

    def write(self, out_dir) -> dict[str, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {
            "segments": out_dir / f"{self.run_id}.segments.csv",
            "ticks": out_dir / f"{self.run_id}.ticks.csv",
            "meta": out_dir / f"{self.run_id}.meta.json",
        }
        paths["segments"].write_text(self.segments_csv())
        paths["ticks"].write_text(self.ticks_csv())
        paths["meta"].write_text(canonical_dumps(self.meta))
        return paths

    @classmethod
    def read(cls, meta_path) -> "SimulationLog":
        meta_path = Path(meta_path)
        stem = meta_path.name[: -len(".meta.json")]
        meta = canonical_loads(meta_path.read_text())
        log = cls(meta)

        seg_rows: dict[int, list[dict]] = {}
        with (meta_path.parent / f"{stem}.segments.csv").open(newline="") as fh:
            for row in csv.DictReader(fh):
                seg_rows.setdefault(int(row["seg_index"]), []).append(row)
        for k in sorted(seg_rows):
            rows = seg_rows[k]
            r0 = rows[0]
            log.segments.append(SegmentRecord(
                k, float(r0["request_ms"]), float(r0["r_cur_bps"]),
                tuple(math.radians(float(r0[c])) for c in ("yaw_deg", "pitch_deg", "roll_deg")),
                tuple(int(r["tile_id"]) for r in rows),
                tuple(float(r["target_bps"]) for r in rows),
                tuple(int(r["rep_id"]) for r in rows),
                tuple(int(r["bitrate_bps"]) for r in rows),
                float(r0["download_ms"]), float(r0["stall_ms"]),
            ))
        with (meta_path.parent / f"{stem}.ticks.csv").open(newline="") as fh:
            for row in csv.DictReader(fh):
                log.ticks.append(TickRecord(
                    int(row["media_ms"]), float(row["wall_ms"]), int(row["seg_index"]),
                    tuple(math.radians(float(row[c])) for c in ("yaw_deg", "pitch_deg", "roll_deg")),
                    float(row["quality_db"]),
                ))
        return log


SEGMENT_COLUMNS = [
    "seg_index", "request_ms", "r_cur_bps", "yaw_deg", "pitch_deg", "roll_deg",
    "tile_id", "target_bps", "rep_id", "bitrate_bps", "download_ms", "stall_ms",
]
TICK_COLUMNS = ["media_ms", "wall_ms", "seg_index", "yaw_deg", "pitch_deg", "roll_deg", "quality_db"]


def fmt_ms(x):
    return f"{x:.3f}"


def fmt_deg(rad):
    return f"{math.degrees(rad):.6f}"


def fmt_db(x):
    return f"{x:.6f}"


def csv_text(rows) -> str:
    return "".join(",".join(str(c) for c in row) + "\n" for row in rows)


# -- simulation -----------------------------------------------------------------

def harmonic_mean(values) -> float:
    return len(values) / sum(1.0 / v for v in values)


def _media_position(t, starts, ends, seg_ms):
    """Media time on screen at wall time ``t`` given display intervals so far."""
    pos = 0.0
    for k, (a, b) in enumerate(zip(starts, ends)):
        if t < a:
            return pos
        pos = k * seg_ms + min(t, b) - a
    return pos


def run_simulation(
    manifest: Manifest,
    policy: Policy,
    trace: BandwidthTrace,
    trajectory: HeadTrajectory,
    quality_model: RateQualityModel | None = None,
    *,
    hfov: float = DEFAULT_FOV,
    vfov: float = DEFAULT_FOV,
    quality_stride: int = DEFAULT_STRIDE,
    tick_ms: int = TICK_MS,
    buffer_target_segments: float = BUFFER_TARGET_SEGMENTS,
    estimator_window: int = ESTIMATOR_WINDOW,
) -> SimulationLog:
    layout = manifest.layout
    if quality_model is None:
        quality_model = RateQualityModel.for_layout(layout)
    media_ms = float(manifest.media_duration * 1000)
    if trajectory.duration_ms < media_ms:
        raise ValidationError(
            [f"trajectory covers {trajectory.duration_ms} ms, media lasts {media_ms:g} ms"],
            where=f"trajectory {trajectory.name}",
        )
    seg_ms = float(manifest.segment_duration * 1000)
    target_ms = buffer_target_segments * seg_ms
    ref_ladder = manifest.reference_ladder()
    ref_rates = {r.rep_id: r.bitrate for r in ref_ladder}

    cache: dict[tuple, object] = {}

    def classification(pose_tuple, stride):
        key = (pose_tuple, stride)
        if key not in cache:
            pose = ViewportPose(*pose_tuple, hfov=hfov, vfov=vfov)
            cache[key] = classify_tiles(layout, pose, stride)
        return cache[key]

    meta = {
        "policy": policy.name,
        "gamma": policy.gamma if isinstance(policy, Proposed) else None,
        "stride": policy.stride if isinstance(policy, Proposed) else None,
        "quality_stride": quality_stride,
        "manifest": manifest.digest(),
        "trace": trace.name,
        "trajectory": trajectory.name,
        "segment_duration": str(manifest.segment_duration),
        "media_duration": str(manifest.media_duration),
        "n_tiles": len(layout),
        "hfov_deg": round(math.degrees(hfov), 9),
        "vfov_deg": round(math.degrees(vfov), 9),
        "tick_ms": tick_ms,
        "buffer_target_segments": buffer_target_segments,
        "estimator_window": estimator_window,
        "quality_model": quality_model.as_dict(),
    }
    log = SimulationLog(meta)

    throughputs: list[float] = []
    starts: list[float] = []  # wall time each segment starts on screen
    ends: list[float] = []
    t = 0.0
    for k in range(manifest.n_segments):
        if throughputs:
            r_cur = harmonic_mean(throughputs[-estimator_window:])
        else:
            r_cur = float(trace.value_at(t))
        pose_tuple = pose_at(trajectory, _media_position(t, starts, ends, seg_ms))

        if isinstance(policy, Proposed):
            cls = classification(pose_tuple, policy.stride)
            result = select_all(cls, allocate(cls, r_cur, policy.gamma), manifest.ladder, policy.gamma, r_cur)
            tile_ids, targets = result.tile_ids, tuple(float(x) for x in result.targets)
            rep_ids, bitrates = result.rep_ids, result.bitrates
        else:
            j = select_reference(ref_ladder, r_cur)
            tile_ids, targets, rep_ids, bitrates = (0,), (r_cur,), (j,), (ref_rates[j],)

        seg_len_s = float(manifest.segment_length(k))
        bits = sum(bitrates) * seg_len_s
        download = float(trace.transfer_ms(t, bits))
        done = t + download
        throughputs.append(bits / (download / 1000.0))

        if k == 0:
            stall = done  # startup delay
            start = done
        else:
            stall = max(0.0, done - ends[-1])
            start = max(done, ends[-1])
        starts.append(start)
        ends.append(start + seg_len_s * 1000.0)

        log.segments.append(SegmentRecord(
            k, t, r_cur, pose_tuple, tuple(tile_ids), targets, tuple(rep_ids), tuple(bitrates), download, stall,
        ))
        buffered = ends[-1] - done
        t = done + max(0.0, buffered - target_ms)

    for media_t in range(0, int(math.ceil(media_ms)), tick_ms):
        k = min(int(media_t // seg_ms), manifest.n_segments - 1)
        seg = log.segments[k]
        pose_tuple = pose_at(trajectory, media_t)
        cls = classification(pose_tuple, quality_stride)
        if isinstance(policy, Proposed):
            rates = seg.bitrates
        else:
            rates = uniform_density_bitrates(layout, seg.bitrates[0])
        q = quality_from_classification(quality_model, layout, cls, rates)
        wall = starts[k] + (media_t - k * seg_ms)
        log.ticks.append(TickRecord(media_t, wall, k, pose_tuple, q))
    return log
