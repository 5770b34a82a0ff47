"""
Streaming a minute of video
===========================

Replay the bundled head trajectories over a square-wave bandwidth trace,
once with viewport-aware tiles and once with the whole frame at a single
bitrate, then compare viewport quality.
"""

# %%
import tempfile
from pathlib import Path

from tiledvr import ErpFrame, Proposed, Reference, report, run_simulation, tiled_manifest
from tiledvr.fixtures import bundled_trajectories, square_wave_trace

manifest = tiled_manifest(ErpFrame(8192, 4096), 10)
trace = square_wave_trace()
proposed, reference = [], []
for name, traj in bundled_trajectories().items():
    proposed.append(run_simulation(manifest, Proposed(), trace, traj))
    reference.append(run_simulation(manifest, Reference(), trace, traj))
    print(f"{name:12s} proposed {proposed[-1].mean_quality():6.2f} dB   reference {reference[-1].mean_quality():6.2f} dB")

# %%
# The abrupt jump turns the head by 90 degrees at 30 s. Segments already in
# the buffer were allocated for the old direction, so quality drops until
# fresh segments arrive.
jump = proposed[[log.meta["trajectory"] for log in proposed].index("abrupt_jump")]
for tick in jump.ticks[280:360:10]:
    print(f"{tick.media_ms / 1000:5.1f} s  segment {tick.seg_index:2d}  {tick.quality:6.2f} dB")

# %%
out = Path(tempfile.mkdtemp())
paths = report(proposed, reference, out)
print(paths["summary"].read_text())
