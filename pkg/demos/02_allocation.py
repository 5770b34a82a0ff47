"""
Splitting bandwidth across tiles
================================

For one head pose, count viewport pixels per tile, give 80% of the
estimated bandwidth to the tiles in view and spread the rest by distance.
"""

# %%
import math

from tiledvr import ErpFrame, ViewportPose, allocate_and_select, tiled_manifest

manifest = tiled_manifest(ErpFrame(8192, 4096), 10)
pose = ViewportPose.from_degrees(yaw=0, pitch=0)
result = allocate_and_select(manifest.layout, pose, manifest.ladder, r_cur=9e6)

cls = result.classification
for k, tid in enumerate(result.tile_ids):
    where = f"IN  w={cls.weights[k]:.4f}" if cls.inside[k] else f"OUT d={cls.distances[k]:.3f}"
    print(f"tile {tid:2d}  {where:16s} target {result.targets[k] / 1e6:6.3f} Mbps -> {result.bitrates[k] / 1e6:5.2f} Mbps")
print("requested total:", result.total_selected / 1e6, "Mbps")

# %%
# The 96 degree viewport reaches into both pole bands even when looking at
# the horizon, so the poles count as in view but with tiny weights.
# A narrower field of view keeps them out:
narrow = ViewportPose(math.radians(22.5), 0.0, hfov=math.radians(80), vfov=math.radians(80))
print(allocate_and_select(manifest.layout, narrow, manifest.ladder, 9e6).rep_ids)

# %%
# Turning the head moves the high rungs with it.
for yaw in (0, 45, 90, 180):
    res = allocate_and_select(manifest.layout, ViewportPose.from_degrees(yaw, 0), manifest.ladder, 9e6)
    print(yaw, res.rep_ids)
