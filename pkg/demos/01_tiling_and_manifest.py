"""
Tiling an equirectangular frame
===============================

Split an 8K ERP frame into two pole tiles and a ring of equator tiles,
look at where the tile centers land on the sphere, and write the manifest
a player would fetch.
"""

# %%
import numpy as np

from tiledvr import ErpFrame, build_layout, emit_manifest, parse_manifest, tiled_manifest

frame = ErpFrame(8192, 4096)
layout = build_layout(frame, 10)
for tile in layout.tiles:
    r = tile.rect
    print(f"tile {tile.tile_id:2d}  x={r.x:5d} y={r.y:5d}  {r.w}x{r.h}  center={np.round(tile.center, 3)}")

# %%
# Tiles partition the frame exactly.
print(sum(t.rect.area for t in layout.tiles) == frame.pixels)

# %%
# Indivisible widths are rejected up front rather than producing ragged tiles.
try:
    build_layout(frame, 12)
except ValueError as exc:
    print("rejected:", exc)

# %%
# The manifest carries the geometry, the per-tile ladder and the segment timing.
manifest = tiled_manifest(frame, 10)
text = emit_manifest(manifest)
print(text[:400])
print("segments:", manifest.n_segments, " digest:", manifest.digest())

# %%
# Emission is canonical, so parsing and re-emitting gives the same bytes.
print(emit_manifest(parse_manifest(text)) == text)
