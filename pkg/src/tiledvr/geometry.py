"""Equirectangular (ERP) frame geometry.

Conventions: right-handed world frame, +Z up, longitude 0 along +X and
increasing towards +Y. Pixel ``(u, v)`` is column ``u``, row ``v``; row 0 is
the top of the frame (north pole).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, ValidationError

UNIT_NORM_TOL = 1e-9
DEFAULT_FOV = math.radians(96.0)

# upper bound on points evaluated per vectorized batch
_BATCH = 1 << 22


@dataclass(frozen=True)
class ErpFrame:
    width: int
    height: int

    def __post_init__(self):
        for name in ("width", "height"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value <= 0:
                raise ConfigurationError(f"frame {name} must be a positive integer, got {value!r}")
            if value % 2:
                raise ConfigurationError(f"frame {name} must be even, got {value}")
        if self.width != 2 * self.height:
            raise ConfigurationError(
                f"ERP frame must be 2:1, got {self.width}x{self.height}"
            )

    @property
    def pixels(self) -> int:
        return self.width * self.height

    @classmethod
    def parse(cls, text: str) -> "ErpFrame":
        """Parse ``"WIDTHxHEIGHT"``."""
        try:
            w, h = text.lower().split("x")
            return cls(int(w), int(h))
        except ValueError as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"frame must look like 8192x4096, got {text!r}") from None

    def __str__(self):
        return f"{self.width}x{self.height}"


@dataclass(frozen=True)
class TileRect:
    x: int
    y: int
    w: int
    h: int

    @property
    def area(self) -> int:
        return self.w * self.h

    def overlaps(self, other: "TileRect") -> bool:
        return (
            self.x < other.x + other.w
            and other.x < self.x + self.w
            and self.y < other.y + other.h
            and other.y < self.y + self.h
        )

    def midpoint(self) -> tuple[float, float]:
        """Continuous pixel index of the rect's geometric middle."""
        return self.x + (self.w - 1) / 2, self.y + (self.h - 1) / 2


@dataclass(frozen=True)
class Tile:
    tile_id: int
    rect: TileRect
    center: tuple[float, float, float]


def _rect_violations(rect: TileRect, frame: ErpFrame) -> list[str]:
    out = []
    if rect.w <= 0 or rect.h <= 0:
        out.append(f"non-positive size {rect.w}x{rect.h}")
    if rect.x < 0 or rect.y < 0:
        out.append(f"negative offset ({rect.x}, {rect.y})")
    if rect.x + rect.w > frame.width or rect.y + rect.h > frame.height:
        out.append("rect extends past the frame")
    return out


def layout_violations(frame: ErpFrame, tiles: Sequence[Tile], center_tol: float = 1e-9) -> list[str]:
    """Return a message for each broken layout rule (empty when valid)."""
    out = []
    ids = [t.tile_id for t in tiles]
    if ids != list(range(1, len(tiles) + 1)):
        out.append(f"tile ids must be 1..{len(tiles)} in order, got {ids}")
    for t in tiles:
        for msg in _rect_violations(t.rect, frame):
            out.append(f"tile {t.tile_id}: {msg}")
        norm = math.sqrt(sum(c * c for c in t.center))
        if abs(norm - 1.0) > max(center_tol, UNIT_NORM_TOL):
            out.append(f"tile {t.tile_id}: center not on unit sphere (norm {norm:.6g})")
        elif t.rect.w > 0 and t.rect.h > 0 and not _rect_violations(t.rect, frame):
            expected = rect_center(t.rect, frame)
            if max(abs(a - b) for a, b in zip(t.center, expected)) > center_tol:
                out.append(f"tile {t.tile_id}: center does not match rect midpoint")
    for i, a in enumerate(tiles):
        for b in tiles[i + 1:]:
            if a.rect.overlaps(b.rect):
                out.append(f"tiles overlap: {a.tile_id} and {b.tile_id}")
    area = sum(t.rect.area for t in tiles)
    if area != frame.pixels:
        out.append(f"tiles cover {area} pixels, frame has {frame.pixels}")
    return out


@dataclass(frozen=True)
class TileLayout:
    frame: ErpFrame
    tiles: tuple[Tile, ...]

    def __post_init__(self):
        object.__setattr__(self, "tiles", tuple(self.tiles))
        problems = layout_violations(self.frame, self.tiles)
        if problems:
            raise ValidationError(problems, where="tile layout")

    def __len__(self):
        return len(self.tiles)

    @property
    def tile_ids(self) -> tuple[int, ...]:
        return tuple(t.tile_id for t in self.tiles)

    def tile(self, tile_id: int) -> Tile:
        if not 1 <= tile_id <= len(self.tiles):
            raise DomainError(f"unknown tile id {tile_id}")
        return self.tiles[tile_id - 1]

    def pixel_counts(self) -> np.ndarray:
        return np.array([t.rect.area for t in self.tiles], dtype=np.int64)


@dataclass(frozen=True)
class ViewportPose:
    """Viewing orientation plus angular extent of the viewport (radians)."""

    yaw: float
    pitch: float
    roll: float = 0.0
    hfov: float = DEFAULT_FOV
    vfov: float = DEFAULT_FOV

    def __post_init__(self):
        if not 0 < self.hfov < math.pi:
            raise DomainError(f"hfov must lie in (0, pi), got {self.hfov}")
        if not 0 < self.vfov < math.pi:
            raise DomainError(f"vfov must lie in (0, pi), got {self.vfov}")
        if not -math.pi / 2 <= self.pitch <= math.pi / 2:
            raise DomainError(f"pitch must lie in [-pi/2, pi/2], got {self.pitch}")

    @classmethod
    def from_degrees(cls, yaw, pitch, roll=0.0, hfov=96.0, vfov=96.0) -> "ViewportPose":
        r = math.radians
        return cls(r(yaw), r(pitch), r(roll), r(hfov), r(vfov))

    def rotation(self) -> np.ndarray:
        """Camera-to-world rotation: yaw about Z, then pitch, then roll about X."""
        cy, sy = math.cos(self.yaw), math.sin(self.yaw)
        cp, sp = math.cos(self.pitch), math.sin(self.pitch)
        cr, sr = math.cos(self.roll), math.sin(self.roll)
        rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
        # positive pitch tilts +X towards +Z
        ry = np.array([[cp, 0.0, -sp], [0.0, 1.0, 0.0], [sp, 0.0, cp]])
        rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
        return rz @ ry @ rx

    @property
    def axis(self) -> np.ndarray:
        """Unit direction of the viewport center."""
        cp = math.cos(self.pitch)
        return np.array([cp * math.cos(self.yaw), cp * math.sin(self.yaw), math.sin(self.pitch)])


def erp_to_sphere(u, v, frame: ErpFrame) -> np.ndarray:
    """Unit direction through the center of pixel ``(u, v)``.

    ``u`` and ``v`` may be fractional (used for rect midpoints).
    """
    if not (0 <= u < frame.width and 0 <= v < frame.height):
        raise DomainError(f"pixel ({u}, {v}) outside {frame}")
    lon = 2 * math.pi * (u + 0.5) / frame.width - math.pi
    lat = math.pi / 2 - math.pi * (v + 0.5) / frame.height
    return np.array([math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)])


def rect_center(rect: TileRect, frame: ErpFrame) -> tuple[float, float, float]:
    u, v = rect.midpoint()
    return tuple(float(c) for c in erp_to_sphere(u, v, frame))


def make_tile(tile_id: int, rect: TileRect, frame: ErpFrame) -> Tile:
    return Tile(tile_id, rect, rect_center(rect, frame))


def build_layout(frame: ErpFrame, n_tiles: int, pole_fraction=Fraction(1, 4)) -> TileLayout:
    """Two full-width pole tiles plus ``n_tiles - 2`` equal equator columns.

    Ids: 1 is the top pole, 2..N-1 run left to right along the equator,
    N is the bottom pole.
    """
    if n_tiles < 3:
        raise ConfigurationError(f"need at least 3 tiles (2 poles + equator), got {n_tiles}")
    pole_fraction = Fraction(pole_fraction)
    if not 0 < pole_fraction < Fraction(1, 2):
        raise ConfigurationError(f"pole fraction must lie in (0, 1/2), got {pole_fraction}")
    pole_rows = frame.height * pole_fraction
    if pole_rows.denominator != 1:
        raise ConfigurationError(
            f"frame height {frame.height} is not divisible into pole bands of {pole_fraction}"
        )
    pole_rows = int(pole_rows)
    n_eq = n_tiles - 2
    if frame.width % n_eq:
        raise ConfigurationError(
            f"frame width {frame.width} is not divisible by {n_eq} equator tiles"
        )
    col_w = frame.width // n_eq
    eq_h = frame.height - 2 * pole_rows

    rects = [TileRect(0, 0, frame.width, pole_rows)]
    rects += [TileRect(k * col_w, pole_rows, col_w, eq_h) for k in range(n_eq)]
    rects.append(TileRect(0, pole_rows + eq_h, frame.width, pole_rows))
    return TileLayout(frame, tuple(make_tile(i + 1, r, frame) for i, r in enumerate(rects)))


def single_tile_layout(frame: ErpFrame) -> TileLayout:
    """The whole frame as one tile (the non-tiled reference)."""
    return TileLayout(frame, (make_tile(1, TileRect(0, 0, frame.width, frame.height), frame),))


def viewport_contains(direction, pose: ViewportPose) -> bool:
    d = np.asarray(direction, dtype=float)
    xc, yc, zc = pose.rotation().T @ d
    return bool(
        xc > 0
        and abs(math.atan2(yc, xc)) <= pose.hfov / 2
        and abs(math.atan2(zc, xc)) <= pose.vfov / 2
    )


def _in_view(dx, dy, dz, rot, pose):
    # camera coordinates are rot.T @ d; with xc > 0, |atan2(yc, xc)| <= h/2
    # is the same test as |yc| <= xc * tan(h/2)
    xc = rot[0, 0] * dx + rot[1, 0] * dy + rot[2, 0] * dz
    yc = rot[0, 1] * dx + rot[1, 1] * dy + rot[2, 1] * dz
    zc = rot[0, 2] * dx + rot[1, 2] * dy + rot[2, 2] * dz
    return (
        (xc > 0)
        & (np.abs(yc) <= xc * math.tan(pose.hfov / 2))
        & (np.abs(zc) <= xc * math.tan(pose.vfov / 2))
    )


def _grid_membership(cols, rows, pose, frame, rot):
    """Membership for the outer product of pixel rows x pixel columns."""
    lon = 2 * np.pi * (np.asarray(cols) + 0.5) / frame.width - np.pi
    lat = np.pi / 2 - np.pi * (np.asarray(rows) + 0.5) / frame.height
    clat = np.cos(lat)[:, None]
    dx = clat * np.cos(lon)[None, :]
    dy = clat * np.sin(lon)[None, :]
    dz = np.broadcast_to(np.sin(lat)[:, None], dx.shape)
    return _in_view(dx, dy, dz, rot, pose)


def _point_membership(us, vs, pose, frame, rot):
    lon = 2 * np.pi * (us + 0.5) / frame.width - np.pi
    lat = np.pi / 2 - np.pi * (vs + 0.5) / frame.height
    clat = np.cos(lat)
    return _in_view(clat * np.cos(lon), clat * np.sin(lon), np.sin(lat), rot, pose)


def _exact_count(rect, pose, frame, rot) -> int:
    cols = np.arange(rect.x, rect.x + rect.w)
    chunk = max(1, _BATCH // rect.w)
    total = 0
    for y in range(rect.y, rect.y + rect.h, chunk):
        rows = np.arange(y, min(y + chunk, rect.y + rect.h))
        total += int(np.count_nonzero(_grid_membership(cols, rows, pose, frame, rot)))
    return total


def _block_axis(start, length, step):
    starts = start + step * np.arange(-(-length // step))
    sizes = np.minimum(step, start + length - starts)
    return starts, sizes, starts + sizes // 2


def _sampled_count(rect, pose, frame, step, rot) -> int:
    bx, bw, cols = _block_axis(rect.x, rect.w, step)
    by, bh, rows = _block_axis(rect.y, rect.h, step)

    # one ring of neighbor samples outside the rect: wraps in longitude,
    # replicates the edge at the top/bottom of the frame
    ring_cols = np.concatenate(([rect.x - step + step // 2], cols, [rect.x + rect.w + step // 2]))
    ring_cols %= frame.width
    top, bottom = rect.y - step + step // 2, rect.y + rect.h + step // 2
    ring_rows = np.concatenate(
        ([max(top, 0)], rows, [min(bottom, frame.height - 1)])
    )
    grid = _grid_membership(ring_cols, ring_rows, pose, frame, rot)
    if top < 0:
        grid[0] = grid[1]
    if bottom >= frame.height:
        grid[-1] = grid[-2]

    ny, nx = len(rows), len(cols)
    hi = np.zeros((ny, nx), dtype=bool)
    lo = np.ones((ny, nx), dtype=bool)
    for dy in range(3):
        for dx in range(3):
            window = grid[dy:dy + ny, dx:dx + nx]
            hi |= window
            lo &= window
    inside = grid[1:-1, 1:-1]
    mixed = hi != lo

    area = bh[:, None] * bw[None, :]
    total = int(area[inside & ~mixed].sum())

    # blocks near the viewport boundary are counted pixel by pixel
    iy, ix = np.nonzero(mixed)
    if len(iy):
        oy, ox = np.divmod(np.arange(step * step), step)
        per_batch = max(1, _BATCH // (step * step))
        for k in range(0, len(iy), per_batch):
            sy, sx = iy[k:k + per_batch], ix[k:k + per_batch]
            valid = (oy[None, :] < bh[sy][:, None]) & (ox[None, :] < bw[sx][:, None])
            vs = (by[sy][:, None] + oy[None, :])[valid]
            us = (bx[sx][:, None] + ox[None, :])[valid]
            total += int(np.count_nonzero(_point_membership(us, vs, pose, frame, rot)))
    return total


def tile_viewport_pixels(tile: TileRect, pose: ViewportPose, frame: ErpFrame, step: int = 1) -> int:
    """Number of pixels of ``tile`` whose centers fall inside the viewport.

    ``step=1`` tests every pixel. Larger steps test one pixel per
    ``step x step`` block and credit the whole block, except for blocks whose
    neighborhood straddles the viewport boundary, which are tested pixel by
    pixel.
    """
    if int(step) != step or step < 1:
        raise DomainError(f"step must be a positive integer, got {step}")
    problems = _rect_violations(tile, frame)
    if problems:
        raise DomainError(f"tile {tile}: " + "; ".join(problems))
    rot = pose.rotation()
    if step == 1:
        return _exact_count(tile, pose, frame, rot)
    return _sampled_count(tile, pose, frame, int(step), rot)


def viewport_pixel_counts(layout: TileLayout, pose: ViewportPose, step: int = 1) -> np.ndarray:
    """Per-tile viewport pixel counts, ordered by tile id."""
    return np.array(_cached_counts(layout, pose, int(step)), dtype=np.int64)


@lru_cache(maxsize=8192)
def _cached_counts(layout, pose, step):
    return tuple(tile_viewport_pixels(t.rect, pose, layout.frame, step) for t in layout.tiles)


def chord_distance(a, b) -> float:
    """Straight-line distance between two points on the unit sphere."""
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))
