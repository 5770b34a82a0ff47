"""Rate-quality proxy standing in for measured PSNR of real encodes.

Each tile maps its bit density (bits/s per pixel) to a PSNR-like score::

    q = clamp(a + b * ln(bitrate / pixels + eps), q_min, q_max)

Viewport quality is the pixel-share weighted mean over tiles touching the
viewport.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .allocation import DEFAULT_STRIDE, TileClassification, classify_tiles
from .errors import DomainError, ValidationError
from .geometry import Tile, TileLayout, ViewportPose

EPS_BPS_PER_PIXEL = 1e-9

DEFAULT_A = 47.0
DEFAULT_B = 5.0
DEFAULT_Q_MIN = 20.0
DEFAULT_Q_MAX = 50.0


@dataclass(frozen=True)
class RateQualityModel:
    """Per-tile ``(a, b)`` parameters plus a shared floor and ceiling.

    Tiles without an explicit entry in ``per_tile`` use the defaults, unless
    ``tile_ids`` restricts the model to a known set of tiles.
    """

    a: float = DEFAULT_A
    b: float = DEFAULT_B
    q_min: float = DEFAULT_Q_MIN
    q_max: float = DEFAULT_Q_MAX
    per_tile: Mapping[int, tuple[float, float]] = field(default_factory=dict)
    tile_ids: frozenset[int] | None = None

    def __post_init__(self):
        problems = []
        if not self.q_min < self.q_max:
            problems.append(f"q_min ({self.q_min}) must be below q_max ({self.q_max})")
        for tid, (_, b) in {None: (self.a, self.b), **dict(self.per_tile)}.items():
            if not b > 0:
                problems.append(f"slope b must be positive (tile {tid}: {b})")
        if problems:
            raise ValidationError(problems, where="rate-quality model")

    @classmethod
    def for_layout(cls, layout: TileLayout, **kwargs) -> "RateQualityModel":
        return cls(tile_ids=frozenset(layout.tile_ids), **kwargs)

    def params(self, tile_id: int) -> tuple[float, float]:
        if self.tile_ids is not None and tile_id not in self.tile_ids:
            raise DomainError(f"tile {tile_id} is not covered by this quality model")
        return self.per_tile.get(tile_id, (self.a, self.b))

    def as_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "q_min": self.q_min, "q_max": self.q_max}


def quality_of_density(a, b, q_min, q_max, bps_per_pixel):
    raw = a + b * np.log(np.asarray(bps_per_pixel, dtype=float) + EPS_BPS_PER_PIXEL)
    return np.clip(raw, q_min, q_max)


def tile_quality(model: RateQualityModel, tile: Tile, bitrate: float) -> float:
    if bitrate < 0:
        raise DomainError(f"bitrate must be non-negative, got {bitrate}")
    a, b = model.params(tile.tile_id)
    return float(quality_of_density(a, b, model.q_min, model.q_max, bitrate / tile.rect.area))


def tile_qualities(model: RateQualityModel, layout: TileLayout, bitrates: Sequence[float]) -> np.ndarray:
    if len(bitrates) != len(layout):
        raise DomainError(f"expected {len(layout)} bitrates, got {len(bitrates)}")
    return np.array([tile_quality(model, t, r) for t, r in zip(layout.tiles, bitrates)])


def quality_from_classification(
    model: RateQualityModel,
    layout: TileLayout,
    classification: TileClassification,
    bitrates: Sequence[float],
) -> float:
    q = tile_qualities(model, layout, bitrates)
    w = classification.weights
    # weights of outside tiles are zero, skip them so their bitrates never matter
    mask = classification.inside
    return float(np.dot(w[mask], q[mask]))


def viewport_quality(
    model: RateQualityModel,
    layout: TileLayout,
    pose: ViewportPose,
    bitrates: Sequence[float],
    stride: int = DEFAULT_STRIDE,
) -> float:
    return quality_from_classification(model, layout, classify_tiles(layout, pose, stride), bitrates)


def uniform_density_bitrates(layout: TileLayout, total_bps: float) -> list[float]:
    """Split a whole-frame bitrate over tiles by pixel share (non-tiled stream)."""
    total_px = layout.frame.pixels
    return [total_bps * t.rect.area / total_px for t in layout.tiles]

