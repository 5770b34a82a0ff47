"""Viewport-aware bitrate allocation and per-tile representation selection.

Tiles touched by the viewport share ``gamma * r_cur`` in proportion to how
many viewport pixels they hold. The remaining ``(1 - gamma) * r_cur`` goes to
the other tiles, inversely to the chord distance between the viewport center
and each tile center. Each tile then takes the ladder rung nearest its share.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ComputationError, DomainError
from .geometry import TileLayout, ViewportPose, chord_distance, viewport_pixel_counts
from .manifest import Representation

DEFAULT_GAMMA = 0.8
DEFAULT_STRIDE = 8


@dataclass(frozen=True)
class TileClassification:
    tile_ids: tuple[int, ...]
    counts: np.ndarray  # viewport pixels per tile
    rho_tot: int
    inside: np.ndarray  # bool, tile touches the viewport
    weights: np.ndarray  # pixel share for inside tiles, 0 elsewhere
    distances: np.ndarray  # chord distance from viewport center to tile center

    @property
    def inside_ids(self) -> tuple[int, ...]:
        return tuple(i for i, f in zip(self.tile_ids, self.inside) if f)

    @property
    def outside_ids(self) -> tuple[int, ...]:
        return tuple(i for i, f in zip(self.tile_ids, self.inside) if not f)


def classify_from_counts(layout: TileLayout, pose: ViewportPose, counts) -> TileClassification:
    counts = np.asarray(counts, dtype=np.int64)
    rho_tot = int(counts.sum())
    if rho_tot == 0:
        raise ComputationError("viewport covers no sampled pixel; use a smaller stride")
    inside = counts > 0
    weights = np.where(inside, counts / rho_tot, 0.0)
    axis = pose.axis
    distances = np.array([chord_distance(axis, t.center) for t in layout.tiles])
    # a tile whose center is the viewport center always holds viewport pixels
    assert not np.any(distances[~inside] == 0.0)
    return TileClassification(layout.tile_ids, counts, rho_tot, inside, weights, distances)


def classify_tiles(layout: TileLayout, pose: ViewportPose, stride: int = DEFAULT_STRIDE) -> TileClassification:
    return classify_from_counts(layout, pose, viewport_pixel_counts(layout, pose, stride))


def outside_shares(distances) -> np.ndarray:
    """Normalized inverse-distance shares: ``kappa_i = max(d) / d_i``, summed to 1."""
    d = np.asarray(distances, dtype=float)
    kappa = d.max() / d
    return kappa / kappa.sum()


def allocate(classification: TileClassification, r_cur: float, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
    """Target bitrate per tile (bits/s), ordered like ``classification.tile_ids``."""
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")
    if not r_cur > 0:
        raise DomainError(f"r_cur must be positive, got {r_cur}")
    inside = classification.inside
    if not inside.any():
        raise ComputationError("no tile intersects the viewport")

    targets = np.zeros(len(classification.tile_ids))
    if inside.all():
        # nothing outside: the outside share stays with the viewport tiles
        targets[inside] = r_cur * classification.weights[inside]
        return targets
    targets[inside] = gamma * r_cur * classification.weights[inside]
    targets[~inside] = (1.0 - gamma) * r_cur * outside_shares(classification.distances[~inside])
    return targets


def select_representation(target: float, ladder: Sequence[Representation]) -> int:
    """Id of the rung closest to ``target``; ties go to the lower bitrate."""
    if not ladder:
        raise DomainError("empty ladder")
    best = ladder[0]
    best_gap = abs(best.bitrate - target)
    for rep in ladder[1:]:
        gap = abs(rep.bitrate - target)
        if gap < best_gap:
            best, best_gap = rep, gap
    return best.rep_id


@dataclass(frozen=True)
class AllocationResult:
    classification: TileClassification
    targets: np.ndarray
    rep_ids: tuple[int, ...]
    bitrates: tuple[int, ...]
    gamma: float
    r_cur: float

    @property
    def tile_ids(self):
        return self.classification.tile_ids

    @property
    def total_selected(self) -> int:
        return sum(self.bitrates)


def select_all(classification, targets, ladder, gamma, r_cur) -> AllocationResult:
    by_id = {r.rep_id: r.bitrate for r in ladder}
    rep_ids = tuple(select_representation(t, ladder) for t in targets)
    return AllocationResult(
        classification, targets, rep_ids, tuple(by_id[j] for j in rep_ids), gamma, r_cur
    )


def allocate_and_select(
    layout: TileLayout,
    pose: ViewportPose,
    ladder: Sequence[Representation],
    r_cur: float,
    gamma: float = DEFAULT_GAMMA,
    stride: int = DEFAULT_STRIDE,
) -> AllocationResult:
    classification = classify_tiles(layout, pose, stride)
    return select_all(classification, allocate(classification, r_cur, gamma), ladder, gamma, r_cur)


def select_reference(ladder: Sequence[Representation], r_cur: float) -> int:
    """Non-tiled baseline: whole-frame rung nearest the estimated bandwidth."""
    return select_representation(r_cur, ladder)
