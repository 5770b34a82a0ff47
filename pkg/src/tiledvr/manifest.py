"""Extended manifest: tile geometry, spherical centers and the bitrate ladder.

The document is canonical JSON (sorted keys, two-space indent, reals rounded
to 9 significant digits) so that emitting the same manifest twice is
byte-identical. See ``docs/manifest-format.md`` for the schema.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import ConfigurationError, DocumentSyntaxError, DomainError, ValidationError
from .geometry import ErpFrame, Tile, TileLayout, TileRect, build_layout, layout_violations, rect_center

FORMAT_VERSION = "tiled-vr-abr/1"

#: encoding target bitrates in bits/s used for both tiled and non-tiled streams
DEFAULT_LADDER_BPS = tuple(
    int(m * 1_000_000) for m in (0.9, 2, 5, 7, 9, 11, 13, 15, 17, 19, 21, 23, 25)
)

DEFAULT_URL_TEMPLATE = "tile{tile}/rep{rep}/seg{seg}.m4s"
_PLACEHOLDERS = ("{tile}", "{rep}", "{seg}")
CENTER_TOL = 1e-6


@dataclass(frozen=True, order=True)
class Representation:
    rep_id: int
    bitrate: int


def ladder_violations(ladder: Sequence[Representation]) -> list[str]:
    out = []
    if not ladder:
        return ["ladder is empty"]
    ids = [r.rep_id for r in ladder]
    if any(not isinstance(i, int) or i < 1 for i in ids):
        out.append("representation ids must be integers >= 1")
    if len(set(ids)) != len(ids):
        out.append("representation ids are not unique")
    rates = [r.bitrate for r in ladder]
    if any(not isinstance(b, int) or b <= 0 for b in rates):
        out.append("bitrates must be positive integers")
    elif any(b2 <= b1 for b1, b2 in zip(rates, rates[1:])):
        out.append("ladder bitrates must be strictly increasing")
    return out


def make_ladder(bitrates: Iterable[int]) -> tuple[Representation, ...]:
    return tuple(Representation(j + 1, int(b)) for j, b in enumerate(bitrates))


def per_tile_ladder(targets: Sequence[int], n_tiles: int) -> tuple[Representation, ...]:
    """Split each encoding target equally over ``n_tiles`` (rounded to whole bits/s)."""
    return make_ladder(round(Fraction(t, n_tiles)) for t in targets)


@dataclass(frozen=True)
class Manifest:
    layout: TileLayout
    ladder: tuple[Representation, ...]
    segment_duration: Fraction
    media_duration: Fraction
    url_template: str = DEFAULT_URL_TEMPLATE

    def __post_init__(self):
        object.__setattr__(self, "ladder", tuple(self.ladder))
        try:
            object.__setattr__(self, "segment_duration", Fraction(self.segment_duration))
            object.__setattr__(self, "media_duration", Fraction(self.media_duration))
        except (TypeError, ValueError) as exc:
            raise ValidationError([f"durations must be rational: {exc}"], where="manifest") from None
        problems = self.violations()
        if problems:
            raise ValidationError(problems, where="manifest")

    def violations(self) -> list[str]:
        out = ladder_violations(self.ladder)
        if self.segment_duration <= 0:
            out.append("segment duration must be positive")
        if self.media_duration <= 0:
            out.append("media duration must be positive")
        missing = [p for p in _PLACEHOLDERS if p not in self.url_template]
        if missing:
            out.append(f"url template lacks {', '.join(missing)}")
        return out

    @property
    def n_segments(self) -> int:
        return math.ceil(self.media_duration / self.segment_duration)

    def segment_length(self, seg_index: int) -> Fraction:
        """Duration in seconds of one segment; only the last may be shorter."""
        if not 0 <= seg_index < self.n_segments:
            raise DomainError(f"segment index {seg_index} out of range")
        return min(self.segment_duration, self.media_duration - seg_index * self.segment_duration)

    def representation(self, rep_id: int) -> Representation:
        for r in self.ladder:
            if r.rep_id == rep_id:
                return r
        raise DomainError(f"unknown representation id {rep_id}")

    def reference_ladder(self) -> tuple[Representation, ...]:
        """Whole-frame ladder: rung J costs the sum of every tile at rung J."""
        n = len(self.layout)
        return tuple(Representation(r.rep_id, r.bitrate * n) for r in self.ladder)

    def digest(self) -> str:
        return hashlib.sha256(emit_manifest(self).encode()).hexdigest()[:16]

    def with_segment_duration(self, seconds) -> "Manifest":
        return replace(self, segment_duration=Fraction(seconds))


def tiled_manifest(
    frame: ErpFrame,
    n_tiles: int,
    targets: Sequence[int] = DEFAULT_LADDER_BPS,
    segment_duration=2,
    media_duration=60,
    url_template: str = DEFAULT_URL_TEMPLATE,
) -> Manifest:
    layout = build_layout(frame, n_tiles)
    return Manifest(layout, per_tile_ladder(targets, n_tiles), segment_duration, media_duration, url_template)


def segment_url(manifest: Manifest, tile_id: int, rep_id: int, seg_index: int) -> str:
    manifest.layout.tile(tile_id)
    manifest.representation(rep_id)
    if not 0 <= seg_index < manifest.n_segments:
        raise DomainError(f"segment index {seg_index} outside [0, {manifest.n_segments})")
    return (
        manifest.url_template.replace("{tile}", str(tile_id))
        .replace("{rep}", str(rep_id))
        .replace("{seg}", str(seg_index))
    )


# -- canonical text ---------------------------------------------------------

def _real(x: float) -> float:
    return float(f"{x:.9g}") + 0.0  # + 0.0 folds -0.0


def _fraction_text(f: Fraction) -> str:
    return str(f)


def canonical_dumps(obj) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def canonical_loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentSyntaxError(exc.msg, exc.lineno, exc.colno) from None


def emit_manifest(manifest: Manifest) -> str:
    problems = manifest.violations() + layout_violations(manifest.layout.frame, manifest.layout.tiles)
    if problems:
        raise ValidationError(problems, where="manifest")
    frame = manifest.layout.frame
    doc = {
        "format": FORMAT_VERSION,
        "frame": {"width": frame.width, "height": frame.height},
        "ladder": [{"id": r.rep_id, "bitrate": r.bitrate} for r in manifest.ladder],
        "media_duration": _fraction_text(manifest.media_duration),
        "segment_duration": _fraction_text(manifest.segment_duration),
        "tiles": [
            {
                "id": t.tile_id,
                "x": t.rect.x,
                "y": t.rect.y,
                "width": t.rect.w,
                "height": t.rect.h,
                "center": [_real(c) for c in t.center],
            }
            for t in manifest.layout.tiles
        ],
        "url_template": manifest.url_template,
    }
    return canonical_dumps(doc)


def _require(mapping, key, kind, where, problems):
    if not isinstance(mapping, dict) or key not in mapping:
        problems.append(f"{where}: missing field '{key}'")
        return None
    value = mapping[key]
    ok = isinstance(value, kind) and not isinstance(value, bool)
    if not ok:
        problems.append(f"{where}: field '{key}' has wrong type {type(value).__name__}")
        return None
    return value


def _parse_fraction(text, where, problems):
    if text is None:
        return None
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        problems.append(f"{where}: not a rational number: {text!r}")
        return None


def parse_manifest(text: str) -> Manifest:
    doc = canonical_loads(text)
    problems: list[str] = []
    if not isinstance(doc, dict):
        raise ValidationError(["document root must be an object"], where="manifest")
    version = doc.get("format")
    if version != FORMAT_VERSION:
        raise ValidationError([f"unsupported format {version!r}, expected {FORMAT_VERSION!r}"], where="manifest")

    frame_doc = _require(doc, "frame", dict, "manifest", problems)
    frame = None
    if frame_doc is not None:
        w = _require(frame_doc, "width", int, "frame", problems)
        h = _require(frame_doc, "height", int, "frame", problems)
        if w is not None and h is not None:
            try:
                frame = ErpFrame(w, h)
            except ConfigurationError as exc:
                problems.append(str(exc))

    ladder = []
    for k, entry in enumerate(_require(doc, "ladder", list, "manifest", problems) or []):
        rid = _require(entry, "id", int, f"ladder[{k}]", problems)
        rate = _require(entry, "bitrate", int, f"ladder[{k}]", problems)
        if rid is not None and rate is not None:
            ladder.append(Representation(rid, rate))
    problems += ladder_violations(ladder)

    seg = _parse_fraction(_require(doc, "segment_duration", str, "manifest", problems), "segment_duration", problems)
    media = _parse_fraction(_require(doc, "media_duration", str, "manifest", problems), "media_duration", problems)
    template = _require(doc, "url_template", str, "manifest", problems)

    tiles = []
    for k, entry in enumerate(_require(doc, "tiles", list, "manifest", problems) or []):
        where = f"tiles[{k}]"
        fields = [_require(entry, name, int, where, problems) for name in ("id", "x", "y", "width", "height")]
        center = _require(entry, "center", list, where, problems)
        if center is not None and (
            len(center) != 3 or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in center)
        ):
            problems.append(f"{where}: center must be three numbers")
            center = None
        if None in fields or center is None:
            continue
        tid, x, y, w, h = fields
        tiles.append(Tile(tid, TileRect(x, y, w, h), tuple(float(c) for c in center)))

    if frame is not None and tiles:
        tile_problems = layout_violations(frame, tiles, center_tol=CENTER_TOL)
        problems += tile_problems
        if not tile_problems:
            # stored centers are rounded; keep the exact ones
            tiles = [Tile(t.tile_id, t.rect, rect_center(t.rect, frame)) for t in tiles]
    elif frame is not None:
        problems.append("manifest lists no tiles")

    if problems:
        raise ValidationError(problems, where="manifest")
    return Manifest(TileLayout(frame, tuple(tiles)), tuple(ladder), seg, media, template)
