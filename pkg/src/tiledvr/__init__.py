"""Viewport-aware tiled 360 video streaming: tiling, manifest, allocation, simulation."""
from .allocation import (
    AllocationResult,
    TileClassification,
    allocate,
    allocate_and_select,
    classify_tiles,
    select_reference,
    select_representation,
)
from .errors import (
    ComputationError,
    ConfigurationError,
    DocumentSyntaxError,
    DomainError,
    TiledVRError,
    ValidationError,
)
from .geometry import (
    ErpFrame,
    Tile,
    TileLayout,
    TileRect,
    ViewportPose,
    build_layout,
    chord_distance,
    erp_to_sphere,
    single_tile_layout,
    tile_viewport_pixels,
    viewport_contains,
    viewport_pixel_counts,
)
from .manifest import (
    DEFAULT_LADDER_BPS,
    Manifest,
    Representation,
    emit_manifest,
    parse_manifest,
    segment_url,
    tiled_manifest,
)
from .quality import RateQualityModel, tile_quality, viewport_quality
from .report import report
from .simulator import (
    BandwidthTrace,
    HeadTrajectory,
    Proposed,
    Reference,
    SimulationLog,
    load_trace,
    load_trajectory,
    pose_at,
    run_simulation,
)

__version__ = "0.1.0"
