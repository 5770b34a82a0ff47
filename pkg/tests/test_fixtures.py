import numpy as np
import pytest

from tiledvr.errors import ValidationError
from tiledvr.fixtures import bundled_path, bundled_traces, bundled_trajectories, write_bundled


def test_bundled_files_match_generators(tmp_path):
    fresh = write_bundled(tmp_path)
    for path in fresh:
        assert path.read_bytes() == bundled_path(path.name).read_bytes(), path.name


def test_all_trajectories_cover_a_minute():
    for traj in bundled_trajectories().values():
        assert traj.duration_ms == 60_000


def test_square_wave_alternates():
    tr = bundled_traces()["square_4_22mbps"]
    assert tr.bps[:4].tolist() == [22_000_000, 4_000_000, 22_000_000, 4_000_000]
    assert np.all(np.diff(tr.times_ms) == 5000)


def test_unknown_fixture():
    with pytest.raises(ValidationError, match="available"):
        bundled_path("nope")
