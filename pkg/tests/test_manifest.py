import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiledvr.errors import DocumentSyntaxError, DomainError, ValidationError
from tiledvr.geometry import ErpFrame, TileRect, build_layout, single_tile_layout
from tiledvr.manifest import (
    FORMAT_VERSION,
    DEFAULT_LADDER_BPS,
    Manifest,
    Representation,
    emit_manifest,
    make_ladder,
    parse_manifest,
    per_tile_ladder,
    segment_url,
    tiled_manifest,
)

K8 = ErpFrame(8192, 4096)


def minimal():
    f = ErpFrame(64, 32)
    return Manifest(single_tile_layout(f), make_ladder([1_000_000]), 2, 4)


def test_default_ladder_values():
    assert [b / 1e6 for b in DEFAULT_LADDER_BPS] == [0.9, 2, 5, 7, 9, 11, 13, 15, 17, 19, 21, 23, 25]


def test_per_tile_ladder_divides_targets():
    ladder = per_tile_ladder(DEFAULT_LADDER_BPS, 10)
    assert [r.bitrate for r in ladder][:5] == [90_000, 200_000, 500_000, 700_000, 900_000]
    assert [r.rep_id for r in ladder] == list(range(1, 14))


def test_minimal_manifest_document():
    doc = json.loads(emit_manifest(minimal()))
    assert doc["format"] == FORMAT_VERSION
    assert len(doc["tiles"]) == 1
    np.testing.assert_allclose(doc["tiles"][0]["center"], [1, 0, 0], atol=1e-3)


def test_n10_document_lists_tiles_and_ladder():
    doc = json.loads(emit_manifest(tiled_manifest(K8, 10)))
    assert len(doc["tiles"]) == 10
    assert len(doc["ladder"]) == 13


def test_emit_is_canonical():
    m = tiled_manifest(K8, 10)
    text = emit_manifest(m)
    assert text == emit_manifest(m)
    doc = json.loads(text)
    assert list(doc) == sorted(doc)
    assert text.endswith("\n")


def test_number_formatting():
    text = emit_manifest(tiled_manifest(K8, 10))
    assert '"bitrate": 90000' in text
    for value in json.loads(text)["tiles"][0]["center"]:
        digits = repr(value).replace("-", "").replace(".", "").lstrip("0")
        assert len(digits.split("e")[0]) <= 9


def test_round_trip_equal():
    m = tiled_manifest(K8, 10)
    assert parse_manifest(emit_manifest(m)) == m


@pytest.mark.parametrize("n,frame", [(3, (8192, 4096)), (8, (7680, 3840)), (10, (8192, 4096))])
def test_golden_bytes(golden_dir, n, frame):
    m = tiled_manifest(ErpFrame(*frame), n, media_duration=60)
    assert emit_manifest(m) == (golden_dir / f"manifest_n{n}.json").read_text()
    assert parse_manifest((golden_dir / f"manifest_n{n}.json").read_text()) == m


def _doc():
    return json.loads(emit_manifest(tiled_manifest(ErpFrame(64, 32), 4, media_duration=10)))


def test_off_sphere_center():
    doc = _doc()
    doc["tiles"][1]["center"] = [0.9, 0.0, 0.0]
    with pytest.raises(ValidationError, match="center not on unit sphere"):
        parse_manifest(json.dumps(doc))


def test_center_not_matching_rect():
    doc = _doc()
    doc["tiles"][1]["center"] = [0.0, 1.0, 0.0]
    with pytest.raises(ValidationError, match="center does not match"):
        parse_manifest(json.dumps(doc))


def test_overlapping_tiles():
    doc = _doc()
    doc["tiles"][1]["width"] += 4
    with pytest.raises(ValidationError, match="tiles overlap"):
        parse_manifest(json.dumps(doc))


def test_syntax_error_position():
    text = emit_manifest(minimal()).replace('"format"', "format", 1)
    with pytest.raises(DocumentSyntaxError) as info:
        parse_manifest(text)
    assert info.value.line == 2


def test_wrong_version():
    doc = _doc()
    doc["format"] = "tiled-vr-abr/2"
    with pytest.raises(ValidationError, match="unsupported format"):
        parse_manifest(json.dumps(doc))


def test_missing_field_reported_by_name():
    doc = _doc()
    del doc["segment_duration"]
    with pytest.raises(ValidationError, match="segment_duration"):
        parse_manifest(json.dumps(doc))


def test_ladder_must_increase():
    with pytest.raises(ValidationError, match="strictly increasing"):
        Manifest(single_tile_layout(ErpFrame(64, 32)), [Representation(1, 5), Representation(2, 5)], 2, 4)


def test_validation_lists_every_rule():
    with pytest.raises(ValidationError) as info:
        Manifest(single_tile_layout(ErpFrame(64, 32)), [], -1, 0, "x")
    assert len(info.value.violations) >= 4


class TestSegmentUrl:
    def test_substitution(self):
        m = Manifest(build_layout(ErpFrame(64, 32), 4), make_ladder([1, 2]), 2, 20, "t{tile}/r{rep}/s{seg}.m4s")
        assert segment_url(m, 3, 2, 7) == "t3/r2/s7.m4s"

    def test_segment_past_end(self):
        m = minimal()
        assert m.n_segments == 2
        with pytest.raises(DomainError):
            segment_url(m, 1, 1, 2)

    def test_unknown_ids(self):
        with pytest.raises(DomainError):
            segment_url(minimal(), 2, 1, 0)
        with pytest.raises(DomainError):
            segment_url(minimal(), 1, 9, 0)

    def test_template_without_seg(self):
        with pytest.raises(ValidationError, match="seg"):
            Manifest(single_tile_layout(ErpFrame(64, 32)), make_ladder([1]), 2, 4, "t{tile}/r{rep}")


def test_segment_count_and_last_length():
    m = Manifest(single_tile_layout(ErpFrame(64, 32)), make_ladder([1]), 2, 5)
    assert m.n_segments == 3
    assert m.segment_length(2) == Fraction(1)


def test_reference_ladder_sums_tiles():
    m = tiled_manifest(K8, 10)
    assert [r.bitrate for r in m.reference_ladder()] == list(DEFAULT_LADDER_BPS)


@st.composite
def manifests(draw):
    height = draw(st.sampled_from([32, 64, 128]))
    frame = ErpFrame(2 * height, height)
    n_eq = draw(st.sampled_from([d for d in range(1, 17) if frame.width % d == 0]))
    layout = build_layout(frame, n_eq + 2)
    rates = draw(st.lists(st.integers(1, 10**8), min_size=1, max_size=15, unique=True))
    seg = Fraction(draw(st.integers(1, 8)), draw(st.integers(1, 4)))
    media = seg * draw(st.integers(1, 50)) - Fraction(draw(st.integers(0, 3)), 7) * 0
    return Manifest(layout, make_ladder(sorted(rates)), seg, media)


@settings(max_examples=60, deadline=None)
@given(manifests())
def test_round_trip_property(m):
    text = emit_manifest(m)
    assert parse_manifest(text) == m
    assert emit_manifest(parse_manifest(text)) == text
