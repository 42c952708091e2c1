import sys
import textwrap

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from veridoc.errors import OcrEngineError, ParameterError
from veridoc.imgproc import Box, save_png
from veridoc.matching import MatchResult
from veridoc.ocr import (
    ALPHABET,
    ExternalOcrEngine,
    FixtureOcrEngine,
    GlyphAtlas,
    OcrEngine,
    OcrSegment,
    TextRegion,
    default_atlas,
    draw_text,
    fixture_extract,
    format_segment_line,
    localize_text_regions,
    normalize_text,
    parse_segment_line,
    render_text,
)
from veridoc.templates import TemplateRecord, TextRegionSpec

from .helpers import char_accuracy, flip_pixels

GLYPHS = ALPHABET.strip()
line_text = st.text(alphabet=ALPHABET, min_size=1, max_size=24).map(str.strip).filter(bool)


def read(img):
    (seg,) = fixture_extract(None, img, [TextRegion("f", Box(0, 0, img.shape[1], img.shape[0]))])
    return seg


# -- atlas -----------------------------------------------------------------------------

def test_atlas_cells_uniform_and_unique():
    atlas = default_atlas()
    assert set(GLYPHS) == set("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,-:/")
    shapes = {g.shape for g in atlas.glyphs.values()}
    assert shapes == {(12, 8)}
    bitmaps = {g.tobytes() for g in atlas.glyphs.values()}
    assert len(bitmaps) == len(atlas.glyphs)


def test_atlas_rejects_bad_glyphs():
    with pytest.raises(ParameterError):
        GlyphAtlas({"A": np.zeros((3, 3), bool)})
    with pytest.raises(ParameterError):
        default_atlas().glyph("a")


# -- fixture engine --------------------------------------------------------------------

def test_reads_john_doe():
    seg = read(render_text("JOHN DOE", margin=4))
    assert seg.text == "JOHN DOE" and seg.confidence >= 0.99


def test_blank_region():
    seg = read(np.full((20, 60), 255, np.uint8))
    assert (seg.text, seg.confidence) == ("", 1.0)


def test_empty_region_box():
    (seg,) = fixture_extract(None, np.full((10, 10), 255, np.uint8), [TextRegion("f", Box(3, 3, 0, 0))])
    assert (seg.text, seg.confidence) == ("", 1.0)


def test_salt_and_pepper_noise():
    img = flip_pixels(render_text("JOHN DOE", margin=4), 0.02, seed=1)
    seg = read(img)
    assert seg.text == "JOHN DOE"
    assert 0.7 < seg.confidence < 1.0


@settings(max_examples=60, deadline=None)
@given(line_text, st.integers(0, 9), st.integers(0, 9))
def test_roundtrip_any_offset(text, mx, my):
    img = np.full((12 + 2 * my + 3, 8 * len(text) + 2 * mx + 5), 255, np.uint8)
    draw_text(img, mx, my, text)
    seg = read(img)
    assert seg.text == text
    assert seg.confidence >= 0.99


def test_reads_gray_ink_on_gray_background():
    seg = read(render_text("IP 372758", margin=5, ink=70, background=210))
    assert seg.text == "IP 372758"


def test_unrecognized_cell_gives_question_mark():
    img = render_text("AB", margin=4)
    img[6:14, 14:18] = 0  # replace B with a solid slab
    seg = read(img)
    assert seg.text[0] == "A"
    assert seg.text[1] in "?" + GLYPHS


def test_confidence_monotone_under_noise():
    text = "HYDERABAD 372758"
    base = render_text(text, margin=4)
    confs = [read(flip_pixels(base, p, seed=3)).confidence for p in (0.0, 0.01, 0.02, 0.04, 0.06)]
    for a, b in zip(confs, confs[1:]):
        assert b <= a + 0.02


def test_fixture_engine_is_deterministic():
    eng = FixtureOcrEngine()
    assert isinstance(eng, OcrEngine)
    assert eng.metadata["deterministic"] is True
    img = flip_pixels(render_text("MARK 577", margin=3), 0.03, seed=5)
    regions = [TextRegion("a", Box(0, 0, img.shape[1], img.shape[0]))]
    assert eng.extract(img, regions) == eng.extract(img.copy(), regions)


def test_segment_confidence_range():
    with pytest.raises(ParameterError):
        OcrSegment(TextRegion("x", Box(0, 0, 1, 1)), "a", 1.5)


def test_char_accuracy_helper():
    assert char_accuracy("ABC", "ABC") == 1.0
    assert char_accuracy("ABC", "ABD") == pytest.approx(2 / 3)
    assert char_accuracy("ABC", "AC") == pytest.approx(2 / 3)


# -- localization ----------------------------------------------------------------------

@pytest.fixture
def annotated(tmp_path):
    save_png(tmp_path / "t.png", np.zeros((100, 200), np.uint8))
    regions = (TextRegionSpec("Name", Box(10, 20, 50, 12)), TextRegionSpec("Id", Box(150, 80, 50, 20)))
    return TemplateRecord("t", "t.png", "label", regions, base_dir=tmp_path)


def test_localize_identity(annotated):
    regions = localize_text_regions(np.zeros((100, 200)), annotated, MatchResult("t", 0.9, (0, 0), True))
    assert [(r.field_name, r.box) for r in regions] == [("Name", Box(10, 20, 50, 12)), ("Id", Box(150, 80, 50, 20))]


def test_localize_double_size(annotated):
    regions = localize_text_regions(np.zeros((200, 400)), annotated, MatchResult("t", 0.9, (0, 0), True))
    assert [r.box for r in regions] == [Box(20, 40, 100, 24), Box(300, 160, 100, 40)]


def test_localize_offset_clips(annotated):
    regions = localize_text_regions(np.zeros((100, 200)), annotated, MatchResult("t", 0.9, (10, 5), True))
    assert regions[1].box == Box(160, 85, 40, 15)


def test_localize_fallback(tmp_path):
    save_png(tmp_path / "u.png", np.zeros((10, 10), np.uint8))
    rec = TemplateRecord("u", "u.png", "label", base_dir=tmp_path)
    (region,) = localize_text_regions(np.zeros((30, 40)), rec, MatchResult("u", 0.7, (0, 0), True))
    assert region == TextRegion("page", Box(0, 0, 40, 30))


def test_localize_requires_match(annotated):
    with pytest.raises(ParameterError):
        localize_text_regions(np.zeros((100, 200)), annotated, MatchResult("t", 0.3, (0, 0), False))


# -- normalization ----------------------------------------------------------------------

@pytest.mark.parametrize("parts,expected", [
    (["JOHN DOE", "HYDERABAD"], "john doe hyderabad"),
    ([], ""),
    (["A  B", " C"], "a b c"),
])
def test_normalize(parts, expected):
    assert normalize_text(parts) == expected


def test_normalize_segments():
    segs = [OcrSegment(TextRegion("a", Box(0, 0, 1, 1)), "JOHN\tDOE ", 1.0)]
    assert normalize_text(segs) == "john doe"


# -- external adapter -------------------------------------------------------------------

def test_wire_format_roundtrip():
    region = TextRegion("Name", Box(100, 50, 80, 20))
    seg = parse_segment_line("2 3 40 12 0.875 JOHN  DOE", region)
    assert seg.region.box == Box(102, 53, 40, 12)
    assert seg.text == "JOHN  DOE" and seg.confidence == 0.875
    assert parse_segment_line(format_segment_line(seg, (100, 50)), region) == seg


@pytest.mark.parametrize("line", ["1 2 3", "a b c d 0.5 x", "1 2 3 4 1.7 x"])
def test_wire_format_errors(line):
    with pytest.raises(OcrEngineError):
        parse_segment_line(line, TextRegion("x", Box(0, 0, 5, 5)))


def fake_engine_script(tmp_path, body):
    script = tmp_path / "fake_ocr.py"
    script.write_text(textwrap.dedent(body))
    return [sys.executable, str(script)]


def test_external_engine_runs_command(tmp_path):
    cmd = fake_engine_script(tmp_path, """
        import sys
        from PIL import Image
        w, h = Image.open(sys.argv[1]).size
        print(f"0 0 {w} {h} 0.9 SIZE {w}x{h}")
    """)
    eng = ExternalOcrEngine(cmd)
    assert eng.metadata["deterministic"] is False
    img = np.full((60, 80), 255, np.uint8)
    segs = eng.extract(img, [TextRegion("a", Box(5, 6, 30, 20)), TextRegion("b", Box(0, 0, 10, 10))])
    assert [(s.region.field_name, s.region.box, s.text) for s in segs] == [
        ("a", Box(5, 6, 30, 20), "SIZE 30x20"), ("b", Box(0, 0, 10, 10), "SIZE 10x10")]


def test_external_engine_failure(tmp_path):
    cmd = fake_engine_script(tmp_path, "import sys; sys.exit(3)\n")
    with pytest.raises(OcrEngineError, match="exited with 3"):
        ExternalOcrEngine(cmd).extract(np.zeros((5, 5), np.uint8), [TextRegion("a", Box(0, 0, 5, 5))])


def test_external_engine_string_command(tmp_path):
    cmd = fake_engine_script(tmp_path, "print('0 0 1 1 1.0 OK')\n")
    eng = ExternalOcrEngine(" ".join(cmd))
    (seg,) = eng.extract(np.zeros((5, 5), np.uint8), [TextRegion("a", Box(0, 0, 5, 5))])
    assert seg.text == "OK"
    with pytest.raises(OcrEngineError):
        ExternalOcrEngine("")
