"""Raster container, class map, and render tests."""

import struct

import numpy as np
import pytest

from parceldenoise import (
    LABEL_NODATA,
    ClassEntry,
    ClassMap,
    CorruptionError,
    FormatError,
    GridTypeError,
    ImageRaster,
    LabelRaster,
    MappingError,
    SegmentMap,
    export_color_image,
    read_grid,
    write_grid,
)

CMAP = {1: "a", 2: "b", 7: "unsure"}


def _label(arr):
    return LabelRaster(np.asarray(arr, dtype=np.uint16), CMAP, 7)


class TestImageRaster:
    def test_shape_and_accessors(self):
        img = ImageRaster(np.zeros((2, 3, 4), dtype=np.float32))
        assert (img.bands, img.height, img.width) == (2, 3, 4)
        assert img.valid_mask.all()

    def test_rejects_bad_dims(self):
        with pytest.raises(ValueError):
            ImageRaster(np.zeros((3, 4), dtype=np.float32))
        with pytest.raises(ValueError):
            ImageRaster(np.zeros((1, 0, 4), dtype=np.float32))

    def test_nodata_must_cover_all_bands(self):
        vals = np.ones((2, 2, 2), dtype=np.float32)
        vals[0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            ImageRaster(vals)
        vals[1, 0, 0] = np.nan
        img = ImageRaster(vals)
        assert not img.valid_mask[0, 0]
        assert img.valid_mask.sum() == 3

    def test_values_frozen(self):
        img = ImageRaster(np.ones((1, 2, 2), dtype=np.float32))
        with pytest.raises(ValueError):
            img.values[0, 0, 0] = 5.0


class TestLabelRaster:
    def test_valid_mask_and_unsure(self):
        r = _label([[1, 2], [7, LABEL_NODATA]])
        assert r.valid_mask.tolist() == [[True, True], [True, False]]
        assert r.unsure_id == 7

    def test_rejects_label_missing_from_map(self):
        with pytest.raises(ValueError):
            _label([[1, 3]])

    def test_rejects_unsure_outside_map(self):
        with pytest.raises(ValueError):
            LabelRaster(np.zeros((1, 1), dtype=np.uint16) + 1, {1: "a"}, 9)

    def test_rejects_nodata_as_unsure(self):
        with pytest.raises(ValueError):
            LabelRaster(np.ones((1, 1), dtype=np.uint16), {1: "a", LABEL_NODATA: "x"}, LABEL_NODATA)

    def test_with_labels_keeps_map(self):
        r = _label([[1, 2]])
        r2 = r.with_labels(np.array([[2, 2]], dtype=np.uint16))
        assert r2.class_map == r.class_map and r2.unsure_id == r.unsure_id


class TestSegmentMap:
    def test_ids_sorted_nonzero(self):
        segs = SegmentMap(np.array([[3, 0], [1, 3]], dtype=np.uint32))
        assert segs.ids().tolist() == [1, 3]

    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            SegmentMap(np.zeros(4, dtype=np.uint32))


class TestContainerRoundTrip:
    def test_image_round_trip_with_nodata(self, tmp_path):
        vals = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
        vals[:, 1, 1] = np.nan
        img = ImageRaster(vals)
        p = tmp_path / "img.pdg"
        write_grid(img, p)
        back = read_grid(p)
        assert isinstance(back, ImageRaster)
        assert back == img

    def test_label_round_trip(self, tmp_path):
        r = _label([[1, 2, 7], [LABEL_NODATA, 1, 1]])
        p = tmp_path / "lab.pdg"
        write_grid(r, p)
        back = read_grid(p, expect=LabelRaster)
        assert np.array_equal(back.labels, r.labels)

    def test_segment_round_trip(self, tmp_path):
        segs = SegmentMap(np.array([[1, 2], [0, 70000]], dtype=np.uint32))
        p = tmp_path / "seg.pdg"
        write_grid(segs, p)
        back = read_grid(p, expect=SegmentMap)
        assert np.array_equal(back.segment_ids, segs.segment_ids)

    def test_write_is_deterministic(self, tmp_path):
        r = _label([[1, 2], [2, 1]])
        write_grid(r, tmp_path / "a.pdg")
        write_grid(r, tmp_path / "b.pdg")
        assert (tmp_path / "a.pdg").read_bytes() == (tmp_path / "b.pdg").read_bytes()

    def test_header_layout_golden(self, tmp_path):
        # magic, u32 width/height/bands/dtype, little-endian payload
        r = _label([[1, LABEL_NODATA]])
        p = tmp_path / "g.pdg"
        write_grid(r, p)
        raw = p.read_bytes()
        assert raw[:8] == b"PDGRID01"
        assert struct.unpack("<4I", raw[8:24]) == (2, 1, 1, 2)
        assert raw[24:] == struct.pack("<2H", 1, LABEL_NODATA)

    def test_reader_applies_class_map(self, tmp_path):
        cm = ClassMap(
            (ClassEntry(1, "x", (10, 0, 0)), ClassEntry(7, "u", (0, 10, 0))), unsure_id=7
        )
        r = LabelRaster(np.array([[1, 7]], dtype=np.uint16), cm.mapping, 7)
        p = tmp_path / "lab.pdg"
        write_grid(r, p)
        back = read_grid(p, class_map=cm)
        assert back.class_map == {1: "x", 7: "u"}
        assert back.unsure_id == 7

    def test_reader_synthesizes_class_map(self, tmp_path):
        r = _label([[1, 2]])
        p = tmp_path / "lab.pdg"
        write_grid(r, p)
        back = read_grid(p)
        assert set(back.class_map) >= {1, 2}
        assert back.unsure_id not in (1, 2)


class TestContainerErrors:
    def test_bad_magic(self, tmp_path):
        p = tmp_path / "x.pdg"
        p.write_bytes(b"NOTAGRID" + b"\0" * 32)
        with pytest.raises(FormatError):
            read_grid(p)

    def test_truncated_payload(self, tmp_path):
        r = _label([[1, 1], [1, 1]])
        p = tmp_path / "x.pdg"
        write_grid(r, p)
        p.write_bytes(p.read_bytes()[:-2])
        with pytest.raises(CorruptionError):
            read_grid(p)

    def test_unknown_dtype_code(self, tmp_path):
        p = tmp_path / "x.pdg"
        p.write_bytes(b"PDGRID01" + struct.pack("<4I", 1, 1, 1, 9) + b"\0\0")
        with pytest.raises(FormatError):
            read_grid(p)

    def test_zero_dims_rejected(self, tmp_path):
        p = tmp_path / "x.pdg"
        p.write_bytes(b"PDGRID01" + struct.pack("<4I", 0, 1, 1, 2))
        with pytest.raises(FormatError):
            read_grid(p)

    def test_multiband_labels_rejected(self, tmp_path):
        p = tmp_path / "x.pdg"
        p.write_bytes(b"PDGRID01" + struct.pack("<4I", 1, 1, 2, 2) + b"\0" * 4)
        with pytest.raises(FormatError):
            read_grid(p)

    def test_expect_mismatch(self, tmp_path):
        r = _label([[1]])
        p = tmp_path / "x.pdg"
        write_grid(r, p)
        with pytest.raises(GridTypeError):
            read_grid(p, expect=SegmentMap)


class TestClassMap:
    def _map(self):
        return ClassMap(
            (
                ClassEntry(1, "cropland", (230, 159, 0)),
                ClassEntry(2, "forest", (0, 158, 115)),
                ClassEntry(6, "mosaic", (128, 128, 128)),
            ),
            unsure_id=6,
        )

    def test_json_round_trip(self):
        cm = self._map()
        again = ClassMap.from_json(cm.to_json())
        assert again == cm

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            ClassMap(
                (ClassEntry(1, "a", (1, 0, 0)), ClassEntry(1, "b", (2, 0, 0))), unsure_id=1
            )

    def test_duplicate_colors_rejected(self):
        with pytest.raises(ValueError):
            ClassMap(
                (ClassEntry(1, "a", (1, 0, 0)), ClassEntry(2, "b", (1, 0, 0))), unsure_id=1
            )

    def test_unsure_must_exist(self):
        with pytest.raises(ValueError):
            ClassMap((ClassEntry(1, "a", (1, 0, 0)),), unsure_id=2)

    def test_bad_json_is_format_error(self):
        with pytest.raises(FormatError):
            ClassMap.from_json("{nope")
        with pytest.raises(FormatError):
            ClassMap.from_json('{"classes": []}')

    def test_color_lookup(self):
        cm = self._map()
        assert cm.color_of(2) == (0, 158, 115)
        with pytest.raises(MappingError):
            cm.color_of(99)


class TestColorExport:
    def test_ppm_bytes_golden(self, tmp_path):
        cm = ClassMap(
            (ClassEntry(1, "a", (255, 0, 0)), ClassEntry(2, "u", (0, 0, 255))), unsure_id=2
        )
        r = LabelRaster(
            np.array([[1, 2], [LABEL_NODATA, 1]], dtype=np.uint16), cm.mapping, 2
        )
        p = tmp_path / "out.ppm"
        export_color_image(r, cm, p)
        expected = b"P6\n2 2\n255\n" + bytes(
            [255, 0, 0, 0, 0, 255, 0, 0, 0, 255, 0, 0]
        )
        assert p.read_bytes() == expected

    def test_missing_color_rejected(self, tmp_path):
        cm = ClassMap((ClassEntry(1, "a", (255, 0, 0)),), unsure_id=1)
        r = _label([[1, 2]])
        with pytest.raises(MappingError):
            export_color_image(r, cm, tmp_path / "out.ppm")
