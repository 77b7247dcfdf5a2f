"""Grid data types and their bit-exact on-disk formats.

Three pixel-grid types cover the whole pipeline: multi-band float imagery,
per-pixel class labels, and per-pixel segment ids.  All of them serialize
to the little-endian PDGRID01 container:

    bytes 0-7   magic "PDGRID01" (ASCII)
    bytes 8-23  u32 LE width, height, bands, dtype code
    payload     band-sequential, row-major, little-endian values

dtype codes: 1 = f32 (ImageRaster), 2 = u16 (LabelRaster),
3 = u32 (SegmentMap).  Label and segment grids are single-band.

NODATA conventions: float imagery uses IEEE-754 quiet NaN (a pixel is
NODATA iff band 0 is NaN, and then every band is NaN); label grids use
the sentinel 65535.  Class names and colors live outside the container,
in a ClassMap JSON sidecar.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    CorruptionError,
    FormatError,
    GridTypeError,
    MappingError,
)

MAGIC = b"PDGRID01"
HEADER = struct.Struct("<8s4I")

DTYPE_F32 = 1
DTYPE_U16 = 2
DTYPE_U32 = 3

LABEL_NODATA = 65535


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    if out is arr:
        out = arr.copy()
    out.flags.writeable = False
    return out


@dataclass(eq=False)
class ImageRaster:
    """Multi-band float32 pixel grid, shape (bands, height, width).

    A pixel is NODATA iff band 0 is NaN; the constructor enforces that
    NaN-ness is then consistent across every band of that pixel.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        if v.ndim != 3:
            raise ValueError(f"expected (bands, height, width) array, got ndim={v.ndim}")
        bands, height, width = v.shape
        if width == 0 or height == 0 or bands == 0:
            raise ValueError("width, height and bands must all be positive")
        nan = np.isnan(v)
        if np.any(nan.any(axis=0) != nan.all(axis=0)):
            raise ValueError("NODATA pixels must be NaN in every band")
        self.values = _freeze(v)

    @property
    def width(self) -> int:
        return self.values.shape[2]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def bands(self) -> int:
        return self.values.shape[0]

    @property
    def valid_mask(self) -> np.ndarray:
        """Boolean (height, width) mask of non-NODATA pixels."""
        return ~np.isnan(self.values[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, ImageRaster):
            return NotImplemented
        if self.values.shape != other.values.shape:
            return False
        a, b = self.values, other.values
        return bool(np.all((a == b) | (np.isnan(a) & np.isnan(b))))


@dataclass(eq=False)
class LabelRaster:
    """Per-pixel uint16 class ids plus the class-id -> name mapping.

    65535 is the NODATA sentinel and never a class.  unsure_id marks the
    designated ambiguous class; it must be in class_map even when no
    pixel currently carries it.
    """

    labels: np.ndarray
    class_map: dict[int, str]
    unsure_id: int

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=np.uint16)
        if lab.ndim != 2:
            raise ValueError(f"expected (height, width) array, got ndim={lab.ndim}")
        if lab.shape[0] == 0 or lab.shape[1] == 0:
            raise ValueError("width and height must be positive")
        if self.unsure_id == LABEL_NODATA:
            raise ValueError("unsure_id must not equal the NODATA sentinel")
        if self.unsure_id not in self.class_map:
            raise ValueError(f"unsure_id {self.unsure_id} missing from class_map")
        if any(not (0 <= cid < LABEL_NODATA) for cid in self.class_map):
            raise ValueError("class ids must lie in [0, 65534]")
        present = np.unique(lab)
        present = present[present != LABEL_NODATA]
        missing = [int(c) for c in present if int(c) not in self.class_map]
        if missing:
            raise ValueError(f"labels {missing} missing from class_map")
        self.labels = _freeze(lab)
        self.class_map = dict(self.class_map)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def valid_mask(self) -> np.ndarray:
        return self.labels != LABEL_NODATA

    def with_labels(self, labels: np.ndarray) -> "LabelRaster":
        """Same class map and unsure id, different pixel values."""
        return LabelRaster(labels, self.class_map, self.unsure_id)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelRaster):
            return NotImplemented
        return (
            self.labels.shape == other.labels.shape
            and bool(np.array_equal(self.labels, other.labels))
            and self.class_map == other.class_map
            and self.unsure_id == other.unsure_id
        )


@dataclass(eq=False)
class SegmentMap:
    """Per-pixel uint32 segment ids; id 0 is unsegmented background."""

    segment_ids: np.ndarray

    def __post_init__(self):
        seg = np.asarray(self.segment_ids, dtype=np.uint32)
        if seg.ndim != 2:
            raise ValueError(f"expected (height, width) array, got ndim={seg.ndim}")
        if seg.shape[0] == 0 or seg.shape[1] == 0:
            raise ValueError("width and height must be positive")
        self.segment_ids = _freeze(seg)

    @property
    def width(self) -> int:
        return self.segment_ids.shape[1]

    @property
    def height(self) -> int:
        return self.segment_ids.shape[0]

    def ids(self) -> np.ndarray:
        """Sorted array of segment ids present, excluding background."""
        u = np.unique(self.segment_ids)
        return u[u != 0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SegmentMap):
            return NotImplemented
        return self.segment_ids.shape == other.segment_ids.shape and bool(
            np.array_equal(self.segment_ids, other.segment_ids)
        )


Grid = ImageRaster | LabelRaster | SegmentMap

_KIND_TO_CODE = {ImageRaster: DTYPE_F32, LabelRaster: DTYPE_U16, SegmentMap: DTYPE_U32}


@dataclass(frozen=True)
class ClassEntry:
    id: int
    name: str
    color: tuple[int, int, int]


@dataclass(frozen=True)
class ClassMap:
    """Class-id list with display colors and the unsure-class designation.

    JSON form:
        {"unsure_id": n, "classes": [{"id": n, "name": s, "color": [r,g,b]}]}
    """

    classes: tuple[ClassEntry, ...]
    unsure_id: int

    def __post_init__(self):
        ids = [c.id for c in self.classes]
        if len(set(ids)) != len(ids):
            raise ValueError("class ids must be unique")
        colors = [tuple(c.color) for c in self.classes]
        if len(set(colors)) != len(colors):
            raise ValueError("class colors must be unique")
        if self.unsure_id not in set(ids):
            raise ValueError(f"unsure_id {self.unsure_id} not among class ids")
        for c in self.classes:
            if not (0 <= c.id < LABEL_NODATA):
                raise ValueError(f"class id {c.id} outside [0, 65534]")
            if len(c.color) != 3 or any(not (0 <= v <= 255) for v in c.color):
                raise ValueError(f"bad RGB color for class {c.id}")

    @property
    def mapping(self) -> dict[int, str]:
        return {c.id: c.name for c in self.classes}

    def color_of(self, class_id: int) -> tuple[int, int, int]:
        for c in self.classes:
            if c.id == class_id:
                return c.color
        raise MappingError(f"class id {class_id} not in class map")

    def to_json(self) -> str:
        doc = {
            "unsure_id": self.unsure_id,
            "classes": [
                {"id": c.id, "name": c.name, "color": list(c.color)} for c in self.classes
            ],
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ClassMap":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"class map is not valid JSON: {exc}") from exc
        try:
            classes = tuple(
                ClassEntry(int(c["id"]), str(c["name"]), tuple(int(v) for v in c["color"]))
                for c in doc["classes"]
            )
            unsure = int(doc["unsure_id"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"class map JSON missing or malformed field: {exc}") from exc
        try:
            return cls(classes, unsure)
        except ValueError as exc:
            raise FormatError(str(exc)) from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "ClassMap":
        return cls.from_json(Path(path).read_text())


def write_grid(grid: Grid, path: str | Path) -> None:
    """Write a grid as a PDGRID01 container.

    Byte output is a pure function of the grid content, so identical
    grids always produce identical files.
    """
    if isinstance(grid, ImageRaster):
        code, payload = DTYPE_F32, grid.values
        bands = grid.bands
    elif isinstance(grid, LabelRaster):
        code, payload = DTYPE_U16, grid.labels
        bands = 1
    elif isinstance(grid, SegmentMap):
        code, payload = DTYPE_U32, grid.segment_ids
        bands = 1
    else:
        raise TypeError(f"not a grid type: {type(grid).__name__}")
    header = HEADER.pack(MAGIC, grid.width, grid.height, bands, code)
    data = payload.astype(payload.dtype.newbyteorder("<"), copy=False).tobytes(order="C")
    Path(path).write_bytes(header + data)


def read_grid(
    path: str | Path,
    expect: type | None = None,
    class_map: ClassMap | None = None,
) -> Grid:
    """Read a PDGRID01 container back into its typed grid.

    The container stores no class semantics, so a LabelRaster is given
    the supplied ClassMap when one is passed; otherwise a synthetic map
    ("class_<id>" per observed id plus a fresh "unsure" id) is attached.
    `expect` narrows the accepted grid kind and raises GridTypeError on
    a mismatch.
    """
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size or raw[:8] != MAGIC:
        raise FormatError(f"{path}: not a PDGRID01 file")
    _, width, height, bands, code = HEADER.unpack_from(raw)
    if code not in (DTYPE_F32, DTYPE_U16, DTYPE_U32):
        raise FormatError(f"{path}: unknown dtype code {code}")
    if width == 0 or height == 0 or bands == 0:
        raise FormatError(f"{path}: zero-sized grid in header")
    if code in (DTYPE_U16, DTYPE_U32) and bands != 1:
        raise FormatError(f"{path}: label/segment grids must be single-band, header says {bands}")
    dtype = {DTYPE_F32: "<f4", DTYPE_U16: "<u2", DTYPE_U32: "<u4"}[code]
    expected = width * height * bands * np.dtype(dtype).itemsize
    payload = raw[HEADER.size:]
    if len(payload) != expected:
        raise CorruptionError(
            f"{path}: payload holds {len(payload)} bytes, header implies {expected}"
        )
    values = np.frombuffer(payload, dtype=dtype)

    if code == DTYPE_F32:
        grid: Grid = ImageRaster(values.reshape(bands, height, width))
    elif code == DTYPE_U16:
        arr = values.reshape(height, width)
        if class_map is not None:
            grid = LabelRaster(arr, class_map.mapping, class_map.unsure_id)
        else:
            grid = LabelRaster(arr, *_synthesize_class_map(arr))
    else:
        grid = SegmentMap(values.reshape(height, width))

    if expect is not None and not isinstance(grid, expect):
        raise GridTypeError(
            f"{path}: holds {type(grid).__name__}, caller expected {expect.__name__}"
        )
    return grid


def _synthesize_class_map(labels: np.ndarray) -> tuple[dict[int, str], int]:
    present = np.unique(labels)
    present = {int(c) for c in present if c != LABEL_NODATA}
    mapping = {cid: f"class_{cid}" for cid in sorted(present)}
    unsure = 0
    while unsure in present:
        unsure += 1
    mapping[unsure] = "unsure"
    return mapping, unsure


def export_color_image(labels: LabelRaster, class_map: ClassMap, path: str | Path) -> None:
    """Render a label raster to a binary PPM (P6, maxval 255).

    Each class id gets its ClassMap color; NODATA pixels are black.
    """
    colors = {c.id: c.color for c in class_map.classes}
    present = np.unique(labels.labels)
    missing = [int(c) for c in present if c != LABEL_NODATA and int(c) not in colors]
    if missing:
        raise MappingError(f"labels {missing} have no color in the class map")

    lut = np.zeros((LABEL_NODATA + 1, 3), dtype=np.uint8)
    for cid, rgb in colors.items():
        lut[cid] = rgb
    lut[LABEL_NODATA] = (0, 0, 0)
    pixels = lut[labels.labels]

    header = f"P6\n{labels.width} {labels.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + pixels.tobytes(order="C"))
