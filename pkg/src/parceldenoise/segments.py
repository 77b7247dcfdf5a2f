"""Segment-map providers.

A SegmentMap can come from three places: scored run-length-encoded masks
produced by an external segmentation model, connected components of a
label raster, or clustering assignments (see the clustering module).
This module owns the first two plus the RLE interchange format.

MaskSet JSON contract (what the external adapter must emit):

    {"width": n, "height": n, "masks": [{"score": f, "counts": [ints]}]}

Runs are row-major and alternate 0-pixels / 1-pixels starting with the
0-run; the first count may be zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import FormatError
from .grids import LABEL_NODATA, LabelRaster, SegmentMap


@dataclass(frozen=True)
class ScoredMask:
    score: float
    counts: tuple[int, ...]


@dataclass(frozen=True)
class MaskSet:
    """Ordered collection of scored RLE masks over one pixel grid."""

    width: int
    height: int
    masks: tuple[ScoredMask, ...]

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("width and height must be positive")
        area = self.width * self.height
        for i, m in enumerate(self.masks):
            if not (math.isfinite(m.score) and 0.0 <= m.score <= 1.0):
                raise ValueError(f"mask {i}: score {m.score} outside [0, 1]")
            if any(c < 0 for c in m.counts):
                raise ValueError(f"mask {i}: negative run count")
            if sum(m.counts) != area:
                raise ValueError(
                    f"mask {i}: runs sum to {sum(m.counts)}, grid has {area} pixels"
                )

    def to_json(self) -> str:
        doc = {
            "width": self.width,
            "height": self.height,
            "masks": [{"score": m.score, "counts": list(m.counts)} for m in self.masks],
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MaskSet":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"mask set is not valid JSON: {exc}") from exc
        try:
            masks = tuple(
                ScoredMask(float(m["score"]), tuple(int(c) for c in m["counts"]))
                for m in doc["masks"]
            )
            width, height = int(doc["width"]), int(doc["height"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"mask set JSON missing or malformed field: {exc}") from exc
        try:
            return cls(width, height, masks)
        except ValueError as exc:
            raise FormatError(str(exc)) from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "MaskSet":
        return cls.from_json(Path(path).read_text())


def decode_rle(counts, width: int, height: int) -> np.ndarray:
    """Expand alternating 0/1 run counts into a boolean (height, width) grid.

    The first count is the leading 0-run and may be zero.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if counts.size and counts.min() < 0:
        raise FormatError("negative run count")
    total = int(counts.sum())
    if total != width * height:
        raise FormatError(f"runs sum to {total}, grid has {width * height} pixels")
    flat = np.zeros(total, dtype=bool)
    edges = np.concatenate([[0], np.cumsum(counts)])
    for i in range(1, len(counts), 2):
        flat[edges[i]:edges[i + 1]] = True
    return flat.reshape(height, width)


def encode_rle(mask: np.ndarray) -> list[int]:
    """Inverse of decode_rle: boolean grid to alternating run counts."""
    flat = np.asarray(mask, dtype=bool).ravel()
    if flat.size == 0:
        return []
    changes = np.flatnonzero(np.diff(flat)) + 1
    bounds = np.concatenate([[0], changes, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return [int(r) for r in runs]


def masks_to_segment_map(ms: MaskSet) -> SegmentMap:
    """Assign each covered pixel to its highest-scoring covering mask.

    Ties go to the lower mask index.  Output ids are dense 1..K in
    descending-score order; masks that win no pixel get no id, and
    uncovered pixels stay background (0).
    """
    seg = np.zeros((ms.height, ms.width), dtype=np.uint32)
    order = sorted(range(len(ms.masks)), key=lambda i: (-ms.masks[i].score, i))
    next_id = 0
    unclaimed = np.ones((ms.height, ms.width), dtype=bool)
    for i in order:
        m = decode_rle(ms.masks[i].counts, ms.width, ms.height)
        claim = m & unclaimed
        if claim.any():
            next_id += 1
            seg[claim] = next_id
            unclaimed &= ~claim
    return SegmentMap(seg)


def mask_set_from_segments(segs: SegmentMap, score: float = 1.0) -> MaskSet:
    """One RLE mask per segment id, all with the given score.

    Masks follow ascending segment-id order.  Background is not masked.
    """
    masks = [
        ScoredMask(score, tuple(encode_rle(segs.segment_ids == sid)))
        for sid in segs.ids()
    ]
    return MaskSet(segs.width, segs.height, tuple(masks))


_STRUCT_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCT_8 = np.ones((3, 3), dtype=bool)


def label_components(
    values: np.ndarray, valid: np.ndarray, connectivity: int = 4
) -> np.ndarray:
    """Connected components of equal values over the valid mask.

    Returns a uint32 grid where invalid pixels are 0 and component ids
    are assigned in first-encounter raster-scan order (row-major), so
    the result is deterministic.
    """
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    structure = _STRUCT_4 if connectivity == 4 else _STRUCT_8
    out = np.zeros(values.shape, dtype=np.uint32)
    offset = 0
    for val in np.unique(values[valid]) if valid.any() else []:
        comp, n = ndimage.label((values == val) & valid, structure=structure)
        where = comp > 0
        out[where] = comp[where] + offset
        offset += n
    return _renumber_scan_order(out)


def _renumber_scan_order(comp: np.ndarray) -> np.ndarray:
    flat = comp.ravel()
    ids, first = np.unique(flat, return_index=True)
    keep = ids != 0
    ids, first = ids[keep], first[keep]
    rank = np.argsort(first, kind="stable")
    lut = np.zeros(int(ids.max()) + 1 if ids.size else 1, dtype=np.uint32)
    lut[ids[rank]] = np.arange(1, ids.size + 1, dtype=np.uint32)
    return lut[comp]


def connected_components(labels: LabelRaster, connectivity: int = 4) -> SegmentMap:
    """Maximal connected regions of equal label become segments.

    NODATA pixels stay background.  Connectivity 4 is the conservative
    default; 8 joins diagonals.
    """
    valid = labels.labels != LABEL_NODATA
    return SegmentMap(label_components(labels.labels, valid, connectivity))
