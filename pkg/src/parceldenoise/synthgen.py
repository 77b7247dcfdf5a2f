"""Synthetic parcel scenes with ground truth and controlled label noise.

Scenes are Voronoi tessellations of seeded random sites: each cell is a
parcel, each parcel gets a class, imagery is drawn per pixel from the
class's per-band Gaussian signature, and the noisy raster corrupts the
clean one with label flips, unsure pixels, and optional boundary
jitter.  Everything is driven by one PCG64 stream in a fixed draw
order, so a spec (including its seed) pins every output byte.

Draw order: parcel sites, class permutation, extra parcel classes,
imagery normals, per-round jitter (direction grid then gate grid),
noise uniforms, flip offsets.  Changing this order is a breaking
change; golden tests depend on it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError
from .grids import ClassEntry, ClassMap, ImageRaster, LabelRaster, SegmentMap

# first few classes get land-cover names, the rest are numbered
_CLASS_NAMES = ("cropland", "forest", "barren_builtup", "waterbody", "pasture")
_BASE_COLORS = (
    (230, 159, 0),
    (0, 158, 115),
    (86, 180, 233),
    (0, 114, 178),
    (240, 228, 66),
    (213, 94, 0),
    (204, 121, 167),
    (148, 103, 189),
    (140, 86, 75),
    (23, 190, 207),
)
_UNSURE_NAME = "mosaic"
_UNSURE_COLOR = (128, 128, 128)

_ROW_CHUNK = 64


@dataclass(frozen=True)
class SceneSpec:
    """Everything that defines a scene, including its randomness.

    class_signatures is (n_classes, bands) pairs of (mean, std) in
    reflectance-like units; omit it to get evenly spaced defaults.
    """

    width: int
    height: int
    n_parcels: int
    n_classes: int
    bands: int = 3
    flip_rate: float = 0.0
    unsure_rate: float = 0.0
    boundary_jitter: int = 0
    seed: int = 0
    class_signatures: tuple[tuple[tuple[float, float], ...], ...] | None = None

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ConfigError("width and height must be positive")
        if self.bands < 1:
            raise ConfigError("bands must be positive")
        if self.n_classes < 2:
            raise ConfigError("need at least 2 classes")
        if self.n_parcels < self.n_classes:
            raise ConfigError("n_parcels must be >= n_classes")
        if self.n_parcels > self.width * self.height:
            raise ConfigError("more parcels than pixels")
        if self.n_classes + 1 >= 65535:
            raise ConfigError("too many classes for uint16 labels")
        for name, rate in (("flip_rate", self.flip_rate), ("unsure_rate", self.unsure_rate)):
            if not (0.0 <= rate <= 1.0):
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.flip_rate + self.unsure_rate > 1.0:
            raise ConfigError("flip_rate + unsure_rate must not exceed 1")
        if self.boundary_jitter < 0:
            raise ConfigError("boundary_jitter must be >= 0")
        if not (0 <= self.seed < 2**64):
            raise ConfigError("seed must fit in 64 bits")
        if self.class_signatures is not None:
            sig = self.class_signatures
            if len(sig) != self.n_classes or any(len(row) != self.bands for row in sig):
                raise ConfigError("class_signatures must be n_classes x bands pairs")
            flat = [v for row in sig for pair in row for v in pair]
            if any(not np.isfinite(v) for v in flat):
                raise ConfigError("class_signatures must be finite")
            if any(pair[1] < 0 for row in sig for pair in row):
                raise ConfigError("signature std must be >= 0")

    @property
    def unsure_id(self) -> int:
        return self.n_classes + 1

    def signatures(self) -> np.ndarray:
        """(n_classes, bands, 2) array of mean/std, defaults filled in."""
        if self.class_signatures is not None:
            return np.asarray(self.class_signatures, dtype=np.float64)
        means = (np.arange(self.n_classes) + 1.0) / (self.n_classes + 1.0)
        sig = np.empty((self.n_classes, self.bands, 2))
        for b in range(self.bands):
            # roll the ramp per band so classes are not collinear
            sig[:, b, 0] = np.roll(means, b)
            sig[:, b, 1] = 0.05
        return sig

    def to_json(self) -> str:
        doc = {
            "width": self.width,
            "height": self.height,
            "n_parcels": self.n_parcels,
            "n_classes": self.n_classes,
            "bands": self.bands,
            "seed": self.seed,
            "noise": {
                "flip_rate": self.flip_rate,
                "unsure_rate": self.unsure_rate,
                "boundary_jitter": self.boundary_jitter,
            },
        }
        if self.class_signatures is not None:
            doc["class_signatures"] = [
                [list(pair) for pair in row] for row in self.class_signatures
            ]
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SceneSpec":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"scene spec is not valid JSON: {exc}") from exc
        try:
            noise = doc.get("noise", {})
            sig = doc.get("class_signatures")
            return cls(
                width=int(doc["width"]),
                height=int(doc["height"]),
                n_parcels=int(doc["n_parcels"]),
                n_classes=int(doc["n_classes"]),
                bands=int(doc.get("bands", 3)),
                flip_rate=float(noise.get("flip_rate", 0.0)),
                unsure_rate=float(noise.get("unsure_rate", 0.0)),
                boundary_jitter=int(noise.get("boundary_jitter", 0)),
                seed=int(doc.get("seed", 0)),
                class_signatures=None
                if sig is None
                else tuple(tuple((float(m), float(s)) for m, s in row) for row in sig),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"scene spec missing or malformed field: {exc}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "SceneSpec":
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class SyntheticScene:
    image: ImageRaster
    clean_labels: LabelRaster
    noisy_labels: LabelRaster
    oracle_segments: SegmentMap


def scene_class_map(n_classes: int) -> ClassMap:
    """Display map for generated scenes: classes 1..n plus the unsure class."""
    entries = []
    used = set()
    for i in range(n_classes):
        cid = i + 1
        name = _CLASS_NAMES[i] if i < len(_CLASS_NAMES) else f"class_{cid}"
        color = _BASE_COLORS[i] if i < len(_BASE_COLORS) else ((37 * cid) % 256, (113 * cid) % 256, 64)
        while color in used or color == _UNSURE_COLOR or color == (0, 0, 0):
            color = (color[0], color[1], (color[2] + 1) % 256)
        used.add(color)
        entries.append(ClassEntry(cid, name, color))
    entries.append(ClassEntry(n_classes + 1, _UNSURE_NAME, _UNSURE_COLOR))
    return ClassMap(tuple(entries), unsure_id=n_classes + 1)


def _voronoi_parcels(spec: SceneSpec, sites_flat: np.ndarray) -> np.ndarray:
    """Nearest-site labeling with exact integer distances.

    Ties go to the lowest site index (argmin's first minimum), so the
    tessellation is exact and reproducible with no float geometry.
    """
    h, w = spec.height, spec.width
    site_r = (sites_flat // w).astype(np.int64)
    site_c = (sites_flat % w).astype(np.int64)
    cols = np.arange(w, dtype=np.int64)
    out = np.empty((h, w), dtype=np.uint32)
    for r0 in range(0, h, _ROW_CHUNK):
        r1 = min(r0 + _ROW_CHUNK, h)
        rows = np.arange(r0, r1, dtype=np.int64)
        dr = (rows[:, None] - site_r[None, :]) ** 2          # (rows, sites)
        dc = (cols[:, None] - site_c[None, :]) ** 2          # (cols, sites)
        d2 = dr[:, None, :] + dc[None, :, :]                 # (rows, cols, sites)
        out[r0:r1] = np.argmin(d2, axis=2).astype(np.uint32) + 1
    return out


def _jitter_round(labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One round of randomized border dilation, displacement <= 1 pixel.

    Every pixel draws a direction and a coin; on heads it takes the
    4-neighbor's label from that direction (edges clamped).  Interiors
    are fixed points, so only borders move.
    """
    h, w = labels.shape
    direction = rng.integers(0, 4, size=(h, w))
    gate = rng.random((h, w)) < 0.5
    padded = np.pad(labels, 1, mode="edge")
    shifted = (
        padded[0:h, 1:w + 1],      # from above
        padded[2:h + 2, 1:w + 1],  # from below
        padded[1:h + 1, 0:w],      # from the left
        padded[1:h + 1, 2:w + 2],  # from the right
    )
    out = labels.copy()
    for d in range(4):
        take = gate & (direction == d)
        out[take] = shifted[d][take]
    return out


def generate(spec: SceneSpec) -> SyntheticScene:
    """Build the full scene: imagery, clean/noisy labels, true parcels."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    h, w = spec.height, spec.width

    sites = rng.choice(h * w, size=spec.n_parcels, replace=False)
    parcels = _voronoi_parcels(spec, np.asarray(sites, dtype=np.int64))

    # all classes appear at least once: a permutation covers the first
    # n_classes parcels, the rest draw uniformly
    parcel_class = np.empty(spec.n_parcels, dtype=np.uint16)
    order = rng.permutation(spec.n_parcels)
    parcel_class[order[: spec.n_classes]] = np.arange(1, spec.n_classes + 1)
    if spec.n_parcels > spec.n_classes:
        parcel_class[order[spec.n_classes:]] = rng.integers(
            1, spec.n_classes + 1, size=spec.n_parcels - spec.n_classes
        )
    clean = parcel_class[parcels - 1]

    sig = spec.signatures()
    noise = rng.standard_normal((spec.bands, h, w))
    cls_idx = clean.astype(np.int64) - 1
    image = np.empty((spec.bands, h, w), dtype=np.float32)
    for b in range(spec.bands):
        image[b] = (sig[cls_idx, b, 0] + noise[b] * sig[cls_idx, b, 1]).astype(np.float32)

    noisy = clean.copy()
    for _ in range(spec.boundary_jitter):
        noisy = _jitter_round(noisy, rng)

    u = rng.random((h, w))
    flip = u < spec.flip_rate
    unsure = (u >= spec.flip_rate) & (u < spec.flip_rate + spec.unsure_rate)
    n_flip = int(flip.sum())
    if n_flip:
        # offset in [1, n_classes) rotates to a uniformly random wrong class
        offs = rng.integers(1, spec.n_classes, size=n_flip)
        noisy[flip] = ((noisy[flip].astype(np.int64) - 1 + offs) % spec.n_classes + 1).astype(
            np.uint16
        )
    noisy[unsure] = spec.unsure_id

    class_map = scene_class_map(spec.n_classes).mapping
    return SyntheticScene(
        image=ImageRaster(image),
        clean_labels=LabelRaster(clean, class_map, spec.unsure_id),
        noisy_labels=LabelRaster(noisy, class_map, spec.unsure_id),
        oracle_segments=SegmentMap(parcels),
    )
