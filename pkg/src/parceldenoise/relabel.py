"""Per-segment majority voting over noisy labels.

Each segment's pixels vote with their current labels; when the winning
class clears the configured margin, the segment's target pixels are
rewritten to it.  NODATA pixels never vote and never change.  The
designated unsure class is excluded from votes by default (it encodes
"no information", so letting it win would defeat the point), but can be
counted for ablations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, FormatError, ShapeError
from .grids import LABEL_NODATA, LabelRaster, SegmentMap
from .segments import label_components

MODES = ("relabel_all", "relabel_unsure_only")
BACKGROUND_ACTIONS = ("leave", "per_component_vote")


@dataclass(frozen=True)
class DenoisePolicy:
    """Knobs for the voting pass.

    mode: rewrite every pixel of a winning segment, or only its
        unsure-labeled pixels.
    min_margin: majority share in [0, 1] the winner must reach before
        the segment is touched; 0 is the pure mode vote.
    unsure_votes: count unsure-labeled pixels as votes.
    background_action: what to do with unsegmented (id 0) pixels —
        leave them, or treat each connected blob of background as its
        own segment and vote it.
    """

    mode: str = "relabel_all"
    min_margin: float = 0.0
    unsure_votes: bool = False
    background_action: str = "leave"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (0.0 <= self.min_margin <= 1.0):
            raise ConfigError("min_margin must lie in [0, 1]")
        if self.background_action not in BACKGROUND_ACTIONS:
            raise ConfigError(
                f"background_action must be one of {BACKGROUND_ACTIONS}, "
                f"got {self.background_action!r}"
            )


@dataclass(frozen=True)
class SegmentVote:
    segment_id: int
    size: int
    winner: int | None
    margin: float


@dataclass
class DenoiseReport:
    """Counts describing one denoise run.

    per_segment covers every real segment (id > 0); background blob
    votes contribute to the totals and the flux but get no row.
    per_class_flux maps (from_class, to_class) to changed-pixel counts,
    so its total equals pixels_relabeled.
    """

    pixels_total: int
    pixels_relabeled: int
    unsure_before: int
    unsure_after: int
    per_segment: list[SegmentVote] = field(default_factory=list)
    per_class_flux: dict[tuple[int, int], int] = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "pixels_total": self.pixels_total,
            "pixels_relabeled": self.pixels_relabeled,
            "unsure_before": self.unsure_before,
            "unsure_after": self.unsure_after,
            "per_segment": [
                {
                    "segment_id": v.segment_id,
                    "size": v.size,
                    "winner": v.winner,
                    "margin": v.margin,
                }
                for v in self.per_segment
            ],
            "per_class_flux": [
                {"from": a, "to": b, "count": c}
                for (a, b), c in sorted(self.per_class_flux.items())
            ],
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DenoiseReport":
        try:
            doc = json.loads(text)
            return cls(
                pixels_total=int(doc["pixels_total"]),
                pixels_relabeled=int(doc["pixels_relabeled"]),
                unsure_before=int(doc["unsure_before"]),
                unsure_after=int(doc["unsure_after"]),
                per_segment=[
                    SegmentVote(
                        int(v["segment_id"]),
                        int(v["size"]),
                        None if v["winner"] is None else int(v["winner"]),
                        float(v["margin"]),
                    )
                    for v in doc["per_segment"]
                ],
                per_class_flux={
                    (int(f["from"]), int(f["to"])): int(f["count"])
                    for f in doc["per_class_flux"]
                },
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed denoise report: {exc}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())


def segment_mode(votes) -> tuple[int, float]:
    """Most frequent class id and its share of the votes.

    Ties break toward the smallest class id.
    """
    votes = np.asarray(votes, dtype=np.int64)
    if votes.size == 0:
        raise ValueError("segment_mode needs at least one vote")
    counts = np.bincount(votes)
    winner = int(np.argmax(counts))
    return winner, counts[winner] / votes.size


class _VoteOutcome(NamedTuple):
    seg_values: np.ndarray   # segment ids voted on, ascending
    sizes: np.ndarray        # pixel count per segment
    winner: np.ndarray       # winning class per segment (-1 = no eligible votes)
    margin: np.ndarray       # winner share of eligible votes (0 where none)
    act: np.ndarray          # bool, margin cleared and votes existed


def _vote_segments(
    labels: np.ndarray, seg: np.ndarray, region: np.ndarray, policy: DenoisePolicy, unsure_id: int
) -> _VoteOutcome:
    """Tally votes for every segment id > 0 inside `region`."""
    seg_values = np.unique(seg[region & (seg > 0)])
    n_seg = seg_values.size
    if n_seg == 0:
        z = np.zeros(0, dtype=np.int64)
        return _VoteOutcome(z, z, z, z.astype(float), z.astype(bool))

    in_seg = region & (seg > 0)
    sizes = np.bincount(
        np.searchsorted(seg_values, seg[in_seg]), minlength=n_seg
    )

    votable = in_seg & (labels != LABEL_NODATA)
    # int64 so the -1 "no winner" sentinel below cannot wrap
    class_values = (
        np.unique(labels[votable]).astype(np.int64) if votable.any() else np.zeros(0, np.int64)
    )
    n_cls = class_values.size
    counts = np.zeros((n_seg, n_cls), dtype=np.int64)
    if n_cls:
        seg_idx = np.searchsorted(seg_values, seg[votable])
        cls_idx = np.searchsorted(class_values, labels[votable])
        counts = np.bincount(
            seg_idx * n_cls + cls_idx, minlength=n_seg * n_cls
        ).reshape(n_seg, n_cls)

    unsure_col = np.searchsorted(class_values, unsure_id) if n_cls else 0
    has_unsure_col = n_cls > 0 and unsure_col < n_cls and class_values[unsure_col] == unsure_id
    totals = counts.sum(axis=1)
    eligible = counts
    if not policy.unsure_votes and has_unsure_col:
        non_unsure = totals - counts[:, unsure_col]
        # drop unsure votes only where non-unsure votes exist; segments
        # with nothing but unsure votes are left alone
        eligible = counts.copy()
        eligible[non_unsure > 0, unsure_col] = 0
        totals = np.where(non_unsure > 0, non_unsure, 0)
    win_idx = np.argmax(eligible, axis=1) if n_cls else np.zeros(n_seg, np.int64)
    winner = np.where(
        totals > 0, class_values[win_idx] if n_cls else -1, -1
    ).astype(np.int64)
    win_count = eligible[np.arange(n_seg), win_idx] if n_cls else np.zeros(n_seg, np.int64)
    margin = np.divide(
        win_count, totals, out=np.zeros(n_seg, dtype=np.float64), where=totals > 0
    )
    act = (totals > 0) & (margin >= policy.min_margin)
    return _VoteOutcome(seg_values, sizes, winner, margin, act)


def _apply_votes(
    out: np.ndarray,
    labels: np.ndarray,
    seg: np.ndarray,
    region: np.ndarray,
    outcome: _VoteOutcome,
    policy: DenoisePolicy,
    unsure_id: int,
) -> None:
    if outcome.seg_values.size == 0 or not outcome.act.any():
        return
    target = region & (seg > 0) & (labels != LABEL_NODATA)
    if policy.mode == "relabel_unsure_only":
        target &= labels == unsure_id
    if not target.any():
        return
    seg_idx = np.searchsorted(outcome.seg_values, seg[target])
    new = np.where(
        outcome.act[seg_idx], outcome.winner[seg_idx], labels[target].astype(np.int64)
    )
    out[target] = new.astype(np.uint16)


def denoise(
    labels: LabelRaster, segs: SegmentMap, policy: DenoisePolicy | None = None
) -> tuple[LabelRaster, DenoiseReport]:
    """Majority-vote every segment and rewrite its target pixels.

    Returns the refined raster and a report of what moved.  Segments
    whose votes are all NODATA (or all unsure, with unsure_votes off)
    are left untouched, as is the background unless
    background_action = per_component_vote.
    """
    policy = policy or DenoisePolicy()
    if (labels.height, labels.width) != (segs.height, segs.width):
        raise ShapeError(
            f"labels {labels.height}x{labels.width} vs segments "
            f"{segs.height}x{segs.width}"
        )
    grid = labels.labels
    seg = segs.segment_ids
    out = grid.copy()

    everywhere = np.ones_like(seg, dtype=bool)
    outcome = _vote_segments(grid, seg, everywhere, policy, labels.unsure_id)
    _apply_votes(out, grid, seg, everywhere, outcome, policy, labels.unsure_id)

    per_segment = [
        SegmentVote(
            int(outcome.seg_values[i]),
            int(outcome.sizes[i]),
            None if outcome.winner[i] < 0 else int(outcome.winner[i]),
            float(outcome.margin[i]),
        )
        for i in range(outcome.seg_values.size)
    ]

    if policy.background_action == "per_component_vote":
        bg_valid = (seg == 0) & (grid != LABEL_NODATA)
        blobs = label_components(np.zeros_like(seg), bg_valid, connectivity=4)
        bg_outcome = _vote_segments(grid, blobs, everywhere, policy, labels.unsure_id)
        _apply_votes(out, grid, blobs, everywhere, bg_outcome, policy, labels.unsure_id)

    changed = out != grid
    flux: dict[tuple[int, int], int] = {}
    if changed.any():
        pairs, counts = np.unique(
            np.stack([grid[changed], out[changed]]), axis=1, return_counts=True
        )
        flux = {
            (int(a), int(b)): int(c) for a, b, c in zip(pairs[0], pairs[1], counts)
        }
    report = DenoiseReport(
        pixels_total=grid.size,
        pixels_relabeled=int(changed.sum()),
        unsure_before=int((grid == labels.unsure_id).sum()),
        unsure_after=int((out == labels.unsure_id).sum()),
        per_segment=per_segment,
        per_class_flux=flux,
    )
    return labels.with_labels(out), report


class StrayStats(NamedTuple):
    strays_before: int
    strays_after: int


def stray_pixel_stats(before: LabelRaster, after: LabelRaster, window: int = 3) -> StrayStats:
    """Count pixels whose label differs from every neighbor in the window.

    A pixel is stray when it has at least one valid neighbor in the
    window x window box and none of them share its label.  NODATA pixels
    are never stray and never vote as neighbors.
    """
    if (before.height, before.width) != (after.height, after.width):
        raise ShapeError("before/after dimensions differ")
    if window % 2 == 0 or window < 3:
        raise ConfigError(f"window must be odd and >= 3, got {window}")
    return StrayStats(_stray_count(before, window), _stray_count(after, window))


def _stray_count(raster: LabelRaster, window: int) -> int:
    r = window // 2
    lab = raster.labels
    h, w = lab.shape
    padded = np.full((h + 2 * r, w + 2 * r), LABEL_NODATA, dtype=lab.dtype)
    padded[r:r + h, r:r + w] = lab
    any_valid = np.zeros((h, w), dtype=bool)
    any_same = np.zeros((h, w), dtype=bool)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dy == 0 and dx == 0:
                continue
            nb = padded[r + dy:r + dy + h, r + dx:r + dx + w]
            valid = nb != LABEL_NODATA
            any_valid |= valid
            any_same |= valid & (nb == lab)
    candidates = lab != LABEL_NODATA
    return int((candidates & any_valid & ~any_same).sum())
