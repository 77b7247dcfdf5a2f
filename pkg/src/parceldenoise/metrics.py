"""Confusion matrices and per-class accuracy / precision / recall.

Scores any pair of label rasters over the pixels valid in both.  The
per-class numbers are one-vs-rest: each class is scored as a binary
problem against all others, which is what makes a distinct per-class
accuracy possible at all.  Ratios with a zero denominator are reported
as absent (None), never as 0 or 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, ShapeError
from .grids import LabelRaster


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square tally: counts[i][j] = pixels of reference class i predicted as j.

    `classes` fixes the row/column order; ids absent from both rasters
    are legal and simply carry zero counts.
    """

    classes: tuple[int, ...]
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError("counts must be a square matrix")
        if counts.shape[0] != len(self.classes):
            raise ValueError("counts size must match the class list")
        if (counts < 0).any():
            raise ValueError("counts must be non-negative")
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("duplicate class ids")
        counts = counts.copy()
        counts.setflags(write=False)
        object.__setattr__(self, "classes", tuple(int(c) for c in self.classes))
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def index_of(self, class_id: int) -> int:
        return self.classes.index(class_id)

    def count(self, ref_class: int, pred_class: int) -> int:
        return int(self.counts[self.index_of(ref_class), self.index_of(pred_class)])

    def to_json(self) -> str:
        doc = {"classes": list(self.classes), "counts": self.counts.tolist()}
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ConfusionMatrix":
        try:
            doc = json.loads(text)
            return cls(tuple(doc["classes"]), np.asarray(doc["counts"], dtype=np.int64))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed confusion matrix: {exc}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "ConfusionMatrix":
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class ClassMetrics:
    class_id: int
    support: int
    accuracy: float | None
    precision: float | None
    recall: float | None


def confusion(
    reference: LabelRaster, predicted: LabelRaster, exclude_unsure_ref: bool = False
) -> ConfusionMatrix:
    """Tally reference-vs-predicted classes over mutually valid pixels.

    The class list is the union of both rasters' class maps, so the
    matrix layout is stable across runs even when some class never
    occurs.  Pixels NODATA in either raster are skipped; reference
    pixels labeled unsure are skipped too iff exclude_unsure_ref.
    """
    if (reference.height, reference.width) != (predicted.height, predicted.width):
        raise ShapeError(
            f"reference {reference.height}x{reference.width} vs "
            f"predicted {predicted.height}x{predicted.width}"
        )
    keep = reference.valid_mask & predicted.valid_mask
    if exclude_unsure_ref:
        keep &= reference.labels != reference.unsure_id
    classes = np.array(
        sorted(set(reference.class_map) | set(predicted.class_map)), dtype=np.int64
    )
    n = classes.size
    ref = np.searchsorted(classes, reference.labels[keep].astype(np.int64))
    pred = np.searchsorted(classes, predicted.labels[keep].astype(np.int64))
    counts = np.bincount(ref * n + pred, minlength=n * n).reshape(n, n)
    return ConfusionMatrix(tuple(classes), counts)


def per_class_metrics(cm: ConfusionMatrix) -> list[ClassMetrics]:
    """One-vs-rest accuracy, precision, recall for every class, in order."""
    total = cm.total
    tp = np.diag(cm.counts)
    row = cm.counts.sum(axis=1)
    col = cm.counts.sum(axis=0)
    out = []
    for i, cid in enumerate(cm.classes):
        fp = int(col[i] - tp[i])
        fn = int(row[i] - tp[i])
        tn = total - int(tp[i]) - fp - fn
        acc = (int(tp[i]) + tn) / total if total > 0 else None
        prec = int(tp[i]) / (int(tp[i]) + fp) if tp[i] + fp > 0 else None
        rec = int(tp[i]) / (int(tp[i]) + fn) if tp[i] + fn > 0 else None
        out.append(ClassMetrics(cid, int(row[i]), acc, prec, rec))
    return out


def micro_accuracy(cm: ConfusionMatrix) -> float | None:
    """Plain overall accuracy: correct pixels / evaluated pixels."""
    total = cm.total
    if total == 0:
        return None
    return float(np.trace(cm.counts)) / total


def metrics_report(cm: ConfusionMatrix, class_names: dict[int, str] | None = None) -> str:
    """Full metrics document as JSON text."""
    names = class_names or {}
    doc = {
        "total": cm.total,
        "overall_accuracy": micro_accuracy(cm),
        "classes": [
            {
                "id": m.class_id,
                "name": names.get(m.class_id, f"class {m.class_id}"),
                "support": m.support,
                "accuracy": m.accuracy,
                "precision": m.precision,
                "recall": m.recall,
            }
            for m in per_class_metrics(cm)
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def _cell(value: float | None, width: int) -> str:
    if value is None:
        return "-".rjust(width)
    return f"{100.0 * value:.1f}".rjust(width)


def format_metrics_table(
    rows: list[tuple[str, ConfusionMatrix]],
    class_names: dict[int, str] | None = None,
) -> str:
    """Aligned text table: one row per matrix, A/P/R columns per class.

    Classes run across the top (union over all rows, ascending id),
    each with accuracy/precision/recall sub-columns in percent, plus a
    trailing overall-accuracy column.  Absent metrics print as "-".
    """
    if not rows:
        raise ValueError("need at least one labeled matrix")
    names = class_names or {}
    class_ids = sorted({c for _, cm in rows for c in cm.classes})
    headers = [names.get(c, f"class {c}") for c in class_ids]

    label_w = max(len("method"), *(len(label) for label, _ in rows))
    # every class group spans 3 sub-columns; widen them when the class
    # name would not fit over the group
    sub_w = [max(6, -(-(len(h) - 4) // 3)) for h in headers]
    span = [3 * w + 4 for w in sub_w]
    over_w = max(6, len("overall"))

    per_row = []
    for label, cm in rows:
        by_id = {m.class_id: m for m in per_class_metrics(cm)}
        cells = []
        for cid, w in zip(class_ids, sub_w):
            m = by_id.get(cid)
            apr = (m.accuracy, m.precision, m.recall) if m else (None, None, None)
            cells.append("  ".join(_cell(v, w) for v in apr))
        cells.append(_cell(micro_accuracy(cm), over_w))
        per_row.append((label, cells))

    head1 = "  ".join(
        [" " * label_w]
        + [h.center(s) for h, s in zip(headers, span)]
        + ["overall".rjust(over_w)]
    )
    head2 = "  ".join(
        ["method".ljust(label_w)]
        + ["  ".join(t.rjust(w) for t in ("A", "P", "R")) for w in sub_w]
        + ["A".rjust(over_w)]
    )
    lines = [head1.rstrip(), head2.rstrip()]
    for label, cells in per_row:
        lines.append("  ".join([label.ljust(label_w)] + cells).rstrip())
    return "\n".join(lines) + "\n"
