"""Score predicted labels against a reference, class by class.

The confusion matrix is the single source: per-class accuracy,
precision and recall all derive from it, absent classes report None
rather than a misleading zero, and the text table is stable enough to
diff between runs.
"""

import json
from pathlib import Path

import numpy as np

from parceldenoise import (
    ConfusionMatrix,
    LabelRaster,
    confusion,
    format_metrics_table,
    metrics_report,
    micro_accuracy,
    per_class_metrics,
)

OUT = Path(__file__).parent / "out" / "evaluate_labels"
OUT.mkdir(parents=True, exist_ok=True)

CMAP = {1: "cropland", 2: "forest", 3: "water", 9: "mosaic"}

# Tiny hand example first: 4 reference pixels, one cropland pixel
# mislabeled as forest.
ref = LabelRaster(np.array([[1, 1, 2, 2]], dtype=np.uint16), CMAP, 9)
pred = LabelRaster(np.array([[1, 2, 2, 2]], dtype=np.uint16), CMAP, 9)
cm = confusion(ref, pred)
print(f"confusion counts:\n{cm.counts}")
print(f"overall accuracy: {micro_accuracy(cm):.2f}")
for m in per_class_metrics(cm):
    p = "-" if m.precision is None else f"{m.precision:.2f}"
    r = "-" if m.recall is None else f"{m.recall:.2f}"
    print(f"  {CMAP[m.class_id]:<9} support={m.support} P={p} R={r}")

# Water never occurs on either side: support 0, precision/recall None.
# That keeps averages honest when a class is missing from a tile.

# A bigger random pair to show the table layout.
rng = np.random.default_rng(0)
truth = rng.choice([1, 2, 3], size=(64, 64)).astype(np.uint16)
guess = truth.copy()
wrong = rng.random(truth.shape) < 0.12
guess[wrong] = rng.choice([1, 2, 3, 9], size=int(wrong.sum()))
big = confusion(
    LabelRaster(truth, CMAP, 9),
    LabelRaster(guess, CMAP, 9),
)

table = format_metrics_table([("hand", cm), ("random", big)], CMAP)
print()
print(table)

# Matrices serialize to JSON and come back intact, so evaluations can
# be archived next to the run that produced them.
cm.save(OUT / "confusion.json")
again = ConfusionMatrix.load(OUT / "confusion.json")
assert np.array_equal(again.counts, cm.counts)

doc = json.loads(metrics_report(big, CMAP))
print(f"report covers {len(doc['classes'])} classes, "
      f"overall {doc['overall_accuracy']:.4f}")
(OUT / "report.json").write_text(json.dumps(doc, indent=2))
print(f"wrote {OUT}")
