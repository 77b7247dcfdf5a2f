"""Build a synthetic labeled scene and look at every piece of it.

A scene is four aligned rasters: multiband imagery, the clean label
grid, a noisy copy (random flips plus an "unsure" class), and the
parcel map the noise was painted over.  Everything is deterministic
given the seed.
"""

from pathlib import Path

import numpy as np

from parceldenoise import (
    SceneSpec,
    export_color_image,
    generate,
    scene_class_map,
    write_grid,
)

OUT = Path(__file__).parent / "out" / "synthetic_scene"
OUT.mkdir(parents=True, exist_ok=True)

spec = SceneSpec(
    width=192,
    height=128,
    n_parcels=14,
    n_classes=4,
    flip_rate=0.18,
    unsure_rate=0.10,
    boundary_jitter=2,
    seed=7,
)
scene = generate(spec)

# The parcel map partitions the grid: ids 1..n_parcels, no background.
ids, sizes = np.unique(scene.oracle_segments.segment_ids, return_counts=True)
print(f"parcels: {ids.min()}..{ids.max()}, sizes {sizes.min()}..{sizes.max()} px")

# Clean labels only use the real classes; the noisy copy adds unsure.
clean_classes = np.unique(scene.clean_labels.labels)
noisy_classes = np.unique(scene.noisy_labels.labels)
print(f"clean classes: {clean_classes.tolist()}")
print(f"noisy classes: {noisy_classes.tolist()} (unsure id = {spec.unsure_id})")

disagree = scene.clean_labels.labels != scene.noisy_labels.labels
print(f"noise touched {disagree.mean():.1%} of pixels "
      f"(asked for {spec.flip_rate + spec.unsure_rate:.0%})")

# Imagery is per-class gaussian spectra, so parcels are visible in band 0.
band0 = scene.image.values[0]
for cls in clean_classes:
    m = band0[scene.clean_labels.labels == cls].mean()
    print(f"  class {cls}: band-0 mean {m:.3f}")

# Persist the lot. The .pdg container round-trips all three grid kinds;
# the color renders are plain PPMs you can open with any image viewer.
cmap = scene_class_map(spec.n_classes)
write_grid(scene.image, OUT / "image.pdg")
write_grid(scene.clean_labels, OUT / "clean.pdg")
write_grid(scene.noisy_labels, OUT / "noisy.pdg")
write_grid(scene.oracle_segments, OUT / "parcels.pdg")
export_color_image(scene.clean_labels, cmap, OUT / "clean.ppm")
export_color_image(scene.noisy_labels, cmap, OUT / "noisy.ppm")
print(f"wrote grids and renders to {OUT}")
