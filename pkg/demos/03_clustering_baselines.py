"""Delineate parcels from imagery alone: k-means and DBSCAN baselines.

When no segmentation model is available, clusters in spectral space
stand in for parcels.  Cluster ids are painted back onto the grid and
split into spatially connected segments before voting, so one spectral
cluster can still yield many parcels.
"""

from parceldenoise import (
    DbscanConfig,
    DenoisePolicy,
    KMeansConfig,
    SceneSpec,
    assignments_to_segment_map,
    build_features,
    confusion,
    connected_components,
    dbscan,
    denoise,
    format_metrics_table,
    generate,
    kmeans,
    scene_class_map,
)

spec = SceneSpec(
    width=160,
    height=160,
    n_parcels=12,
    n_classes=4,
    flip_rate=0.20,
    unsure_rate=0.10,
    seed=3,
)
scene = generate(spec)

# Features are per-band z-scored spectra, one row per valid pixel.
feats = build_features(scene.image)
print(f"features: {feats.data.shape[0]} px x {feats.data.shape[1]} bands")

runs = {}

km = kmeans(feats.data, KMeansConfig(k=spec.n_classes, seed=0))
print(f"kmeans: J={km.objective:.1f} after {km.n_iters} iterations")
# +1 because cluster 0 would read as background in a segment map
segs = assignments_to_segment_map(
    km.assignments + 1, feats.rows, feats.cols, spec.width, spec.height
)
runs["kmeans"] = segs

db = dbscan(feats.data, DbscanConfig(eps=0.08, min_pts=8))
n_noise = int((db == 0).sum())
print(f"dbscan: {db.max()} clusters, {n_noise} noise px")
runs["dbscan"] = assignments_to_segment_map(
    db, feats.rows, feats.cols, spec.width, spec.height
)

# Weakest baseline: components of the noisy grid itself.  Every
# component is label-uniform by construction, so the vote is a fixed
# point and the noise survives untouched.
runs["components"] = connected_components(scene.noisy_labels)

# Same voting policy for every provider; the segment map is the only
# thing that changes.
policy = DenoisePolicy()
rows = [("noisy", confusion(scene.clean_labels, scene.noisy_labels))]
for name, segmap in runs.items():
    print(f"{name}: {len(segmap.ids())} spatial segments")
    cleaned, _ = denoise(scene.noisy_labels, segmap, policy)
    rows.append((name, confusion(scene.clean_labels, cleaned)))

print()
print(format_metrics_table(rows, scene_class_map(spec.n_classes).mapping))
