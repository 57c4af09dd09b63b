"""
Classifying region proposals end to end
=======================================

Pool a feature per mask proposal, classify it against the reference
bundle (nearest-reference baseline vs ranking-distribution matching),
render the labels back onto the canvas and score everything against
the ground truth. This world is gentle on purpose: both configurations
solve it, which is the sanity floor every setup should clear. See
ablation_worlds.py for worlds built to separate them.
"""

import tempfile
from pathlib import Path

from rim.interchange import load_manifest
from rim.matching import MatchConfig
from rim.pipeline import build_reference_set, classify_manifest, evaluate_predictions
from rim.synth import WorldSpec, generate_world

root = Path(tempfile.mkdtemp(prefix="rim_demo_"))

# a gentle world: orthogonal classes, a little feature noise
spec = WorldSpec(
    class_count=5,
    feature_dim=24,
    images_per_class=8,
    subcluster_count=4,
    subcluster_spread=0.2,
    noise_sigma=0.1,
    canvas=(24, 24),
    regions_per_image=4,
    test_image_count=5,
    seed=3,
)
manifest = load_manifest(generate_world(spec, root))
refs = build_reference_set(manifest, subcategory_count=4).references

for label, naive in (("nearest-reference baseline", True), ("ranking match", False)):
    preds = classify_manifest(manifest, refs, MatchConfig(), naive=naive, threads=2)
    report = evaluate_predictions(manifest, preds, refs.class_names())
    print(f"{label}: mIoU = {report.miou * 100:.2f}")

# one prediction in detail
preds = classify_manifest(manifest, refs, MatchConfig())
first = preds[0]
print(f"\nimage {first.image_id}: proposal labels {list(first.labels)}")
print("rendered label map (top-left corner):")
print(first.rendered.labels[:8, :12])
