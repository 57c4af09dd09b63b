"""Manifest-driven orchestration: references, classification, scoring.

Every step is deterministic for a fixed manifest, configuration and
seed. Per-image classification work is pure (no shared mutable state,
no random draws), so running it across threads and merging in sorted
image-id order yields byte-identical results for any thread count.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    LabelMap,
    ReferenceSet,
    Region,
    RegionSet,
    SoftMask,
    ValidationError,
)
from .evaluation import EvalReport, compute_miou, render_label_map
from .interchange import Manifest, TestEntry, read_array, write_tensor
from .matching import MatchConfig, classify_naive, classify_region
from .reference import (
    DEFAULT_ATTENTION_THRESHOLD,
    DEFAULT_PROMPT_POINTS,
    PromptPoints,
    build_category_reference,
    foreground_from_attention,
    mask_average_pool,
    mean_background_feature,
    pool_background_sample,
    sample_prompt_points,
)

log = logging.getLogger("rim.pipeline")


@dataclass(frozen=True)
class ReferenceBuildResult:
    """References plus build-time byproducts: the prompt points sampled
    per reference image (keyed by (category_id, entry index)) and how
    many attention maps fell back to their argmax pixel."""

    references: ReferenceSet
    prompt_points: dict[tuple[int, int], PromptPoints]
    fallback_count: int


def build_reference_set(
    manifest: Manifest,
    *,
    subcategory_count: int = 8,
    attn_threshold: float = DEFAULT_ATTENTION_THRESHOLD,
    seed: int = 0,
    use_foreground_mask: bool = True,
    prompt_point_count: int = DEFAULT_PROMPT_POINTS,
) -> ReferenceBuildResult:
    """Build all category references and the background reference.

    Foreground masks come from each entry's curated mask when present
    and ``use_foreground_mask`` is set; otherwise they are derived from
    the entry's attention stack (threshold, then argmax-pixel fallback).
    Categories with fewer sample images than ``subcategory_count`` get
    one subcategory per sample.
    """
    if subcategory_count < 1:
        raise ValidationError(
            f"subcategory count must be positive, got {subcategory_count}"
        )
    categories = []
    names = []
    points: dict[tuple[int, int], PromptPoints] = {}
    background_samples = []
    fallback_count = 0
    for cat in manifest.categories:
        entries = manifest.references_for(cat.category_id)
        fmaps = []
        masks = []
        for idx, entry in enumerate(entries):
            fmap = read_array(entry.features)
            if use_foreground_mask and entry.mask is not None:
                mask = SoftMask(read_array(entry.mask))
            else:
                mask, fell_back = foreground_from_attention(
                    read_array(entry.attention), attn_threshold
                )
                fallback_count += int(fell_back)
            points[(cat.category_id, idx)] = sample_prompt_points(
                mask, prompt_point_count, seed
            )
            fmaps.append(fmap)
            masks.append(mask)
            sample = pool_background_sample(fmap, mask)
            if sample is not None:
                background_samples.append(sample)
        t_eff = min(subcategory_count, len(fmaps))
        if t_eff < subcategory_count:
            log.warning(
                "category %d has %d samples, clamping subcategory count %d to %d",
                cat.category_id,
                len(fmaps),
                subcategory_count,
                t_eff,
            )
        categories.append(
            build_category_reference(cat.category_id, fmaps, masks, t_eff, seed)
        )
        names.append(cat.name)
    background = mean_background_feature(background_samples)
    refs = ReferenceSet(categories, background, names)
    return ReferenceBuildResult(refs, points, fallback_count)


def save_prompt_points(result: ReferenceBuildResult, path) -> None:
    """Write the sampled prompt points as JSON, keyed by category and
    reference entry index."""
    doc = {
        "points": [
            {
                "category_id": cat_id,
                "entry_index": idx,
                "points": [list(p) for p in pts.points],
            }
            for (cat_id, idx), pts in sorted(result.prompt_points.items())
        ],
        "fallback_count": result.fallback_count,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class ImagePrediction:
    """Labels assigned to one test image's proposals (in proposal order)
    plus the rendered per-pixel label map."""

    image_id: str
    labels: tuple[int, ...]
    rendered: LabelMap


def pooled_regions(entry: TestEntry) -> RegionSet:
    """Load one test entry's proposals and pool a feature per region."""
    fmap = read_array(entry.features)
    regions = []
    for path in entry.proposals:
        mask = SoftMask(read_array(path))
        regions.append(Region(mask, mask_average_pool(fmap, mask)))
    return RegionSet(regions, entry.image_id)


def _classify_entry(
    entry: TestEntry, refs: ReferenceSet, cfg: MatchConfig, naive: bool
) -> ImagePrediction:
    region_set = pooled_regions(entry)
    labels = []
    for region in region_set.regions:
        if naive:
            labels.append(classify_naive(region.feature, refs))
        else:
            labels.append(classify_region(region.feature, refs, cfg)[0])
    first = region_set.regions[0].mask
    rendered = render_label_map(
        region_set, labels, first.height, first.width, refs.category_count
    )
    return ImagePrediction(entry.image_id, tuple(labels), rendered)


def classify_manifest(
    manifest: Manifest,
    refs: ReferenceSet,
    cfg: MatchConfig | None = None,
    *,
    naive: bool = False,
    threads: int = 1,
) -> tuple[ImagePrediction, ...]:
    """Classify every proposal of every test image.

    Results are ordered by image id regardless of ``threads``; each
    image's work is independent, so the outputs are identical for any
    thread count.
    """
    cfg = cfg or MatchConfig()
    if threads < 1:
        raise ValidationError(f"thread count must be positive, got {threads}")
    if not manifest.tests:
        raise ValidationError("manifest has no test entries to classify")
    entries = sorted(manifest.tests, key=lambda t: t.image_id)
    if threads == 1:
        preds = [_classify_entry(e, refs, cfg, naive) for e in entries]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            preds = list(pool.map(lambda e: _classify_entry(e, refs, cfg, naive), entries))
    return tuple(preds)


def save_predictions(predictions: tuple[ImagePrediction, ...], out_dir) -> Path:
    """Write ``predictions.json`` plus one rendered label map per image
    under ``pred/``; byte-identical for identical predictions."""
    out = Path(out_dir)
    (out / "pred").mkdir(parents=True, exist_ok=True)
    doc = {"images": []}
    for p in sorted(predictions, key=lambda p: p.image_id):
        rel = f"pred/{p.image_id}.rimt"
        write_tensor(p.rendered.labels.astype(np.float32), out / rel)
        doc["images"].append(
            {"image_id": p.image_id, "labels": list(p.labels), "rendered": rel}
        )
    path = out / "predictions.json"
    path.write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return path


def load_ground_truth(manifest: Manifest) -> dict[str, LabelMap]:
    """Ground-truth label maps by image id."""
    return {
        t.image_id: LabelMap(read_array(t.label_map), manifest.category_count)
        for t in manifest.tests
    }


def evaluate_predictions(
    manifest: Manifest,
    predictions: tuple[ImagePrediction, ...],
    class_names: list[str] | None = None,
) -> EvalReport:
    """Score rendered predictions against the manifest's ground truth."""
    truth = load_ground_truth(manifest)
    pred_ids = sorted(p.image_id for p in predictions)
    if pred_ids != sorted(truth):
        raise ValidationError(
            "predictions do not cover the manifest's test images: "
            f"{pred_ids} vs {sorted(truth)}"
        )
    by_id = {p.image_id: p for p in predictions}
    ordered = sorted(truth)
    return compute_miou(
        [by_id[i].rendered for i in ordered],
        [truth[i] for i in ordered],
        class_names,
    )
