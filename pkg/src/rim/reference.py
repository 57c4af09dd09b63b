"""Intra-modal reference construction.

Builds per-category reference features from synthesized images: attention
maps localize the foreground, mask average pooling condenses each image
into a prototype, and k-means over the prototypes yields subcategory
features that capture intra-class diversity.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    AttentionStack,
    CategoryReference,
    NumericError,
    ReferenceSet,
    SoftMask,
    Tensor,
    ValidationError,
)
from .interchange import read_array, write_tensor

log = logging.getLogger("rim.reference")

DEFAULT_ATTENTION_THRESHOLD = 0.7
DEFAULT_PROMPT_POINTS = 5


class EmptyForegroundError(NumericError):
    """A mask ended up with no positive weight where foreground is required."""


def bilinear_resize(values: np.ndarray, height: int, width: int) -> np.ndarray:
    """Resize a 2-D array with bilinear interpolation (half-pixel centers).

    Returns float64; resizing to the input extent reproduces it exactly.
    """
    src = np.asarray(values, dtype=np.float64)
    if src.ndim != 2:
        raise ValidationError(f"bilinear_resize expects a 2-D array, got shape {src.shape}")
    h_in, w_in = src.shape
    if height < 1 or width < 1:
        raise ValidationError("target extent must be positive")
    if (h_in, w_in) == (height, width):
        return src.copy()

    def axis_coords(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        pos = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        pos = np.clip(pos, 0.0, n_in - 1.0)
        lo = np.floor(pos).astype(np.intp)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, pos - lo

    y0, y1, wy = axis_coords(h_in, height)
    x0, x1, wx = axis_coords(w_in, width)
    top = src[y0][:, x0] * (1.0 - wx) + src[y0][:, x1] * wx
    bottom = src[y1][:, x0] * (1.0 - wx) + src[y1][:, x1] * wx
    return top * (1.0 - wy[:, None]) + bottom * wy[:, None]


def aggregate_attention(stack: AttentionStack | np.ndarray) -> np.ndarray:
    """Average the per-map max-normalized attention maps over all layers
    and steps; output is an h x w float32 array with values in [0, 1]."""
    if not isinstance(stack, AttentionStack):
        stack = AttentionStack(stack)
    maps = stack.maps.astype(np.float64)
    per_map_max = maps.max(axis=(2, 3), keepdims=True)
    normalized = maps / per_map_max
    return normalized.mean(axis=(0, 1)).astype(np.float32)


def binarize_attention(s_bar: np.ndarray | Tensor, threshold: float) -> SoftMask:
    """Threshold an aggregated attention map into a binary foreground mask.

    Raises ``EmptyForegroundError`` when the threshold excludes every
    pixel; callers decide whether to fall back (see
    ``foreground_from_attention``).
    """
    if isinstance(s_bar, Tensor):
        s_bar = s_bar.as_array()
    a = np.asarray(s_bar, dtype=np.float64)
    if a.ndim != 2:
        raise ValidationError(f"aggregated attention must be 2-D, got shape {a.shape}")
    if a.size and (a.min() < 0.0 or a.max() > 1.0):
        raise ValidationError("aggregated attention values must lie in [0, 1]")
    if not (0.0 < threshold < 1.0):
        raise ValidationError(f"threshold must lie in (0, 1), got {threshold}")
    binary = (a >= threshold).astype(np.float32)
    if not binary.any():
        raise EmptyForegroundError(
            f"threshold {threshold} excludes every pixel (map max {a.max():.4f})"
        )
    return SoftMask(binary)


def foreground_from_attention(
    stack: AttentionStack | np.ndarray, threshold: float = DEFAULT_ATTENTION_THRESHOLD
) -> tuple[SoftMask, bool]:
    """Aggregate + binarize, falling back to the single argmax pixel when
    the threshold empties the map. Returns (mask, fallback_used)."""
    s_bar = aggregate_attention(stack)
    try:
        return binarize_attention(s_bar, threshold), False
    except EmptyForegroundError:
        binary = np.zeros_like(s_bar, dtype=np.float32)
        flat = int(np.argmax(s_bar))
        binary[np.unravel_index(flat, s_bar.shape)] = 1.0
        log.warning(
            "attention threshold %.2f left no foreground; falling back to argmax pixel",
            threshold,
        )
        return SoftMask(binary), True


@dataclass(frozen=True)
class PromptPoints:
    """Pixel coordinates sampled inside a binary foreground, exported for
    point-prompted mask generation."""

    points: tuple[tuple[int, int], ...]

    def __init__(self, points, mask: SoftMask):
        pts = tuple((int(r), int(c)) for r, c in points)
        if not pts:
            raise ValidationError("prompt points must be non-empty")
        w = mask.weights
        for r, c in pts:
            if not (0 <= r < mask.height and 0 <= c < mask.width) or w[r, c] <= 0.0:
                raise ValidationError(f"prompt point ({r}, {c}) is outside the foreground")
        object.__setattr__(self, "points", pts)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=np.float32)


def sample_prompt_points(binary: SoftMask, count: int = DEFAULT_PROMPT_POINTS, seed: int = 0) -> PromptPoints:
    """Pick ``count`` spatially spread points inside a binary mask.

    With enough foreground pixels the points are k-means centroids of the
    foreground coordinates snapped to the nearest foreground pixel;
    otherwise the foreground pixels repeat in row-major order.
    """
    if count < 1:
        raise ValidationError(f"point count must be positive, got {count}")
    coords = np.argwhere(binary.weights > 0.0)
    if coords.shape[0] == 0:
        raise EmptyForegroundError("cannot sample prompt points from an empty mask")
    if coords.shape[0] < count:
        picked = [tuple(coords[i % coords.shape[0]]) for i in range(count)]
        return PromptPoints(picked, binary)
    result = kmeans(coords.astype(np.float64), count, seed)
    picked = []
    for centroid in result.centroids:
        d2 = ((coords - centroid[None, :]) ** 2).sum(axis=1)
        picked.append(tuple(coords[int(np.argmin(d2))]))
    return PromptPoints(picked, binary)


def mask_average_pool(feature_map: np.ndarray, mask: SoftMask | np.ndarray) -> np.ndarray:
    """Weighted mean of feature vectors under a spatial mask.

    The mask is bilinearly resized to the feature extent; output is the
    float32 D-vector sum(w_i * f_i) / sum(w_i).
    """
    fmap = np.asarray(feature_map)
    if fmap.ndim != 3:
        raise ValidationError(f"feature map must be [h, w, D], got shape {fmap.shape}")
    weights = mask.weights if isinstance(mask, SoftMask) else np.asarray(mask)
    if weights.ndim != 2:
        raise ValidationError(f"mask must be 2-D, got shape {weights.shape}")
    if np.asarray(weights).min() < 0.0:
        raise ValidationError("mask weights must be nonnegative")
    h, w = fmap.shape[:2]
    if weights.shape != (h, w):
        weights = bilinear_resize(weights, h, w)
    else:
        weights = np.asarray(weights, dtype=np.float64)
    total = float(weights.sum())
    if total <= 0.0:
        raise EmptyForegroundError("mask resizes to all-zero weights")
    pooled = np.einsum("hw,hwd->d", weights, fmap.astype(np.float64)) / total
    return pooled.astype(np.float32)


@dataclass(frozen=True)
class KMeansResult:
    centroids: np.ndarray
    assignments: np.ndarray
    objective_trace: tuple[float, ...]


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int,
    *,
    spherical: bool = False,
    max_iter: int = 100,
) -> KMeansResult:
    """Deterministic k-means with greedy farthest-point seeding.

    The seed picks the first center; every later choice is the point
    farthest from the chosen set (ties to the lowest index). Empty
    clusters are re-seeded with the point farthest from its centroid.
    With ``spherical=True`` centroids are renormalized to unit length
    after each mean update, which keeps the summed squared distance the
    constrained optimum for unit-norm inputs. Terminates at an
    assignment fixpoint or after ``max_iter`` iterations; the objective
    after each iteration is recorded in ``objective_trace``.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError(f"points must be [K, dim], got shape {x.shape}")
    n = x.shape[0]
    if not (1 <= k <= n):
        raise ValidationError(f"cluster count {k} must satisfy 1 <= k <= {n}")

    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(n))]
    d2 = ((x - x[chosen[0]][None, :]) ** 2).sum(axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(d2))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((x - x[nxt][None, :]) ** 2).sum(axis=1))
    centroids = x[chosen].copy()

    assignments = np.full(n, -1, dtype=np.intp)
    trace: list[float] = []
    for _ in range(max_iter):
        dist = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assign = np.argmin(dist, axis=1)
        point_d2 = dist[np.arange(n), new_assign]
        for j in range(k):
            if not np.any(new_assign == j):
                # steal the farthest point from a cluster that keeps at
                # least one member; one always exists because k <= n
                counts = np.bincount(new_assign, minlength=k)
                cand = np.where(counts[new_assign] > 1, point_d2, -np.inf)
                far = int(np.argmax(cand))
                centroids[j] = x[far]
                new_assign[far] = j
                point_d2[far] = 0.0
        if np.array_equal(new_assign, assignments):
            break
        assignments = new_assign
        for j in range(k):
            members = x[assignments == j]
            mean = members.mean(axis=0)
            if spherical:
                norm = np.linalg.norm(mean)
                if norm > 0.0:
                    centroids[j] = mean / norm
            else:
                centroids[j] = mean
        dist = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        trace.append(float(dist[np.arange(n), assignments].sum()))
    return KMeansResult(centroids, assignments, tuple(trace))


def cluster_subcategories(prototypes: np.ndarray, t: int, seed: int) -> np.ndarray:
    """Cluster L2-normalized prototypes into ``t`` unit-norm centroids."""
    x = np.asarray(prototypes, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError(f"prototypes must be [K, D], got shape {x.shape}")
    if t > x.shape[0]:
        raise ValidationError(
            f"cannot form {t} subcategories from {x.shape[0]} prototypes"
        )
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0.0):
        raise NumericError("prototypes must have nonzero norm")
    result = kmeans(x / norms[:, None], t, seed, spherical=True)
    return result.centroids.astype(np.float32)


def build_category_reference(
    category_id: int,
    feature_maps: list[np.ndarray],
    masks: list[SoftMask],
    subcategory_count: int,
    seed: int = 0,
) -> CategoryReference:
    """Pool each image's foreground into a prototype, average them into
    the holistic feature, and cluster them into subcategory features."""
    if len(feature_maps) < 1:
        raise ValidationError("need at least one reference image")
    if len(feature_maps) != len(masks):
        raise ValidationError(
            f"got {len(feature_maps)} feature maps but {len(masks)} masks"
        )
    if subcategory_count > len(feature_maps):
        raise ValidationError(
            f"subcategory count {subcategory_count} exceeds sample count {len(feature_maps)}"
        )
    prototypes = np.stack(
        [mask_average_pool(f, m) for f, m in zip(feature_maps, masks)], axis=0
    )
    holistic = prototypes.astype(np.float64).mean(axis=0).astype(np.float32)
    subcats = cluster_subcategories(prototypes, subcategory_count, seed)
    return CategoryReference(category_id, holistic, subcats, len(feature_maps))


def pool_background_sample(feature_map: np.ndarray, mask: SoftMask | np.ndarray) -> np.ndarray | None:
    """Complement-mask pooled feature of one image, or None when the
    image is fully foreground (zero complement weight)."""
    weights = mask.weights if isinstance(mask, SoftMask) else np.asarray(mask)
    complement = 1.0 - weights.astype(np.float64)
    try:
        return mask_average_pool(feature_map, complement)
    except EmptyForegroundError:
        return None


def mean_background_feature(pooled: list[np.ndarray]) -> np.ndarray:
    """Average per-image background features into the single background
    reference; raises when no image contributed one."""
    if not pooled:
        raise EmptyForegroundError("every image is fully foreground; no background to pool")
    return np.stack(pooled).astype(np.float64).mean(axis=0).astype(np.float32)


def build_background_reference(
    feature_maps: list[np.ndarray], masks: list[SoftMask]
) -> np.ndarray:
    """Average the complement-mask pooled features over all images.

    Images whose complement pools to zero weight (fully foreground)
    contribute nothing; if every image is fully foreground this raises.
    """
    if len(feature_maps) != len(masks) or not feature_maps:
        raise ValidationError("need equal, nonzero numbers of feature maps and masks")
    pooled = [
        sample
        for fmap, mask in zip(feature_maps, masks)
        if (sample := pool_background_sample(fmap, mask)) is not None
    ]
    return mean_background_feature(pooled)


def save_reference_set(refs: ReferenceSet, out_dir) -> Path:
    """Serialize a ReferenceSet as one tensor file per field plus a text
    index; returns the index path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_tensor(refs.background, out / "background.rimt")
    entries = []
    for cat, name in zip(refs.categories, refs.names):
        holistic = f"cat_{cat.category_id:03d}_holistic.rimt"
        subcats = f"cat_{cat.category_id:03d}_subcategories.rimt"
        write_tensor(cat.holistic, out / holistic)
        write_tensor(cat.subcategories, out / subcats)
        entries.append(
            {
                "id": cat.category_id,
                "name": name,
                "sample_count": cat.sample_count,
                "subcategory_count": cat.subcategory_count,
                "holistic": holistic,
                "subcategories": subcats,
            }
        )
    index = {
        "feature_dim": refs.feature_dim,
        "background": "background.rimt",
        "categories": entries,
    }
    index_path = out / "index.json"
    index_path.write_text(json.dumps(index, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return index_path


def load_reference_set(ref_dir) -> ReferenceSet:
    """Load a reference bundle written by ``save_reference_set``."""
    ref_dir = Path(ref_dir)
    index_path = ref_dir / "index.json"
    if not index_path.is_file():
        raise ValidationError(f"reference bundle index not found: {index_path}")
    index = json.loads(index_path.read_text(encoding="utf-8"))
    background = read_array(ref_dir / index["background"])
    categories = []
    names = []
    for entry in sorted(index["categories"], key=lambda e: e["id"]):
        holistic = read_array(ref_dir / entry["holistic"])
        subcats = read_array(ref_dir / entry["subcategories"])
        categories.append(
            CategoryReference(entry["id"], holistic, subcats, entry["sample_count"])
        )
        names.append(entry["name"])
    return ReferenceSet(categories, background, names)
