"""Deterministic synthetic stand-in for the extraction model stack.

A production extractor runs three models: a feature encoder over image
patches, a text-to-image diffusion model whose cross-attention for the
category's prompt token localizes the subject in generated reference
images, and a promptable segmenter for region proposals. None of those
run in this environment, so this backend synthesizes artifacts with the
same shapes and invariants instead: patch features are unit vectors
near a per-category direction, attention concentrates on the object
box, and proposals cover the objects they describe.

Contract choices mirrored from the consumer side:

* attention is exported at a single 64 x 64 resolution, one stack per
  reference image, for the category token only;
* label maps use 0 for background, ``k + 1`` for category ``k`` and
  255 for the void ring around object boundaries;
* every artifact is a function of (seed, stream, index) alone, so
  exports are reproducible item by item in any order.

``describe`` reports the parameters the backend actually used; the
export pipeline records that dict in the manifest metadata verbatim.
A production backend must do the same for its sampler settings
(step count, guidance scale) instead of leaving them implicit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor_io import ExportError

IMAGE_SIZE = 64
FEATURE_GRID = 16
ATTENTION_FLOOR = 0.05
VOID_WIDTH = 1

# rng stream tags; keep distinct so no two artifact kinds share a stream
_STREAM_DIRECTIONS = 0
_STREAM_REFERENCE = 1
_STREAM_SCENE = 2


@dataclass(frozen=True)
class SceneObject:
    """Axis-aligned object box on the pixel canvas."""

    category_id: int
    top: int
    left: int
    height: int
    width: int

    @property
    def box(self) -> tuple[slice, slice]:
        return (
            slice(self.top, self.top + self.height),
            slice(self.left, self.left + self.width),
        )


@dataclass(frozen=True)
class ReferenceArtifacts:
    """One synthesized reference image for a category."""

    features: np.ndarray
    attention: np.ndarray
    mask: np.ndarray


@dataclass(frozen=True)
class SceneArtifacts:
    """One synthesized test image: features, proposals, ground truth."""

    features: np.ndarray
    proposals: tuple[np.ndarray, ...]
    label_map: np.ndarray


class SyntheticBackend:
    """Synthesizes per-image artifacts for a fixed class list."""

    def __init__(
        self,
        class_names,
        *,
        seed: int = 0,
        feature_dim: int = 64,
        attention_layers: int = 2,
        attention_steps: int = 3,
        feature_noise: float = 0.02,
    ):
        names = tuple(str(n) for n in class_names)
        if not names:
            raise ExportError("backend needs at least one category")
        if feature_dim < 8:
            raise ExportError(f"feature dim must be at least 8, got {feature_dim}")
        if attention_layers < 1 or attention_steps < 1:
            raise ExportError("attention stack needs at least one layer and one step")
        if not 0.0 <= feature_noise < 1.0:
            raise ExportError(f"feature noise must lie in [0, 1), got {feature_noise}")
        if int(seed) < 0:
            raise ExportError(f"seed must be nonnegative, got {seed}")
        self._names = names
        self._seed = int(seed)
        self._dim = int(feature_dim)
        self._layers = int(attention_layers)
        self._steps = int(attention_steps)
        self._noise = float(feature_noise)
        # row 0 is the background direction, row k+1 belongs to category k
        rng = np.random.default_rng((self._seed, _STREAM_DIRECTIONS))
        dirs = rng.normal(size=(len(names) + 1, self._dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        self._directions = dirs

    @property
    def category_count(self) -> int:
        return len(self._names)

    @property
    def feature_dim(self) -> int:
        return self._dim

    def describe(self) -> dict:
        """Parameters actually used, destined for manifest metadata."""
        return {
            "kind": "synthetic",
            "seed": self._seed,
            "category_count": self.category_count,
            "feature_dim": self._dim,
            "feature_grid": [FEATURE_GRID, FEATURE_GRID],
            "image_size": [IMAGE_SIZE, IMAGE_SIZE],
            "attention_resolution": [IMAGE_SIZE, IMAGE_SIZE],
            "attention_layers": self._layers,
            "attention_steps": self._steps,
            "feature_noise": self._noise,
        }

    def reference(self, category_id: int, index: int) -> ReferenceArtifacts:
        """Synthesize reference image ``index`` for one category.

        The subject is a single large box; attention peaks on it with a
        small positive floor elsewhere, and the curated mask is its
        exact indicator.
        """
        if not 0 <= category_id < self.category_count:
            raise ExportError(
                f"category id {category_id} outside 0..{self.category_count - 1}"
            )
        rng = np.random.default_rng(
            (self._seed, _STREAM_REFERENCE, int(category_id), int(index))
        )
        obj = self._place_one(rng, category_id, lo=24, hi=40)
        labels = np.zeros((IMAGE_SIZE, IMAGE_SIZE), dtype=np.int64)
        labels[obj.box] = category_id + 1
        features = self._features_for(labels, rng)

        base = np.full((IMAGE_SIZE, IMAGE_SIZE), ATTENTION_FLOOR, dtype=np.float32)
        base[obj.box] = 1.0
        # per-map positive gains; max-normalization on the consumer side
        # removes them, leaving the box as the attended region
        gains = rng.uniform(0.6, 1.4, size=(self._layers, self._steps, 1, 1))
        attention = (base[None, None, :, :] * gains).astype(np.float32)

        mask = np.zeros((IMAGE_SIZE, IMAGE_SIZE), dtype=np.float32)
        mask[obj.box] = 1.0
        return ReferenceArtifacts(features, attention, mask)

    def scene(self, split: str, index: int) -> SceneArtifacts:
        """Synthesize test image ``index`` of a split.

        One to three non-touching object boxes, one proposal per box,
        and a truth map with a void ring around every object.
        """
        key = (self._seed, _STREAM_SCENE, *split.encode("utf-8"), int(index))
        rng = np.random.default_rng(key)
        objects = self._place_scene(rng)
        labels = np.zeros((IMAGE_SIZE, IMAGE_SIZE), dtype=np.int64)
        for obj in objects:
            labels[obj.box] = obj.category_id + 1
        features = self._features_for(labels, rng)

        truth = labels.copy()
        for obj in objects:
            ring = (
                slice(max(obj.top - VOID_WIDTH, 0), obj.top + obj.height + VOID_WIDTH),
                slice(max(obj.left - VOID_WIDTH, 0), obj.left + obj.width + VOID_WIDTH),
            )
            band = truth[ring]
            band[band == 0] = 255

        proposals = []
        for obj in objects:
            mask = np.zeros((IMAGE_SIZE, IMAGE_SIZE), dtype=np.float32)
            mask[obj.box] = 1.0
            proposals.append(mask)
        return SceneArtifacts(
            features, tuple(proposals), truth.astype(np.float32)
        )

    def _place_one(self, rng, category_id: int, *, lo: int, hi: int) -> SceneObject:
        h = int(rng.integers(lo, hi + 1))
        w = int(rng.integers(lo, hi + 1))
        top = int(rng.integers(2, IMAGE_SIZE - h - 1))
        left = int(rng.integers(2, IMAGE_SIZE - w - 1))
        return SceneObject(int(category_id), top, left, h, w)

    def _place_scene(self, rng) -> list[SceneObject]:
        count = int(rng.integers(1, 4))
        occupied = np.zeros((IMAGE_SIZE, IMAGE_SIZE), dtype=bool)
        objects: list[SceneObject] = []
        for _ in range(count):
            for _attempt in range(30):
                cat = int(rng.integers(0, self.category_count))
                obj = self._place_one(rng, cat, lo=10, hi=21)
                # pad by 2 so void rings of different objects stay apart
                pad = (
                    slice(max(obj.top - 2, 0), obj.top + obj.height + 2),
                    slice(max(obj.left - 2, 0), obj.left + obj.width + 2),
                )
                if not occupied[pad].any():
                    occupied[pad] = True
                    objects.append(obj)
                    break
        # first placement on an empty canvas always succeeds
        return objects

    def _features_for(self, labels: np.ndarray, rng) -> np.ndarray:
        """Patch features: majority label of each cell's pixel block
        picks the direction, plus isotropic noise, renormalized."""
        block = IMAGE_SIZE // FEATURE_GRID
        out = np.empty((FEATURE_GRID, FEATURE_GRID, self._dim), dtype=np.float32)
        for r in range(FEATURE_GRID):
            for c in range(FEATURE_GRID):
                cell = labels[r * block : (r + 1) * block, c * block : (c + 1) * block]
                counts = np.bincount(cell.ravel(), minlength=self.category_count + 1)
                vec = self._directions[int(np.argmax(counts))]
                vec = vec + rng.normal(0.0, self._noise, size=self._dim)
                norm = float(np.linalg.norm(vec))
                if norm <= 0.0:
                    raise ExportError("degenerate zero-norm patch feature")
                out[r, c] = (vec / norm).astype(np.float32)
        return out
