"""Shared domain types for the region-classification pipeline.

All types are immutable after construction (frozen dataclasses holding
read-only numpy arrays) and may be shared freely across threads.
Construction validates every invariant and raises ``ValidationError``
with a descriptive message; nothing is silently repaired.

Label convention used throughout the package:

* reference categories carry dense ids ``0..C-1``;
* label maps and classification outputs use ``0`` for background and
  ``k + 1`` for the category with id ``k``;
* label maps may additionally contain ``IGNORE_LABEL`` (255), which
  evaluation excludes from all counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

IGNORE_LABEL = 255


class RimError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RimError):
    """A domain type was constructed with violated invariants."""


class NumericError(RimError):
    """A numeric operation received data it cannot process."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


def as_float32(values, name: str) -> np.ndarray:
    """Coerce to a finite float32 array, rejecting NaN/Inf."""
    a = np.asarray(values, dtype=np.float32)
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} contains NaN or Inf values")
    return a


@dataclass(frozen=True)
class Tensor:
    """N-dimensional float32 array; the carrier for features, masks and
    attention maps moving through the interchange format.

    ``shape`` must be non-empty with positive sizes and its product must
    equal the number of data values; all values must be finite.
    """

    shape: tuple[int, ...]
    data: np.ndarray

    def __init__(self, shape, data):
        shape = tuple(int(s) for s in shape)
        _require(len(shape) >= 1, "tensor shape must have at least one dimension")
        _require(all(s > 0 for s in shape), f"tensor shape {shape} has non-positive sizes")
        a = as_float32(data, "tensor data").reshape(-1)
        expected = math.prod(shape)
        _require(
            a.size == expected,
            f"tensor data length {a.size} does not match product(shape)={expected}",
        )
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "data", _readonly(a))

    @classmethod
    def from_array(cls, array) -> "Tensor":
        a = np.asarray(array)
        return cls(a.shape, a.reshape(-1))

    def as_array(self) -> np.ndarray:
        """Read-only float32 view in the declared shape."""
        return self.data.reshape(self.shape)


@dataclass(frozen=True)
class SoftMask:
    """Per-pixel weights in [0, 1]; a mask with only {0, 1} weights is a
    valid binary mask."""

    height: int
    width: int
    weights: np.ndarray

    def __init__(self, weights):
        w = as_float32(weights, "mask weights")
        _require(w.ndim == 2, f"mask weights must be 2-D, got shape {w.shape}")
        _require(w.size > 0, "mask must have at least one pixel")
        if w.size and (w.min() < 0.0 or w.max() > 1.0):
            raise ValidationError(
                f"mask weights must lie in [0, 1], got range [{w.min()}, {w.max()}]"
            )
        object.__setattr__(self, "height", int(w.shape[0]))
        object.__setattr__(self, "width", int(w.shape[1]))
        object.__setattr__(self, "weights", _readonly(w))

    def is_binary(self) -> bool:
        w = self.weights
        return bool(np.all((w == 0.0) | (w == 1.0)))

    def foreground_count(self) -> int:
        return int(np.count_nonzero(self.weights))


@dataclass(frozen=True)
class AttentionStack:
    """Cross-attention maps for one image over UNet layers and diffusion
    steps, stored as a [layers, steps, h, w] array.

    Every map shares the same h x w, is nonnegative, and contains at
    least one strictly positive value (max-normalization divides by the
    per-map maximum).
    """

    maps: np.ndarray
    layer_count: int
    step_count: int

    def __init__(self, maps):
        a = as_float32(maps, "attention maps")
        _require(a.ndim == 4, f"attention stack must be [L, T, h, w], got shape {a.shape}")
        _require(a.shape[0] >= 1 and a.shape[1] >= 1, "attention stack is empty")
        _require(a.shape[2] >= 1 and a.shape[3] >= 1, "attention maps have empty extent")
        if a.size and a.min() < 0.0:
            raise ValidationError(f"attention maps must be nonnegative, min={a.min()}")
        per_map_max = a.max(axis=(2, 3))
        if not np.all(per_map_max > 0.0):
            bad = np.argwhere(per_map_max <= 0.0)[0]
            raise ValidationError(
                f"attention map (layer={bad[0]}, step={bad[1]}) is all zeros"
            )
        object.__setattr__(self, "maps", _readonly(a))
        object.__setattr__(self, "layer_count", int(a.shape[0]))
        object.__setattr__(self, "step_count", int(a.shape[1]))


@dataclass(frozen=True)
class CategoryReference:
    """Reference features for one category: the holistic foreground
    feature plus T subcategory features, pooled from K sample images."""

    category_id: int
    holistic: np.ndarray
    subcategories: np.ndarray
    sample_count: int

    def __init__(self, category_id, holistic, subcategories, sample_count):
        holistic = as_float32(holistic, "holistic feature")
        subcategories = as_float32(subcategories, "subcategory features")
        _require(holistic.ndim == 1, "holistic feature must be a vector")
        _require(
            subcategories.ndim == 2,
            f"subcategories must be [T, D], got shape {subcategories.shape}",
        )
        _require(int(category_id) >= 0, "category id must be nonnegative")
        dim = holistic.shape[0]
        _require(
            subcategories.shape[1] == dim,
            f"subcategory dim {subcategories.shape[1]} != holistic dim {dim}",
        )
        t = subcategories.shape[0]
        k = int(sample_count)
        _require(1 <= t <= k, f"subcategory count {t} must satisfy 1 <= T <= K={k}")
        norms = [float(np.linalg.norm(holistic))]
        norms += [float(np.linalg.norm(v)) for v in subcategories]
        _require(all(n > 0.0 for n in norms), "reference features must have nonzero norm")
        object.__setattr__(self, "category_id", int(category_id))
        object.__setattr__(self, "holistic", _readonly(holistic))
        object.__setattr__(self, "subcategories", _readonly(subcategories))
        object.__setattr__(self, "sample_count", k)

    @property
    def feature_dim(self) -> int:
        return int(self.holistic.shape[0])

    @property
    def subcategory_count(self) -> int:
        return int(self.subcategories.shape[0])


@dataclass(frozen=True)
class ReferenceSet:
    """All category references plus the single background feature.

    Category ids must be dense 0..C-1; every feature, including the
    background, shares one dimension D.
    """

    categories: tuple[CategoryReference, ...]
    background: np.ndarray
    names: tuple[str, ...]

    def __init__(self, categories, background, names):
        categories = tuple(sorted(categories, key=lambda c: c.category_id))
        _require(len(categories) >= 1, "reference set needs at least one category")
        ids = [c.category_id for c in categories]
        _require(
            ids == list(range(len(categories))),
            f"category ids must be dense 0..C-1, got {ids}",
        )
        names = tuple(str(n) for n in names)
        _require(
            len(names) == len(categories),
            f"got {len(names)} names for {len(categories)} categories",
        )
        background = as_float32(background, "background feature")
        _require(background.ndim == 1, "background feature must be a vector")
        dim = categories[0].feature_dim
        for c in categories:
            _require(
                c.feature_dim == dim,
                f"category {c.category_id} has dim {c.feature_dim}, expected {dim}",
            )
        _require(
            background.shape[0] == dim,
            f"background dim {background.shape[0]} != category dim {dim}",
        )
        _require(float(np.linalg.norm(background)) > 0.0, "background feature has zero norm")
        object.__setattr__(self, "categories", categories)
        object.__setattr__(self, "background", _readonly(background))
        object.__setattr__(self, "names", names)

    @property
    def category_count(self) -> int:
        return len(self.categories)

    @property
    def feature_dim(self) -> int:
        return self.categories[0].feature_dim

    def class_names(self) -> list[str]:
        """Names indexed by label id (0 = background)."""
        return ["background", *self.names]

    def holistic_by_label(self) -> np.ndarray:
        """[C+1, D] holistic features indexed by label id (0 = background)."""
        rows = [self.background] + [c.holistic for c in self.categories]
        return np.stack(rows, axis=0)


@dataclass(frozen=True)
class Region:
    """One mask proposal of a test image together with its pooled feature."""

    mask: SoftMask
    feature: np.ndarray

    def __init__(self, mask, feature):
        _require(isinstance(mask, SoftMask), "region mask must be a SoftMask")
        _require(mask.foreground_count() >= 1, "region mask has no positive weights")
        feature = as_float32(feature, "region feature")
        _require(feature.ndim == 1, "region feature must be a vector")
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "feature", _readonly(feature))


@dataclass(frozen=True)
class RegionSet:
    """All mask proposals of one test image with their pooled features."""

    regions: tuple[Region, ...]
    image_id: str

    def __init__(self, regions, image_id):
        regions = tuple(regions)
        _require(len(regions) >= 1, "region set needs at least one region")
        dim = regions[0].feature.shape[0]
        for i, r in enumerate(regions):
            _require(isinstance(r, Region), "region set entries must be Regions")
            _require(
                r.feature.shape[0] == dim,
                f"region {i} has feature dim {r.feature.shape[0]}, expected {dim}",
            )
        object.__setattr__(self, "regions", regions)
        object.__setattr__(self, "image_id", str(image_id))

    @property
    def feature_dim(self) -> int:
        return int(self.regions[0].feature.shape[0])


@dataclass(frozen=True)
class RankingDistribution:
    """Probability vector over all N! permutations of the selected agents.

    Permutations are indexed in lexicographic order of position tuples
    over 0..N-1 (the canonical ``itertools.permutations`` order).
    """

    agent_ids: tuple[int, ...]
    probs: np.ndarray

    def __init__(self, agent_ids, probs):
        agent_ids = tuple(int(i) for i in agent_ids)
        _require(len(agent_ids) >= 1, "ranking distribution needs at least one agent")
        _require(
            len(set(agent_ids)) == len(agent_ids),
            f"agent ids must be unique, got {agent_ids}",
        )
        p = np.asarray(probs, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(p)):
            raise ValidationError("ranking probabilities contain NaN or Inf")
        expected = math.factorial(len(agent_ids))
        _require(
            p.size == expected,
            f"expected {expected} permutation probabilities, got {p.size}",
        )
        _require(bool(np.all(p >= 0.0)), "ranking probabilities must be nonnegative")
        total = float(p.sum())
        _require(
            abs(total - 1.0) <= 1e-9,
            f"ranking probabilities sum to {total}, expected 1 within 1e-9",
        )
        object.__setattr__(self, "agent_ids", agent_ids)
        object.__setattr__(self, "probs", _readonly(p))

    @property
    def agent_count(self) -> int:
        return len(self.agent_ids)


@dataclass(frozen=True)
class LabelMap:
    """Per-pixel integer class assignments; 0 is background, values run
    0..class_count, and IGNORE_LABEL marks pixels excluded from scoring."""

    height: int
    width: int
    labels: np.ndarray
    class_count: int = field(compare=False)

    def __init__(self, labels, class_count):
        a = np.asarray(labels)
        _require(a.ndim == 2, f"label map must be 2-D, got shape {a.shape}")
        _require(a.size > 0, "label map must have at least one pixel")
        if not np.issubdtype(a.dtype, np.integer):
            f = np.asarray(a, dtype=np.float64)
            if not np.all(np.isfinite(f)) or not np.all(f == np.round(f)):
                raise ValidationError("label map values must be integral")
            a = f.astype(np.int32)
        a = a.astype(np.int32)
        c = int(class_count)
        _require(c >= 1, "class count must be at least 1")
        valid = ((a >= 0) & (a <= c)) | (a == IGNORE_LABEL)
        if not np.all(valid):
            bad = np.unique(a[~valid])
            raise ValidationError(
                f"label map contains values {bad.tolist()} outside 0..{c} and {IGNORE_LABEL}"
            )
        object.__setattr__(self, "height", int(a.shape[0]))
        object.__setattr__(self, "width", int(a.shape[1]))
        object.__setattr__(self, "labels", _readonly(a))
        object.__setattr__(self, "class_count", c)
