"""Registry of datasets the extractor knows how to lay out.

Only the 20-category VOC-style benchmark is wired up. The registry
pins the class list and the per-split scene counts the synthetic
backend generates, so two exports of the same dataset, split and seed
are byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

from .tensor_io import ExportError

VOC_CATEGORIES = (
    "aeroplane",
    "bicycle",
    "bird",
    "boat",
    "bottle",
    "bus",
    "car",
    "cat",
    "chair",
    "cow",
    "diningtable",
    "dog",
    "horse",
    "motorbike",
    "person",
    "pottedplant",
    "sheep",
    "sofa",
    "train",
    "tvmonitor",
)


@dataclass(frozen=True)
class DatasetSpec:
    """One extractable dataset: its class names and split sizes."""

    name: str
    class_names: tuple[str, ...]
    splits: Mapping[str, int]

    def prompt_for(self, name: str) -> str:
        return f"a photo of a {name}"

    def split_sizes(self) -> dict[str, int]:
        return dict(self.splits)


_DATASETS: dict[str, DatasetSpec] = {
    "voc2012": DatasetSpec(
        name="voc2012",
        class_names=VOC_CATEGORIES,
        splits=MappingProxyType({"train": 120, "val": 60}),
    ),
}


def available_datasets() -> list[str]:
    return sorted(_DATASETS)


def get_dataset(name: str) -> DatasetSpec:
    """Look up a dataset by name, with the known names in the error."""
    spec = _DATASETS.get(name)
    if spec is None:
        raise ExportError(
            f"unknown dataset {name!r}; available: {', '.join(available_datasets())}"
        )
    return spec


def require_split(spec: DatasetSpec, split: str) -> int:
    """Return the scene count for ``split`` or fail with the options."""
    if split not in spec.splits:
        raise ExportError(
            f"dataset {spec.name!r} has no split {split!r}; "
            f"available: {', '.join(sorted(spec.splits))}"
        )
    return int(spec.splits[split])
