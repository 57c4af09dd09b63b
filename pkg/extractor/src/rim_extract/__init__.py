"""Extraction tool that materializes a segmentation dataset split as the
manifest + tensor-file layout the ``rim`` classifier loads.

The two packages share no code: this side produces ``manifest.json``
and ``.rimt`` files, the classifier consumes them. The shipped backend
is a deterministic synthetic stand-in for the real model stack, so the
export path can run and be tested on machines without model weights.
"""

from .backend import SyntheticBackend
from .datasets import DatasetSpec, available_datasets, get_dataset
from .export import ExportResult, export_dataset
from .tensor_io import ExportError, write_tensor

__version__ = "0.1.0"

__all__ = [
    "DatasetSpec",
    "ExportError",
    "ExportResult",
    "SyntheticBackend",
    "available_datasets",
    "export_dataset",
    "get_dataset",
    "write_tensor",
    "__version__",
]
