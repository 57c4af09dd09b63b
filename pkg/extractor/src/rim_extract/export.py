"""Export pipeline: synthesize one dataset split into the manifest +
tensor layout the classifier loads.

Every tensor write is atomic and the manifest is written last, so an
interrupted export cannot leave a manifest pointing at missing or
partial files. All manifest paths are relative POSIX paths; moving the
output directory keeps it loadable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .backend import SyntheticBackend
from .datasets import get_dataset, require_split
from .tensor_io import ExportError, atomic_write_bytes, encode_tensor

DEFAULT_REFS_PER_CATEGORY = 3


@dataclass(frozen=True)
class ExportResult:
    manifest_path: Path
    reference_count: int
    test_count: int


def _write(out: Path, rel: str, array) -> str:
    atomic_write_bytes(out / rel, encode_tensor(array))
    return rel


def export_dataset(
    dataset: str,
    split: str,
    out_dir,
    *,
    seed: int = 0,
    limit: int | None = None,
    refs_per_category: int = DEFAULT_REFS_PER_CATEGORY,
    overwrite: bool = False,
    backend: SyntheticBackend | None = None,
) -> ExportResult:
    """Export one split of a registered dataset.

    ``limit`` caps the number of test images; references are always
    exported for every category. A custom ``backend`` overrides the
    default synthetic one (its seed then wins over ``seed``).
    """
    spec = get_dataset(dataset)
    test_count = require_split(spec, split)
    if limit is not None:
        if int(limit) < 1:
            raise ExportError(f"limit must be at least 1, got {limit}")
        test_count = min(test_count, int(limit))
    if refs_per_category < 1:
        raise ExportError(
            f"refs per category must be at least 1, got {refs_per_category}"
        )

    out = Path(out_dir)
    if out.exists() and not out.is_dir():
        raise ExportError(f"output path exists and is not a directory: {out}")
    if out.is_dir() and any(out.iterdir()) and not overwrite:
        raise ExportError(
            f"output directory is not empty: {out} (pass overwrite to reuse it)"
        )
    (out / "refs").mkdir(parents=True, exist_ok=True)
    (out / "tests").mkdir(parents=True, exist_ok=True)

    if backend is None:
        backend = SyntheticBackend(spec.class_names, seed=seed)
    if backend.category_count != len(spec.class_names):
        raise ExportError(
            f"backend has {backend.category_count} categories, "
            f"dataset {spec.name!r} has {len(spec.class_names)}"
        )

    categories = [
        {"id": k, "name": name, "prompt": spec.prompt_for(name)}
        for k, name in enumerate(spec.class_names)
    ]

    references = []
    for k in range(len(spec.class_names)):
        for j in range(refs_per_category):
            art = backend.reference(k, j)
            stem = f"refs/c{k:02d}_r{j}"
            references.append(
                {
                    "category_id": k,
                    "features": _write(out, f"{stem}_feat.rimt", art.features),
                    "attention": _write(out, f"{stem}_attn.rimt", art.attention),
                    "mask": _write(out, f"{stem}_mask.rimt", art.mask),
                }
            )

    tests = []
    for i in range(test_count):
        image_id = f"{split}_{i:04d}"
        art = backend.scene(split, i)
        stem = f"tests/{image_id}"
        proposals = [
            _write(out, f"{stem}_p{j}.rimt", mask)
            for j, mask in enumerate(art.proposals)
        ]
        tests.append(
            {
                "image_id": image_id,
                "features": _write(out, f"{stem}_feat.rimt", art.features),
                "proposals": proposals,
                "label_map": _write(out, f"{stem}_gt.rimt", art.label_map),
            }
        )

    doc = {
        "metadata": {
            "tool": "rim-extract",
            "dataset": spec.name,
            "split": split,
            "seed": int(seed),
            "refs_per_category": int(refs_per_category),
            "test_count": test_count,
            "backend": backend.describe(),
        },
        "categories": categories,
        "references": references,
        "tests": tests,
    }
    manifest_path = out / "manifest.json"
    atomic_write_bytes(
        manifest_path, (json.dumps(doc, indent=2) + "\n").encode("utf-8")
    )
    return ExportResult(manifest_path, len(references), len(tests))
