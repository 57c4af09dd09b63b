"""Bit-exact tensor file format (``.rimt``) and the dataset manifest.

A ``.rimt`` file is a fixed header followed by the row-major float32
little-endian payload:

    offset  size  field
    0       4     magic ``RIMT``
    4       2     version, u16 LE (currently 1)
    6       1     dtype code, u8 (1 = float32 LE)
    7       1     ndim, u8
    8       4*n   shape, ndim x u32 LE
    8+4n    ...   payload, 4 * product(shape) bytes

The manifest is a JSON file naming categories, per-category reference
entries (feature map + attention stack + optional foreground mask) and
test entries (feature map + proposal masks + ground-truth label map).
All paths are relative to the manifest's directory.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    AttentionStack,
    LabelMap,
    RimError,
    SoftMask,
    Tensor,
    ValidationError,
)

MAGIC = b"RIMT"
VERSION = 1
DTYPE_FLOAT32 = 1

_HEADER_PREFIX = struct.Struct("<4sHBB")


class TensorFormatError(RimError):
    """A ``.rimt`` file violates the format; ``kind`` names the failure."""

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


class ManifestError(RimError):
    """The manifest file or one of its referenced files is invalid."""


@dataclass(frozen=True)
class TensorFileHeader:
    magic: bytes
    version: int
    dtype_code: int
    shape: tuple[int, ...]

    @property
    def payload_bytes(self) -> int:
        return 4 * math.prod(self.shape)

    def encode(self) -> bytes:
        head = _HEADER_PREFIX.pack(self.magic, self.version, self.dtype_code, len(self.shape))
        return head + struct.pack(f"<{len(self.shape)}I", *self.shape)


def _decode_header(blob: bytes, origin: str) -> tuple[TensorFileHeader, int]:
    if len(blob) < _HEADER_PREFIX.size:
        raise TensorFormatError(
            "truncated",
            f"{origin}: file has {len(blob)} bytes, shorter than the {_HEADER_PREFIX.size}-byte fixed header",
        )
    magic, version, dtype_code, ndim = _HEADER_PREFIX.unpack_from(blob, 0)
    if magic != MAGIC:
        raise TensorFormatError(
            "bad_magic", f"{origin}: bad magic {magic!r}, expected {MAGIC!r}"
        )
    if version != VERSION:
        raise TensorFormatError(
            "bad_version", f"{origin}: unsupported version {version}, expected {VERSION}"
        )
    if dtype_code != DTYPE_FLOAT32:
        raise TensorFormatError(
            "bad_dtype", f"{origin}: unknown dtype code {dtype_code}, expected {DTYPE_FLOAT32}"
        )
    if ndim < 1:
        raise TensorFormatError("bad_shape", f"{origin}: ndim must be at least 1")
    shape_end = _HEADER_PREFIX.size + 4 * ndim
    if len(blob) < shape_end:
        raise TensorFormatError(
            "truncated",
            f"{origin}: header declares {ndim} dimensions but the shape table is cut off",
        )
    shape = struct.unpack_from(f"<{ndim}I", blob, _HEADER_PREFIX.size)
    if any(s == 0 for s in shape):
        raise TensorFormatError("bad_shape", f"{origin}: shape {shape} has zero-sized dimensions")
    return TensorFileHeader(magic, version, dtype_code, tuple(int(s) for s in shape)), shape_end


def write_tensor(t: Tensor | np.ndarray, path) -> None:
    """Write a tensor as header + row-major float32 LE payload."""
    if not isinstance(t, Tensor):
        t = Tensor.from_array(t)
    header = TensorFileHeader(MAGIC, VERSION, DTYPE_FLOAT32, t.shape)
    payload = np.ascontiguousarray(t.data, dtype="<f4").tobytes()
    Path(path).write_bytes(header.encode() + payload)


def read_tensor(path) -> Tensor:
    """Read a ``.rimt`` file back into a Tensor, bit-exactly."""
    path = Path(path)
    blob = path.read_bytes()
    header, offset = _decode_header(blob, str(path))
    expected = header.payload_bytes
    actual = len(blob) - offset
    if actual < expected:
        raise TensorFormatError(
            "truncated",
            f"{path}: payload truncated, expected {expected} bytes, found {actual}",
        )
    if actual > expected:
        raise TensorFormatError(
            "trailing_data",
            f"{path}: {actual - expected} unexpected bytes after the declared payload",
        )
    data = np.frombuffer(blob, dtype="<f4", count=expected // 4, offset=offset)
    if not np.all(np.isfinite(data)):
        raise TensorFormatError("non_finite", f"{path}: payload contains NaN or Inf values")
    return Tensor(header.shape, data)


def read_array(path) -> np.ndarray:
    """Read a ``.rimt`` file as a shaped numpy array."""
    return read_tensor(path).as_array()


@dataclass(frozen=True)
class CategoryInfo:
    category_id: int
    name: str
    prompt: str


@dataclass(frozen=True)
class ReferenceEntry:
    category_id: int
    features: Path
    attention: Path
    mask: Path | None


@dataclass(frozen=True)
class TestEntry:
    image_id: str
    features: Path
    proposals: tuple[Path, ...]
    label_map: Path


@dataclass(frozen=True)
class Manifest:
    root: Path
    categories: tuple[CategoryInfo, ...]
    references: tuple[ReferenceEntry, ...]
    tests: tuple[TestEntry, ...]
    feature_dim: int

    @property
    def category_count(self) -> int:
        return len(self.categories)

    def names(self) -> list[str]:
        return [c.name for c in self.categories]

    def references_for(self, category_id: int) -> list[ReferenceEntry]:
        return [r for r in self.references if r.category_id == category_id]


def _manifest_path(root: Path, rel, origin: str) -> Path:
    if not isinstance(rel, str) or not rel:
        raise ManifestError(f"{origin}: expected a relative path string, got {rel!r}")
    p = root / rel
    if not p.is_file():
        raise ManifestError(f"{origin}: referenced file does not exist: {p}")
    return p


def _load_checked(path: Path, origin: str) -> np.ndarray:
    try:
        return read_array(path)
    except TensorFormatError as e:
        raise ManifestError(f"{origin}: {e}") from e


def load_manifest(path) -> Manifest:
    """Parse and fully validate a manifest.

    Every referenced tensor is opened and checked against its type
    invariants; feature maps must agree on the feature dimension and
    each test image's proposals must match its label map extent.
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest file does not exist: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ManifestError(f"{path}: manifest is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ManifestError(f"{path}: manifest root must be a JSON object")
    root = path.parent

    raw_categories = doc.get("categories")
    if not isinstance(raw_categories, list) or not raw_categories:
        raise ManifestError(f"{path}: manifest needs a non-empty 'categories' list")
    categories = []
    for i, c in enumerate(raw_categories):
        try:
            categories.append(
                CategoryInfo(int(c["id"]), str(c["name"]), str(c.get("prompt", "")))
            )
        except (TypeError, KeyError, ValueError) as e:
            raise ManifestError(f"{path}: categories[{i}] is malformed: {e}") from e
    ids = [c.category_id for c in categories]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ManifestError(f"{path}: duplicate category ids {dupes}")
    if sorted(ids) != list(range(len(ids))):
        raise ManifestError(f"{path}: category ids must be dense 0..C-1, got {sorted(ids)}")
    categories.sort(key=lambda c: c.category_id)
    class_count = len(categories)

    feature_dim: int | None = None

    def check_features(p: Path, origin: str) -> None:
        nonlocal feature_dim
        a = _load_checked(p, origin)
        if a.ndim != 3:
            raise ManifestError(f"{origin}: feature map must be [h, w, D], got shape {a.shape}")
        if feature_dim is None:
            feature_dim = int(a.shape[2])
        elif int(a.shape[2]) != feature_dim:
            raise ManifestError(
                f"{origin}: feature dim {a.shape[2]} differs from {feature_dim} seen earlier"
            )

    references = []
    for i, r in enumerate(doc.get("references", [])):
        origin = f"{path}: references[{i}]"
        if not isinstance(r, dict):
            raise ManifestError(f"{origin}: must be an object")
        try:
            cat_id = int(r["category_id"])
        except (TypeError, KeyError, ValueError) as e:
            raise ManifestError(f"{origin}: missing or bad category_id: {e}") from e
        if cat_id not in ids:
            raise ManifestError(f"{origin}: unknown category_id {cat_id}")
        features = _manifest_path(root, r.get("features"), f"{origin}.features")
        check_features(features, f"{origin}.features")
        attention = _manifest_path(root, r.get("attention"), f"{origin}.attention")
        attn = _load_checked(attention, f"{origin}.attention")
        try:
            AttentionStack(attn)
        except ValidationError as e:
            raise ManifestError(f"{origin}.attention: {e}") from e
        mask = None
        if r.get("mask") is not None:
            mask = _manifest_path(root, r.get("mask"), f"{origin}.mask")
            m = _load_checked(mask, f"{origin}.mask")
            try:
                SoftMask(m)
            except ValidationError as e:
                raise ManifestError(f"{origin}.mask: {e}") from e
        references.append(ReferenceEntry(cat_id, features, attention, mask))

    cat_with_refs = {r.category_id for r in references}
    missing = [c.category_id for c in categories if c.category_id not in cat_with_refs]
    if missing:
        raise ManifestError(f"{path}: categories {missing} have no reference entries")

    tests = []
    seen_ids: set[str] = set()
    for i, t in enumerate(doc.get("tests", [])):
        origin = f"{path}: tests[{i}]"
        if not isinstance(t, dict):
            raise ManifestError(f"{origin}: must be an object")
        image_id = str(t.get("image_id", ""))
        if not image_id:
            raise ManifestError(f"{origin}: missing image_id")
        if image_id in seen_ids:
            raise ManifestError(f"{origin}: duplicate image_id {image_id!r}")
        seen_ids.add(image_id)
        features = _manifest_path(root, t.get("features"), f"{origin}.features")
        check_features(features, f"{origin}.features")
        raw_proposals = t.get("proposals")
        if not isinstance(raw_proposals, list) or not raw_proposals:
            raise ManifestError(f"{origin}: needs a non-empty 'proposals' list")
        label_path = _manifest_path(root, t.get("label_map"), f"{origin}.label_map")
        gt = _load_checked(label_path, f"{origin}.label_map")
        if gt.ndim != 2:
            raise ManifestError(f"{origin}.label_map: must be 2-D, got shape {gt.shape}")
        try:
            LabelMap(gt, class_count)
        except ValidationError as e:
            raise ManifestError(f"{origin}.label_map: {e}") from e
        proposals = []
        for j, rel in enumerate(raw_proposals):
            p = _manifest_path(root, rel, f"{origin}.proposals[{j}]")
            m = _load_checked(p, f"{origin}.proposals[{j}]")
            try:
                SoftMask(m)
            except ValidationError as e:
                raise ManifestError(f"{origin}.proposals[{j}]: {e}") from e
            if m.shape != gt.shape:
                raise ManifestError(
                    f"{origin}.proposals[{j}]: mask shape {m.shape} does not match "
                    f"label map shape {gt.shape}"
                )
            proposals.append(p)
        tests.append(TestEntry(image_id, features, tuple(proposals), label_path))

    if feature_dim is None:
        raise ManifestError(f"{path}: manifest references no feature maps")
    return Manifest(
        root=root,
        categories=tuple(categories),
        references=tuple(references),
        tests=tuple(tests),
        feature_dim=feature_dim,
    )
