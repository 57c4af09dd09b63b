"""Label-map rendering, mIoU computation and report emission.

IoU counts are accumulated as integers over the whole dataset (global
TP/FP/FN, not per-image averages). Pixels labeled ``IGNORE_LABEL`` on
either side are excluded from every count. The mean IoU averages only
the classes whose prediction-or-truth union is nonzero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import IGNORE_LABEL, LabelMap, RegionSet, SoftMask, ValidationError

MASK_BINARIZE_THRESHOLD = 0.5


@dataclass(frozen=True)
class EvalReport:
    """Per-class IoU, mean IoU and the full confusion matrix (rows are
    ground truth, columns are prediction, both indexed by label)."""

    class_names: tuple[str, ...]
    per_class_iou: tuple[float | None, ...]
    miou: float
    confusion: np.ndarray = field(compare=False)
    image_count: int

    def __init__(self, class_names, per_class_iou, miou, confusion, image_count):
        class_names = tuple(str(n) for n in class_names)
        per_class_iou = tuple(None if v is None else float(v) for v in per_class_iou)
        n = len(class_names)
        if len(per_class_iou) != n:
            raise ValidationError(
                f"got {len(per_class_iou)} IoU values for {n} classes"
            )
        for v in per_class_iou:
            if v is not None and not (0.0 <= v <= 1.0):
                raise ValidationError(f"IoU {v} outside [0, 1]")
        conf = np.asarray(confusion, dtype=np.int64)
        if conf.shape != (n, n):
            raise ValidationError(
                f"confusion matrix shape {conf.shape} does not match {n} classes"
            )
        if conf.min() < 0:
            raise ValidationError("confusion counts must be nonnegative")
        conf.setflags(write=False)
        object.__setattr__(self, "class_names", class_names)
        object.__setattr__(self, "per_class_iou", per_class_iou)
        object.__setattr__(self, "miou", float(miou))
        object.__setattr__(self, "confusion", conf)
        object.__setattr__(self, "image_count", int(image_count))

    def __eq__(self, other):
        if not isinstance(other, EvalReport):
            return NotImplemented
        return (
            self.class_names == other.class_names
            and self.per_class_iou == other.per_class_iou
            and self.miou == other.miou
            and self.image_count == other.image_count
            and np.array_equal(self.confusion, other.confusion)
        )

    def gt_pixels(self) -> np.ndarray:
        return self.confusion.sum(axis=1)


def render_label_map(
    regions: RegionSet | list[SoftMask],
    labels: list[int],
    height: int,
    width: int,
    class_count: int,
) -> LabelMap:
    """Paint classified proposals onto a background canvas.

    Proposals are binarized at weight >= 0.5 and painted in descending
    area order so smaller (more specific) proposals overwrite larger
    ones; equal-area ties paint the higher label first so the lower
    label wins. The result is independent of input order.
    """
    masks = [r.mask for r in regions.regions] if isinstance(regions, RegionSet) else list(regions)
    if len(masks) != len(labels):
        raise ValidationError(f"got {len(masks)} masks but {len(labels)} labels")
    canvas = np.zeros((height, width), dtype=np.int32)
    painted = []
    for mask, label in zip(masks, labels):
        label = int(label)
        if not (0 <= label <= class_count):
            raise ValidationError(f"label {label} outside 0..{class_count}")
        if (mask.height, mask.width) != (height, width):
            raise ValidationError(
                f"mask extent {(mask.height, mask.width)} does not match "
                f"canvas {(height, width)}"
            )
        binary = mask.weights >= MASK_BINARIZE_THRESHOLD
        painted.append((int(binary.sum()), label, binary))
    painted.sort(key=lambda e: (-e[0], -e[1]))
    for _, label, binary in painted:
        canvas[binary] = label
    return LabelMap(canvas, class_count)


def confusion_matrix(pred: LabelMap, gt: LabelMap) -> np.ndarray:
    """Integer confusion counts for one image; rows gt, columns pred."""
    if (pred.height, pred.width) != (gt.height, gt.width):
        raise ValidationError(
            f"prediction extent {(pred.height, pred.width)} does not match "
            f"ground truth {(gt.height, gt.width)}"
        )
    if pred.class_count != gt.class_count:
        raise ValidationError(
            f"class counts differ: pred {pred.class_count} vs gt {gt.class_count}"
        )
    n = gt.class_count + 1
    p = pred.labels.reshape(-1)
    g = gt.labels.reshape(-1)
    keep = (p != IGNORE_LABEL) & (g != IGNORE_LABEL)
    counts = np.bincount(g[keep] * n + p[keep], minlength=n * n)
    return counts.reshape(n, n).astype(np.int64)


def compute_miou(
    pred: list[LabelMap], gt: list[LabelMap], class_names: list[str] | None = None
) -> EvalReport:
    """Dataset-level IoU report from paired prediction/truth label maps."""
    if len(pred) != len(gt) or not pred:
        raise ValidationError(
            f"need equal, nonzero numbers of maps, got {len(pred)} pred / {len(gt)} gt"
        )
    n = gt[0].class_count + 1
    conf = np.zeros((n, n), dtype=np.int64)
    for p, g in zip(pred, gt):
        conf += confusion_matrix(p, g)
    tp = np.diag(conf)
    union = conf.sum(axis=1) + conf.sum(axis=0) - tp
    ious: list[float | None] = []
    present = []
    for c in range(n):
        if union[c] > 0:
            iou = float(tp[c]) / float(union[c])
            ious.append(iou)
            present.append(iou)
        else:
            ious.append(None)
    if not present:
        raise ValidationError("no class has any pixels in prediction or ground truth")
    if class_names is None:
        class_names = ["background"] + [f"class_{c}" for c in range(1, n)]
    if len(class_names) != n:
        raise ValidationError(f"got {len(class_names)} names for {n} classes")
    # sequential sum, not np.mean: keeps the value reproducible by any
    # straight-line reimplementation regardless of numpy's pairwise blocking
    return EvalReport(
        class_names=class_names,
        per_class_iou=ious,
        miou=sum(present) / len(present),
        confusion=conf,
        image_count=len(pred),
    )


def emit_report(report: EvalReport, out_dir, config_echo: dict | None = None) -> tuple[Path, Path]:
    """Write ``report.json`` (lossless) and ``report.txt`` (aligned table).

    ``config_echo`` records the run configuration alongside the numbers
    so ablation rows stay attributable.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "miou": report.miou,
        "image_count": report.image_count,
        "ignore_label": IGNORE_LABEL,
        "config": config_echo or {},
        "classes": [
            {
                "label": c,
                "name": report.class_names[c],
                "iou": report.per_class_iou[c],
                "pixels": int(report.gt_pixels()[c]),
            }
            for c in range(len(report.class_names))
        ],
        "confusion": report.confusion.tolist(),
    }
    json_path = out / "report.json"
    json_path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")

    name_w = max(len("class"), max(len(n) for n in report.class_names))
    lines = [
        f"mIoU: {report.miou * 100:.2f}  (over {sum(v is not None for v in report.per_class_iou)} "
        f"classes, {report.image_count} images; pixels labeled {IGNORE_LABEL} ignored)"
    ]
    if config_echo:
        lines.append("config: " + ", ".join(f"{k}={v}" for k, v in sorted(config_echo.items())))
    lines.append("")
    lines.append(f"{'class':<{name_w}}  {'IoU %':>7}  {'pixels':>10}")
    for c, name in enumerate(report.class_names):
        iou = report.per_class_iou[c]
        iou_s = f"{iou * 100:7.2f}" if iou is not None else f"{'-':>7}"
        lines.append(f"{name:<{name_w}}  {iou_s}  {int(report.gt_pixels()[c]):>10}")
    txt_path = out / "report.txt"
    txt_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return json_path, txt_path


def load_report(json_path) -> tuple[EvalReport, dict]:
    """Parse ``report.json`` back into an EvalReport and its config echo."""
    doc = json.loads(Path(json_path).read_text(encoding="utf-8"))
    classes = sorted(doc["classes"], key=lambda e: e["label"])
    report = EvalReport(
        class_names=[e["name"] for e in classes],
        per_class_iou=[e["iou"] for e in classes],
        miou=doc["miou"],
        confusion=np.asarray(doc["confusion"], dtype=np.int64),
        image_count=doc["image_count"],
    )
    return report, doc.get("config", {})
