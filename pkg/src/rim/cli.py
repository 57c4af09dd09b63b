"""Command-line front end.

Subcommands:

    synth       generate a synthetic world under --out
    build-refs  build a reference bundle from a manifest into <out>/refs
    classify    classify test proposals; writes predictions under --out
    eval        score saved predictions against the manifest ground truth
    ablate      run the standard ablation ladder on one manifest

Configuration precedence is built-in defaults, then the --config JSON
file, then explicit flags. The RIM_LOG environment variable sets the
log level (DEBUG, INFO, WARNING, ERROR). Exit codes: 0 on success, 2
for invalid input or configuration, 3 for numeric or internal failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .core import LabelMap, NumericError, RimError, ValidationError
from .evaluation import compute_miou, emit_report
from .interchange import ManifestError, TensorFormatError, load_manifest, read_array
from .matching import MAX_AGENTS, MatchConfig
from .pipeline import (
    build_reference_set,
    classify_manifest,
    evaluate_predictions,
    save_predictions,
    save_prompt_points,
)
from .reference import DEFAULT_ATTENTION_THRESHOLD, load_reference_set, save_reference_set
from .synth import WorldSpec, default_arms, generate_world, run_ablation

log = logging.getLogger("rim.cli")

_INPUT_ERRORS = (
    ManifestError,
    TensorFormatError,
    ValidationError,
    FileNotFoundError,
    IsADirectoryError,
    NotADirectoryError,
    PermissionError,
    json.JSONDecodeError,
)


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration shared by all subcommands."""

    agents: int = 4
    subcats: int = 8
    use_subcategories: bool = True
    naive: bool = False
    attn_threshold: float = DEFAULT_ATTENTION_THRESHOLD
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        def put(name, value):
            object.__setattr__(self, name, value)

        for name in ("agents", "subcats", "seed", "threads"):
            put(name, int(getattr(self, name)))
        put("attn_threshold", float(self.attn_threshold))
        for name in ("use_subcategories", "naive"):
            if not isinstance(getattr(self, name), bool):
                raise ValidationError(f"config field {name!r} must be a boolean")
        if not (1 <= self.agents <= MAX_AGENTS):
            raise ValidationError(f"agents must lie in 1..{MAX_AGENTS}, got {self.agents}")
        if self.subcats < 1:
            raise ValidationError(f"subcats must be positive, got {self.subcats}")
        if not (0.0 < self.attn_threshold < 1.0):
            raise ValidationError(
                f"attn-threshold must lie in (0, 1), got {self.attn_threshold}"
            )
        if self.seed < 0:
            raise ValidationError(f"seed must be nonnegative, got {self.seed}")
        if self.threads < 1:
            raise ValidationError(f"threads must be positive, got {self.threads}")

    def match_config(self) -> MatchConfig:
        return MatchConfig(
            agent_count=self.agents,
            subcategory_count=self.subcats,
            use_subcategories=self.use_subcategories,
        )


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Overlay defaults with the --config file, then with explicit flags."""
    values = {f.name: getattr(RunConfig(), f.name) for f in fields(RunConfig)}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise ValidationError(f"config file does not exist: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path}: config is not valid JSON: {e}") from e
        if not isinstance(doc, dict):
            raise ValidationError(f"{path}: config must be a JSON object")
        unknown = sorted(set(doc) - set(values))
        if unknown:
            raise ValidationError(f"{path}: unknown config fields {unknown}")
        values.update(doc)
    for flag in ("agents", "subcats", "attn_threshold", "seed", "threads"):
        given = getattr(args, flag, None)
        if given is not None:
            values[flag] = given
    if getattr(args, "no_subcats", None):
        values["use_subcategories"] = False
    if getattr(args, "naive", None):
        values["naive"] = True
    return RunConfig(**values)


def _add_common(p: argparse.ArgumentParser, *, manifest: bool = True) -> None:
    if manifest:
        p.add_argument("--manifest", required=True, help="path to the dataset manifest JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", default=None, help="JSON file with run configuration")
    p.add_argument("--agents", type=int, default=None, help=f"agent pool size (1..{MAX_AGENTS})")
    p.add_argument("--subcats", type=int, default=None, help="subcategory count per category")
    p.add_argument(
        "--no-subcats",
        dest="no_subcats",
        action="store_const",
        const=True,
        default=None,
        help="disable subcategory voting at classification time",
    )
    p.add_argument(
        "--naive",
        action="store_const",
        const=True,
        default=None,
        help="use the nearest-reference baseline instead of ranking match",
    )
    p.add_argument(
        "--attn-threshold",
        dest="attn_threshold",
        type=float,
        default=None,
        help="attention binarization threshold in (0, 1)",
    )
    p.add_argument("--seed", type=int, default=None, help="seed for all random draws")
    p.add_argument("--threads", type=int, default=None, help="worker threads for classification")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rim",
        description="Open-vocabulary region classification via reference "
        "features and ranking-distribution matching.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("synth", help="generate a synthetic world")
    _add_common(p, manifest=False)
    p.add_argument("--world", default=None, help="world spec JSON (defaults when omitted)")

    _add_common(sub.add_parser("build-refs", help="build a reference bundle"))

    p = sub.add_parser("classify", help="classify test proposals")
    _add_common(p)
    p.add_argument("--refs", default=None, help="reference bundle directory (default <out>/refs)")

    _add_common(sub.add_parser("eval", help="score saved predictions"))
    _add_common(sub.add_parser("ablate", help="run the standard ablation ladder"))
    return parser


def cmd_synth(args: argparse.Namespace, cfg: RunConfig) -> int:
    spec = WorldSpec.load(args.world) if args.world else WorldSpec()
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    manifest_path = generate_world(spec, args.out)
    print(
        f"world: {args.out} (classes={spec.class_count}, "
        f"refs={spec.class_count * spec.images_per_class}, tests={spec.test_image_count})"
    )
    print(f"manifest: {manifest_path}")
    return 0


def cmd_build_refs(args: argparse.Namespace, cfg: RunConfig) -> int:
    manifest = load_manifest(args.manifest)
    result = build_reference_set(
        manifest,
        subcategory_count=cfg.subcats,
        attn_threshold=cfg.attn_threshold,
        seed=cfg.seed,
    )
    ref_dir = Path(args.out) / "refs"
    index = save_reference_set(result.references, ref_dir)
    save_prompt_points(result, ref_dir / "prompt_points.json")
    print(f"references: {index}")
    if result.fallback_count:
        print(f"attention fallbacks: {result.fallback_count}")
    return 0


def _load_refs(args: argparse.Namespace):
    ref_dir = Path(args.refs) if getattr(args, "refs", None) else Path(args.out) / "refs"
    if not (ref_dir / "index.json").is_file():
        raise ValidationError(
            f"no reference bundle at {ref_dir}; run 'rim build-refs' first"
        )
    return load_reference_set(ref_dir)


def cmd_classify(args: argparse.Namespace, cfg: RunConfig) -> int:
    manifest = load_manifest(args.manifest)
    refs = _load_refs(args)
    predictions = classify_manifest(
        manifest,
        refs,
        cfg.match_config(),
        naive=cfg.naive,
        threads=cfg.threads,
    )
    path = save_predictions(predictions, args.out)
    total = sum(len(p.labels) for p in predictions)
    print(f"classified {total} regions over {len(predictions)} images")
    print(f"predictions: {path}")
    return 0


def cmd_eval(args: argparse.Namespace, cfg: RunConfig) -> int:
    manifest = load_manifest(args.manifest)
    out = Path(args.out)
    pred_path = out / "predictions.json"
    if not pred_path.is_file():
        raise ValidationError(f"no predictions at {pred_path}; run 'rim classify' first")
    doc = json.loads(pred_path.read_text(encoding="utf-8"))
    gt_ids = sorted(t.image_id for t in manifest.tests)
    entries = sorted(doc.get("images", []), key=lambda e: e["image_id"])
    pred_ids = [e["image_id"] for e in entries]
    if pred_ids != gt_ids:
        raise ValidationError(
            f"predictions cover images {pred_ids}, manifest expects {gt_ids}"
        )
    by_id = {t.image_id: t for t in manifest.tests}
    pred_maps = []
    gt_maps = []
    for e in entries:
        pred_maps.append(LabelMap(read_array(out / e["rendered"]), manifest.category_count))
        gt_maps.append(
            LabelMap(read_array(by_id[e["image_id"]].label_map), manifest.category_count)
        )
    names = ["background"] + manifest.names()
    report = compute_miou(pred_maps, gt_maps, names)
    emit_report(
        report,
        out,
        config_echo={"agents": cfg.agents, "naive": cfg.naive, "seed": cfg.seed},
    )
    print(f"mIoU: {report.miou * 100:.2f} over {report.image_count} images")
    return 0


def cmd_ablate(args: argparse.Namespace, cfg: RunConfig) -> int:
    rows = run_ablation(
        args.manifest,
        default_arms(cfg.match_config()),
        args.out,
        attn_threshold=cfg.attn_threshold,
        seed=cfg.seed,
        threads=cfg.threads,
    )
    print((Path(args.out) / "ablation.txt").read_text(encoding="utf-8"), end="")
    return 0 if rows else 3


_COMMANDS = {
    "synth": cmd_synth,
    "build-refs": cmd_build_refs,
    "classify": cmd_classify,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
}


def _setup_logging() -> None:
    name = os.environ.get("RIM_LOG", "WARNING").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return _COMMANDS[args.command](args, cfg)
    except _INPUT_ERRORS as e:
        log.debug("input error", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericError as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return 3
    except RimError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except Exception as e:  # keep the CLI contract: anything unexpected is 3
        log.exception("unexpected failure")
        print(f"internal error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
