"""Command line front end.

    extract --dataset voc2012 --split val --out exported/

Exit codes: 0 on success, 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import sys

from .datasets import available_datasets
from .export import DEFAULT_REFS_PER_CATEGORY, export_dataset
from .tensor_io import ExportError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extract",
        description=(
            "Export a dataset split as the manifest + tensor layout the "
            "rim classifier loads."
        ),
    )
    parser.add_argument(
        "--dataset",
        required=True,
        help=f"dataset name ({', '.join(available_datasets())})",
    )
    parser.add_argument("--split", required=True, help="split name, e.g. val")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=0, help="backend seed")
    parser.add_argument(
        "--limit", type=int, default=None, help="cap the number of test images"
    )
    parser.add_argument(
        "--refs-per-category",
        type=int,
        default=DEFAULT_REFS_PER_CATEGORY,
        help="reference images synthesized per category",
    )
    parser.add_argument(
        "--overwrite",
        action="store_true",
        help="allow writing into a non-empty output directory",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = export_dataset(
            args.dataset,
            args.split,
            args.out,
            seed=args.seed,
            limit=args.limit,
            refs_per_category=args.refs_per_category,
            overwrite=args.overwrite,
        )
    except (ExportError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(
        f"wrote {result.manifest_path} "
        f"({result.reference_count} references, {result.test_count} test images)"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
