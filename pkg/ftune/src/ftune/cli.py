"""Command line for the fine-tuning runner.

Exit codes: 0 on success, 1 on schema/usage errors, 2 when training
prerequisites (CUDA, peft, trl) are unavailable.
"""

from __future__ import annotations

import argparse
import json
import sys

from .dryrun import dry_run
from .errors import EnvironmentUnavailable, FtuneError
from .manifest import default_manifest_path, validate_manifest
from .train import train

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ENVIRONMENT = 2


def cmd_validate(args) -> int:
    manifest = validate_manifest(args.manifest)
    print(json.dumps(manifest.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_dry_run(args) -> int:
    manifest = validate_manifest(args.manifest)
    report = dry_run(manifest, args.datasets)
    print(report.render(), end="")
    return EXIT_OK


def cmd_train(args) -> int:
    result = train(args.manifest, args.datasets, args.out)
    for adapter in result.adapter_dirs:
        print(f"adapter: {adapter}")
    for log in result.loss_logs:
        print(f"loss log: {log}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftune",
        description="Validate, dry-run, or run sequential LoRA fine-tuning on exported audit training sets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse a manifest, apply defaults, and print the result")
    p.add_argument("--manifest", default=str(default_manifest_path()), help="manifest JSON (default: shipped)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("dry-run", help="check datasets against a manifest without loading weights")
    p.add_argument("datasets", nargs="+", help="exported training JSONL files")
    p.add_argument("--manifest", default=str(default_manifest_path()))
    p.set_defaults(func=cmd_dry_run)

    p = sub.add_parser("train", help="run sequential stage training (requires a GPU environment)")
    p.add_argument("datasets", nargs="+", help="exported training JSONL files")
    p.add_argument("--manifest", default=str(default_manifest_path()))
    p.add_argument("--out", required=True, help="directory for adapters and loss logs")
    p.set_defaults(func=cmd_train)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EnvironmentUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENVIRONMENT
    except FtuneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def entrypoint() -> None:
    sys.exit(main())
