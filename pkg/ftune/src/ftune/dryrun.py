"""Dataset/manifest compatibility checks that never load model weights.

A dry run reads the exported JSONL training records, attributes each one to a
manifest stage via its meta.dataset_tag, and summarizes counts, token lengths,
and the first record - enough to catch a bad export before renting a GPU.
"""

from __future__ import annotations

import json
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

from .errors import SchemaError
from .manifest import LoraManifest

TOKEN_BINS = (64, 128, 256, 512, 1024, 2048)


def _bin_label(edges: tuple[int, ...], index: int) -> str:
    if index == 0:
        return f"<{edges[0]}"
    if index == len(edges):
        return f">={edges[-1]}"
    return f"{edges[index - 1]}-{edges[index] - 1}"


def token_count(record: dict) -> int:
    """Whitespace token count of the full training text (prompt + completion)."""
    return len(record["prompt"].split()) + len(record["completion"].split())


@dataclass(frozen=True)
class DryRunReport:
    stage_counts: dict[str, int]
    token_histogram: dict[str, int]
    first_record: dict

    @property
    def total(self) -> int:
        return sum(self.stage_counts.values())

    def render(self) -> str:
        lines = [f"{self.total} training records"]
        for stage, count in self.stage_counts.items():
            lines.append(f"  stage {stage}: {count}")
        lines.append("token-length histogram (whitespace tokens per record):")
        for label, count in self.token_histogram.items():
            lines.append(f"  {label:>10}: {count}")
        meta = self.first_record.get("meta", {})
        lines.append(f"first record (id {meta.get('id', '?')}, tag {meta.get('dataset_tag', '?')}):")
        prompt = self.first_record["prompt"]
        preview = prompt if len(prompt) <= 400 else prompt[:400] + "..."
        lines.extend("  | " + line for line in preview.splitlines())
        lines.append("  completion:")
        completion = self.first_record["completion"]
        preview = completion if len(completion) <= 400 else completion[:400] + "..."
        lines.extend("  | " + line for line in preview.splitlines())
        return "\n".join(lines) + "\n"


def read_records(path: str | Path) -> list[dict]:
    """Load one exported JSONL file, validating every line's shape."""
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"dataset: file not found: {path}")
    text = path.read_text()
    if not text.strip():
        raise SchemaError(f"dataset: {path} is empty")
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except ValueError as exc:
            raise SchemaError(f"line {lineno}: invalid JSON in {path} ({exc})") from exc
        if not isinstance(obj, dict):
            raise SchemaError(f"line {lineno}: expected an object, got {type(obj).__name__}")
        for key in ("prompt", "completion"):
            if not isinstance(obj.get(key), str) or not obj[key]:
                raise SchemaError(f"line {lineno}: {key}: expected a non-empty string")
        meta = obj.get("meta")
        if not isinstance(meta, dict) or not isinstance(meta.get("dataset_tag"), str):
            raise SchemaError(f"line {lineno}: meta.dataset_tag: expected a string")
        records.append(obj)
    return records


def dry_run(manifest: LoraManifest, dataset_paths: str | Path | Iterable[str | Path]) -> DryRunReport:
    """Validate exported datasets against the manifest without touching weights."""
    if isinstance(dataset_paths, (str, Path)):
        dataset_paths = [dataset_paths]
    records: list[dict] = []
    for path in dataset_paths:
        records.extend(read_records(path))
    if not records:
        raise SchemaError("dataset: no training records found")

    stage_counts = {stage: 0 for stage in manifest.stages}
    for i, record in enumerate(records):
        tag = record["meta"]["dataset_tag"]
        if tag not in stage_counts:
            raise SchemaError(
                f"record {i}: meta.dataset_tag: {tag!r} is not a manifest stage {list(manifest.stages)!r}"
            )
        stage_counts[tag] += 1

    histogram = {_bin_label(TOKEN_BINS, i): 0 for i in range(len(TOKEN_BINS) + 1)}
    for record in records:
        n = token_count(record)
        index = sum(1 for edge in TOKEN_BINS if n >= edge)
        histogram[_bin_label(TOKEN_BINS, index)] += 1

    return DryRunReport(stage_counts, histogram, records[0])
