"""Labeled contract corpus: manifest loading, splits, fine-tune export.

A corpus is described by a line-delimited JSON manifest; each record points at
a Solidity source file (stored separately under a root directory) and carries
its ground-truth labels and dataset tag.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from . import prompting
from .errors import (
    BadFractionsError,
    CorpusFormatError,
    DuplicateIdError,
    EmptySourceError,
    MissingFileError,
    UnknownVulnerabilityTypeError,
    WriteFailureError,
)
from .parsing import VulnType, load_alias_table, match_vuln_type, normalize_function_name

DATASET_TAGS = ("ethereum", "cve")


@dataclass(frozen=True)
class GroundTruthLabel:
    """One annotated vulnerability: where it lives and what kind it is."""

    function_name: str
    vulnerability_type: VulnType
    description: str = ""


@dataclass(frozen=True)
class ContractRecord:
    id: str
    source_path: str
    source_code: str
    labels: tuple[GroundTruthLabel, ...]
    dataset_tag: str


@dataclass(frozen=True)
class Corpus:
    records: tuple[ContractRecord, ...]
    root: str = ""

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def by_id(self, contract_id: str) -> ContractRecord:
        for r in self.records:
            if r.id == contract_id:
                return r
        raise KeyError(contract_id)

    def truths(self) -> dict[str, list[GroundTruthLabel]]:
        return {r.id: list(r.labels) for r in self.records}

    def subset(self, ids: set[str] | list[str]) -> "Corpus":
        wanted = set(ids)
        return Corpus(tuple(r for r in self.records if r.id in wanted), self.root)


@dataclass(frozen=True)
class CorpusSplit:
    """Disjoint train/validation/test partition of corpus ids."""

    train_ids: tuple[str, ...]
    validation_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    seed: int
    fractions: tuple[float, float, float]

    def subset_ids(self, name: str) -> tuple[str, ...]:
        try:
            return {"train": self.train_ids, "validation": self.validation_ids, "test": self.test_ids}[name]
        except KeyError:
            raise CorpusFormatError(f"unknown split subset {name!r}") from None


def _parse_label(obj: dict, record_id: str, alias_table: dict[str, VulnType]) -> GroundTruthLabel:
    if not isinstance(obj, dict):
        raise CorpusFormatError(f"record {record_id!r}: label must be an object")
    raw_type = obj.get("vulnerability_type")
    if not isinstance(raw_type, str) or not raw_type.strip():
        raise CorpusFormatError(f"record {record_id!r}: label lacks vulnerability_type")
    vt = match_vuln_type(raw_type, alias_table)
    if vt is VulnType.OTHER:
        raise UnknownVulnerabilityTypeError(raw_type)
    function_name = obj.get("function_name", "")
    if not isinstance(function_name, str) or not normalize_function_name(function_name):
        raise CorpusFormatError(f"record {record_id!r}: label function_name is empty after normalization")
    description = obj.get("description", "")
    if not isinstance(description, str):
        raise CorpusFormatError(f"record {record_id!r}: label description must be a string")
    return GroundTruthLabel(function_name, vt, description)


def load_corpus(root: str | Path, manifest: str | Path) -> Corpus:
    """Load and validate a manifest plus its source tree.

    Manifest lines look like
    ``{"id": ..., "source_path": ..., "labels": [...], "dataset_tag": ...}``.
    Validation failures raise before any partial corpus is returned.
    """
    root = Path(root)
    manifest = Path(manifest)
    if not manifest.is_file():
        raise MissingFileError(f"manifest not found: {manifest}")
    alias_table = load_alias_table()
    records: list[ContractRecord] = []
    seen_ids: set[str] = set()
    for lineno, line in enumerate(manifest.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except ValueError as exc:
            raise CorpusFormatError(f"manifest line {lineno}: invalid JSON ({exc})") from exc
        if not isinstance(obj, dict):
            raise CorpusFormatError(f"manifest line {lineno}: record must be an object")
        record_id = obj.get("id")
        if not isinstance(record_id, str) or not record_id:
            raise CorpusFormatError(f"manifest line {lineno}: missing id")
        if record_id in seen_ids:
            raise DuplicateIdError(f"duplicate contract id {record_id!r}")
        seen_ids.add(record_id)
        tag = obj.get("dataset_tag")
        if tag not in DATASET_TAGS:
            raise CorpusFormatError(f"record {record_id!r}: dataset_tag must be one of {DATASET_TAGS}")
        source_path = obj.get("source_path")
        if not isinstance(source_path, str) or not source_path:
            raise CorpusFormatError(f"record {record_id!r}: missing source_path")
        full_path = root / source_path
        if not full_path.is_file():
            raise MissingFileError(f"record {record_id!r}: source file not found: {full_path}")
        source_code = full_path.read_text()
        if not source_code.strip():
            raise EmptySourceError(f"record {record_id!r}: source file is empty: {full_path}")
        raw_labels = obj.get("labels", [])
        if not isinstance(raw_labels, list):
            raise CorpusFormatError(f"record {record_id!r}: labels must be a list")
        labels = tuple(_parse_label(lbl, record_id, alias_table) for lbl in raw_labels)
        if tag == "cve" and len(labels) != 1:
            raise CorpusFormatError(f"record {record_id!r}: cve records carry exactly one label")
        records.append(ContractRecord(record_id, source_path, source_code, labels, tag))
    return Corpus(tuple(records), str(root))


def write_manifest(corpus: Corpus, path: str | Path) -> None:
    """Serialize records back to a manifest (sources stay on disk)."""
    lines = []
    for r in corpus.records:
        obj = {
            "id": r.id,
            "source_path": r.source_path,
            "labels": [
                {
                    "function_name": lbl.function_name,
                    "vulnerability_type": lbl.vulnerability_type.value,
                    "description": lbl.description,
                }
                for lbl in r.labels
            ],
            "dataset_tag": r.dataset_tag,
        }
        lines.append(json.dumps(obj, sort_keys=True, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def _round_half_up(x: float) -> int:
    return int(x + 0.5) if x >= 0 else -int(-x + 0.5)


def split_corpus(corpus: Corpus, fractions: tuple[float, float, float], seed: int) -> CorpusSplit:
    """Deterministically partition ids into train/validation/test.

    Validation and test sizes are the rounded fraction*N values; the remainder
    goes to train. The same seed always reproduces the same partition.
    """
    if len(fractions) != 3:
        raise BadFractionsError("expected three fractions (train, validation, test)")
    fracs = tuple(float(f) for f in fractions)
    if any(f < 0 for f in fracs):
        raise BadFractionsError("fractions must be non-negative")
    if abs(sum(fracs) - 1.0) > 1e-9:
        raise BadFractionsError(f"fractions must sum to 1, got {sum(fracs)}")
    ids = sorted(r.id for r in corpus.records)
    rng = random.Random(seed)
    rng.shuffle(ids)
    n = len(ids)
    n_val = min(_round_half_up(fracs[1] * n), n)
    n_test = min(_round_half_up(fracs[2] * n), n - n_val)
    n_train = n - n_val - n_test
    train = ids[:n_train]
    val = ids[n_train : n_train + n_val]
    test = ids[n_train + n_val :]
    return CorpusSplit(tuple(train), tuple(val), tuple(test), seed, fracs)


def save_split(split: CorpusSplit, path: str | Path) -> None:
    obj = {
        "train_ids": list(split.train_ids),
        "validation_ids": list(split.validation_ids),
        "test_ids": list(split.test_ids),
        "seed": split.seed,
        "fractions": list(split.fractions),
    }
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_split(path: str | Path) -> CorpusSplit:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"split file not found: {path}")
    obj = json.loads(path.read_text())
    try:
        split = CorpusSplit(
            tuple(obj["train_ids"]),
            tuple(obj["validation_ids"]),
            tuple(obj["test_ids"]),
            int(obj.get("seed", 0)),
            tuple(float(f) for f in obj.get("fractions", (0.0, 0.0, 0.0))),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusFormatError(f"malformed split file {path}: {exc}") from exc
    groups = (set(split.train_ids), set(split.validation_ids), set(split.test_ids))
    if (groups[0] & groups[1]) or (groups[0] & groups[2]) or (groups[1] & groups[2]):
        raise CorpusFormatError(f"split file {path} has overlapping subsets")
    return split


def export_finetune_set(corpus: Corpus, template_id: str, out: str | Path) -> int:
    """Render every record through a fine-tune template into a JSONL file.

    Each line carries {"prompt", "completion", "meta"}; returns the record
    count. Template validation happens before the output file is touched.
    """
    prompting.get_finetune_template(template_id)  # raises TemplateNotFoundError early
    lines = []
    for record in corpus.records:
        prompt, completion = prompting.render_finetune_prompt(record, template_id)
        obj = {
            "prompt": prompt,
            "completion": completion,
            "meta": {"id": record.id, "dataset_tag": record.dataset_tag, "source_path": record.source_path},
        }
        lines.append(json.dumps(obj, sort_keys=True, separators=(",", ":")))
    try:
        Path(out).write_text("\n".join(lines) + ("\n" if lines else ""))
    except OSError as exc:
        raise WriteFailureError(f"cannot write export file {out}: {exc}") from exc
    return len(lines)
