"""Corpus loading, validation, splits, and fine-tune export."""

import json
import random

import pytest

from scaudit.corpus import (
    Corpus,
    CorpusSplit,
    export_finetune_set,
    load_corpus,
    load_split,
    save_split,
    split_corpus,
    write_manifest,
)
from scaudit.errors import (
    BadFractionsError,
    CorpusFormatError,
    DuplicateIdError,
    EmptySourceError,
    MissingFileError,
    TemplateNotFoundError,
    UnknownVulnerabilityTypeError,
)
from scaudit.parsing import VulnType


def write_record(root, cid, *, tag="cve", labels=None, source="contract C { }"):
    rel = f"{cid}.sol"
    (root / rel).write_text(source)
    return {
        "id": cid,
        "source_path": rel,
        "labels": labels if labels is not None else [
            {"function_name": "f", "vulnerability_type": "IntegerOverflow", "description": "d"}
        ],
        "dataset_tag": tag,
    }


def write_corpus(root, records):
    manifest = root / "manifest.jsonl"
    manifest.write_text("\n".join(json.dumps(r) for r in records) + "\n")
    return manifest


class TestLoadCorpus:
    def test_replay_fixture(self, replay_corpus):
        assert len(replay_corpus) == 12
        assert replay_corpus.ids() == [f"c{i:02d}" for i in range(1, 13)]
        record = replay_corpus.by_id("c04")
        assert record.dataset_tag == "cve"
        assert record.labels[0].vulnerability_type is VulnType.BAD_RANDOMNESS
        assert "contract Lottery" in record.source_code

    def test_large_synthetic_corpus(self, tmp_path):
        types = ["IntegerOverflow", "WrongLogic", "BadRandomness", "AccessControl", "TypoConstructor", "TokenDevalue"]
        records = [
            write_record(
                tmp_path,
                f"r{i:03d}",
                labels=[{"function_name": "f", "vulnerability_type": types[i % 6], "description": ""}],
            )
            for i in range(108)
        ]
        corpus = load_corpus(tmp_path, write_corpus(tmp_path, records))
        assert len(corpus) == 108
        assert len(set(corpus.ids())) == 108

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(MissingFileError):
            load_corpus(tmp_path, tmp_path / "nope.jsonl")

    def test_duplicate_id(self, tmp_path):
        r = write_record(tmp_path, "dup")
        with pytest.raises(DuplicateIdError):
            load_corpus(tmp_path, write_corpus(tmp_path, [r, r]))

    def test_bad_dataset_tag(self, tmp_path):
        r = write_record(tmp_path, "x", tag="mystery")
        with pytest.raises(CorpusFormatError):
            load_corpus(tmp_path, write_corpus(tmp_path, [r]))

    def test_missing_source_file(self, tmp_path):
        r = write_record(tmp_path, "x")
        r["source_path"] = "gone.sol"
        with pytest.raises(MissingFileError):
            load_corpus(tmp_path, write_corpus(tmp_path, [r]))

    def test_empty_source(self, tmp_path):
        r = write_record(tmp_path, "x", source="   \n")
        with pytest.raises(EmptySourceError):
            load_corpus(tmp_path, write_corpus(tmp_path, [r]))

    def test_invalid_json_line(self, tmp_path):
        (tmp_path / "x.sol").write_text("contract C {}")
        manifest = tmp_path / "manifest.jsonl"
        manifest.write_text("{not json}\n")
        with pytest.raises(CorpusFormatError):
            load_corpus(tmp_path, manifest)

    def test_cve_requires_single_label(self, tmp_path):
        label = {"function_name": "f", "vulnerability_type": "WrongLogic", "description": ""}
        r = write_record(tmp_path, "x", labels=[label, label])
        with pytest.raises(CorpusFormatError):
            load_corpus(tmp_path, write_corpus(tmp_path, [r]))

    def test_ethereum_allows_zero_or_many_labels(self, fixtures_dir):
        corpus = load_corpus(fixtures_dir / "eth3", fixtures_dir / "eth3" / "manifest.jsonl")
        by_count = {r.id: len(r.labels) for r in corpus}
        assert by_count == {"e01": 2, "e02": 1, "e03": 0}

    def test_unknown_vulnerability_type(self, tmp_path):
        r = write_record(
            tmp_path, "x", labels=[{"function_name": "f", "vulnerability_type": "gremlins", "description": ""}]
        )
        with pytest.raises(UnknownVulnerabilityTypeError):
            load_corpus(tmp_path, write_corpus(tmp_path, [r]))

    def test_other_rejected_in_ground_truth(self, tmp_path):
        r = write_record(
            tmp_path, "x", labels=[{"function_name": "f", "vulnerability_type": "Other", "description": ""}]
        )
        with pytest.raises(UnknownVulnerabilityTypeError):
            load_corpus(tmp_path, write_corpus(tmp_path, [r]))

    def test_label_needs_function_name(self, tmp_path):
        r = write_record(
            tmp_path, "x", labels=[{"function_name": "  ", "vulnerability_type": "WrongLogic", "description": ""}]
        )
        with pytest.raises(CorpusFormatError):
            load_corpus(tmp_path, write_corpus(tmp_path, [r]))

    def test_label_aliases_canonicalized(self, tmp_path):
        r = write_record(
            tmp_path,
            "x",
            labels=[{"function_name": "f", "vulnerability_type": "integer overflow", "description": ""}],
        )
        corpus = load_corpus(tmp_path, write_corpus(tmp_path, [r]))
        assert corpus.records[0].labels[0].vulnerability_type is VulnType.INTEGER_OVERFLOW


class TestWriteManifest:
    def test_round_trip(self, tmp_path, replay_corpus):
        out = tmp_path / "normalized.jsonl"
        write_manifest(replay_corpus, out)
        # Sources live next to the original manifest, so reload from there.
        reloaded = load_corpus(replay_corpus.root, out)
        assert reloaded.ids() == replay_corpus.ids()
        assert reloaded.records[0].labels == replay_corpus.records[0].labels


class TestSplitCorpus:
    def make_corpus(self, n):
        from scaudit.corpus import ContractRecord

        records = tuple(
            ContractRecord(f"c{i:03d}", f"c{i:03d}.sol", "contract C {}", (), "cve") for i in range(n)
        )
        return Corpus(records)

    def test_sizes_round_half_up(self):
        split = split_corpus(self.make_corpus(10), (0.8, 0.1, 0.1), seed=0)
        assert (len(split.train_ids), len(split.validation_ids), len(split.test_ids)) == (8, 1, 1)

    def test_remainder_goes_to_train(self):
        split = split_corpus(self.make_corpus(10), (0.5, 0.25, 0.25), seed=0)
        # round(2.5) -> 3 for both held-out subsets, remainder 4 to train
        assert (len(split.train_ids), len(split.validation_ids), len(split.test_ids)) == (4, 3, 3)

    def test_clamped_when_rounding_overshoots(self):
        split = split_corpus(self.make_corpus(3), (0.0, 0.5, 0.5), seed=0)
        assert (len(split.train_ids), len(split.validation_ids), len(split.test_ids)) == (0, 2, 1)

    def test_deterministic(self):
        corpus = self.make_corpus(20)
        a = split_corpus(corpus, (0.8, 0.1, 0.1), seed=42)
        b = split_corpus(corpus, (0.8, 0.1, 0.1), seed=42)
        assert a == b

    def test_seed_changes_partition(self):
        corpus = self.make_corpus(30)
        a = split_corpus(corpus, (0.5, 0.25, 0.25), seed=1)
        b = split_corpus(corpus, (0.5, 0.25, 0.25), seed=2)
        assert a.validation_ids != b.validation_ids

    def test_matches_stdlib_shuffle(self):
        corpus = self.make_corpus(10)
        split = split_corpus(corpus, (0.8, 0.1, 0.1), seed=123)
        ids = sorted(corpus.ids())
        random.Random(123).shuffle(ids)
        assert list(split.train_ids) == ids[:8]
        assert list(split.validation_ids) == ids[8:9]
        assert list(split.test_ids) == ids[9:]

    def test_partition_is_disjoint_and_complete(self):
        corpus = self.make_corpus(17)
        split = split_corpus(corpus, (0.6, 0.2, 0.2), seed=5)
        groups = [set(split.train_ids), set(split.validation_ids), set(split.test_ids)]
        assert sum(len(g) for g in groups) == 17
        assert set().union(*groups) == set(corpus.ids())

    @pytest.mark.parametrize("fractions", [(0.5, 0.5), (-0.1, 0.6, 0.5), (0.5, 0.2, 0.2)])
    def test_bad_fractions(self, fractions):
        with pytest.raises(BadFractionsError):
            split_corpus(self.make_corpus(4), fractions, seed=0)


class TestSplitStore:
    def test_round_trip(self, tmp_path):
        split = CorpusSplit(("a", "b"), ("c",), ("d",), 9, (0.5, 0.25, 0.25))
        path = tmp_path / "split.json"
        save_split(split, path)
        assert load_split(path) == split

    def test_overlap_rejected(self, tmp_path):
        path = tmp_path / "split.json"
        path.write_text(json.dumps({"train_ids": ["a"], "validation_ids": ["a"], "test_ids": []}))
        with pytest.raises(CorpusFormatError):
            load_split(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFileError):
            load_split(tmp_path / "nope.json")

    def test_fixture_split(self, replay_dir):
        split = load_split(replay_dir / "split.json")
        assert split.validation_ids == ("c03", "c04", "c06", "c07", "c09", "c12")
        assert split.test_ids == ("c01", "c02", "c05", "c08", "c10", "c11")
        assert split.train_ids == ()


class TestExportFinetune:
    def test_cve_export(self, tmp_path, fixtures_dir):
        corpus = load_corpus(fixtures_dir / "cve28", fixtures_dir / "cve28" / "manifest.jsonl")
        out = tmp_path / "train.jsonl"
        assert export_finetune_set(corpus, "cve", out) == 28
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert len(rows) == 28
        for row in rows:
            assert set(row) == {"prompt", "completion", "meta"}
            completion = json.loads(row["completion"])
            assert len(completion["output_list"]) == 1
            assert row["meta"]["dataset_tag"] == "cve"

    def test_ethereum_export(self, tmp_path, fixtures_dir):
        corpus = load_corpus(fixtures_dir / "eth3", fixtures_dir / "eth3" / "manifest.jsonl")
        out = tmp_path / "train.jsonl"
        assert export_finetune_set(corpus, "ethereum", out) == 3
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert rows[0]["completion"] == "Contract PiggyBank vulnerability list: Access Control, Integer Overflow."
        assert rows[2]["completion"] == "Contract SafeStore vulnerability list: none."

    def test_unknown_template_leaves_no_file(self, tmp_path, replay_corpus):
        out = tmp_path / "train.jsonl"
        with pytest.raises(TemplateNotFoundError):
            export_finetune_set(replay_corpus, "nonsense", out)
        assert not out.exists()

    def test_tag_mismatch_leaves_no_file(self, tmp_path, replay_corpus):
        out = tmp_path / "train.jsonl"
        with pytest.raises(TemplateNotFoundError):
            export_finetune_set(replay_corpus, "ethereum", out)  # corpus is cve-tagged
        assert not out.exists()
