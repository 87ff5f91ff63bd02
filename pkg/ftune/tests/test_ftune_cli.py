"""The ftune command line: exit codes and printed output."""

import json

import pytest

from ftune import cli
from ftune.manifest import DEFAULTS


class TestValidate:
    def test_default_manifest(self, capsys):
        assert cli.main(["validate"]) == 0
        printed = json.loads(capsys.readouterr().out)
        assert printed == DEFAULTS

    def test_explicit_manifest(self, exported_manifest, capsys):
        assert cli.main(["validate", "--manifest", str(exported_manifest)]) == 0
        assert json.loads(capsys.readouterr().out)["rank"] == 32

    def test_schema_error_exits_one(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"rank": 0}))
        assert cli.main(["validate", "--manifest", str(path)]) == 1
        assert capsys.readouterr().err.startswith("error: rank")


class TestDryRun:
    def test_reports_28_records(self, cve_export, capsys):
        assert cli.main(["dry-run", str(cve_export)]) == 0
        out = capsys.readouterr().out
        assert "28 training records" in out
        assert "stage cve: 28" in out

    def test_multiple_datasets(self, cve_export, eth_export, capsys):
        assert cli.main(["dry-run", str(eth_export), str(cve_export)]) == 0
        assert "31 training records" in capsys.readouterr().out

    def test_empty_dataset_exits_one(self, tmp_path, capsys):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        assert cli.main(["dry-run", str(empty)]) == 1
        assert "error:" in capsys.readouterr().err


class TestTrain:
    def test_gated_environment_exits_two(self, cve_export, tmp_path, capsys):
        rc = cli.main(["train", str(cve_export), "--out", str(tmp_path / "out")])
        assert rc == 2
        err = capsys.readouterr().err
        assert err.startswith("error:")
        assert "CUDA" in err

    def test_schema_error_still_exits_one(self, tmp_path, capsys):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        assert cli.main(["train", str(empty), "--out", str(tmp_path / "out")]) == 1
        assert "error:" in capsys.readouterr().err


class TestParser:
    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit):
            cli.main(["frobnicate"])

    def test_no_args(self):
        with pytest.raises(SystemExit):
            cli.main([])
