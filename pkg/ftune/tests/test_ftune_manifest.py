"""Manifest parsing, defaulting, validation, and idempotence."""

import json

import pytest

from ftune.errors import SchemaError
from ftune.manifest import DEFAULTS, LoraManifest, default_manifest_path, validate_manifest


class TestDefaults:
    def test_empty_object_yields_reference_recipe(self):
        manifest = validate_manifest({})
        assert manifest == LoraManifest()
        assert manifest.base_model == "NTQAI/Nxcode-CQ-7B-orpo"
        assert manifest.rank == 32
        assert manifest.target_modules == ("attention", "mlp", "lm_head")
        assert manifest.precision == "bfloat16"
        assert manifest.batch_size == 32
        assert manifest.epochs == 40
        assert manifest.learning_rate == pytest.approx(2e-4)
        assert manifest.grad_accum == 2
        assert manifest.stages == ("ethereum", "cve")

    def test_omitted_rank_defaults_to_32(self):
        manifest = validate_manifest({"epochs": 5})
        assert manifest.rank == 32
        assert manifest.epochs == 5

    def test_shipped_asset_equals_defaults(self):
        manifest = validate_manifest(default_manifest_path())
        assert manifest == LoraManifest()
        assert json.loads(default_manifest_path().read_text()) == DEFAULTS

    def test_harness_export_manifest_validates(self, exported_manifest):
        assert validate_manifest(exported_manifest) == LoraManifest()


class TestFileHandling:
    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"rank": 8, "stages": ["cve"]}))
        manifest = validate_manifest(path)
        assert manifest.rank == 8
        assert manifest.stages == ("cve",)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SchemaError, match="file not found"):
            validate_manifest(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text("{nope")
        with pytest.raises(SchemaError, match="invalid JSON"):
            validate_manifest(path)

    def test_non_object_json(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text("[1, 2]")
        with pytest.raises(SchemaError, match="JSON object"):
            validate_manifest(path)


class TestRejections:
    @pytest.mark.parametrize(
        "overrides, field",
        [
            ({"learning_rate": -2e-4}, "learning_rate"),
            ({"learning_rate": 0}, "learning_rate"),
            ({"learning_rate": "fast"}, "learning_rate"),
            ({"learning_rate": True}, "learning_rate"),
            ({"rank": 0}, "rank"),
            ({"rank": -32}, "rank"),
            ({"rank": 32.0}, "rank"),
            ({"rank": True}, "rank"),
            ({"batch_size": 0}, "batch_size"),
            ({"epochs": -1}, "epochs"),
            ({"grad_accum": "two"}, "grad_accum"),
            ({"precision": "int4"}, "precision"),
            ({"base_model": ""}, "base_model"),
            ({"base_model": 7}, "base_model"),
            ({"target_modules": []}, "target_modules"),
            ({"target_modules": "attention"}, "target_modules"),
            ({"target_modules": ["attention", ""]}, r"target_modules\[1\]"),
            ({"stages": []}, "stages"),
            ({"stages": ["cve", "cve"]}, "stages"),
            ({"stages": ["cve", 3]}, r"stages\[1\]"),
        ],
    )
    def test_bad_values_name_the_field(self, overrides, field):
        with pytest.raises(SchemaError, match=f"^{field}"):
            validate_manifest({**overrides})

    def test_unknown_field_rejected(self):
        with pytest.raises(SchemaError, match="^dropout: unknown"):
            validate_manifest({"dropout": 0.1})


class TestIdempotence:
    def test_validating_own_output_is_a_fixed_point(self):
        first = validate_manifest({"rank": 16, "learning_rate": 1e-4, "stages": ["cve"]})
        second = validate_manifest(first.to_dict())
        assert first == second
        assert second.to_dict() == first.to_dict()

    def test_default_round_trip(self):
        manifest = validate_manifest({})
        assert validate_manifest(manifest.to_dict()) == manifest
