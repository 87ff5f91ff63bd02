"""LoRA manifest schema: defaults, validation, and round-trip serialization.

The manifest is the JSON file the audit harness writes next to its fine-tune
exports. Every field has a default, so an empty object validates to the
reference adapter recipe; unknown fields are rejected rather than ignored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import SchemaError

DEFAULTS: dict = {
    "base_model": "NTQAI/Nxcode-CQ-7B-orpo",
    "rank": 32,
    "target_modules": ["attention", "mlp", "lm_head"],
    "precision": "bfloat16",
    "batch_size": 32,
    "epochs": 40,
    "learning_rate": 2e-4,
    "grad_accum": 2,
    "stages": ["ethereum", "cve"],
}

PRECISIONS = ("bfloat16", "float16", "float32")


@dataclass(frozen=True)
class LoraManifest:
    base_model: str = DEFAULTS["base_model"]
    rank: int = DEFAULTS["rank"]
    target_modules: tuple[str, ...] = tuple(DEFAULTS["target_modules"])
    precision: str = DEFAULTS["precision"]
    batch_size: int = DEFAULTS["batch_size"]
    epochs: int = DEFAULTS["epochs"]
    learning_rate: float = DEFAULTS["learning_rate"]
    grad_accum: int = DEFAULTS["grad_accum"]
    stages: tuple[str, ...] = tuple(DEFAULTS["stages"])

    def to_dict(self) -> dict:
        return {
            "base_model": self.base_model,
            "rank": self.rank,
            "target_modules": list(self.target_modules),
            "precision": self.precision,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "grad_accum": self.grad_accum,
            "stages": list(self.stages),
        }


def _require_positive_int(obj: dict, name: str) -> int:
    value = obj[name]
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise SchemaError(f"{name}: expected a positive integer, got {value!r}")
    return value


def _require_nonempty_str(value, path: str) -> str:
    if not isinstance(value, str) or not value.strip():
        raise SchemaError(f"{path}: expected a non-empty string, got {value!r}")
    return value


def _require_str_list(obj: dict, name: str) -> tuple[str, ...]:
    value = obj[name]
    if not isinstance(value, list) or not value:
        raise SchemaError(f"{name}: expected a non-empty list of strings, got {value!r}")
    return tuple(_require_nonempty_str(item, f"{name}[{i}]") for i, item in enumerate(value))


def validate_manifest(source: str | Path | dict) -> LoraManifest:
    """Parse, default-fill, and validate a manifest file or dict.

    Validation is a fixed point: feeding a returned manifest's to_dict()
    back through produces an equal manifest.
    """
    if isinstance(source, dict):
        raw = dict(source)
        origin = "manifest"
    else:
        path = Path(source)
        if not path.is_file():
            raise SchemaError(f"manifest: file not found: {path}")
        try:
            raw = json.loads(path.read_text())
        except ValueError as exc:
            raise SchemaError(f"manifest: invalid JSON in {path} ({exc})") from exc
        origin = str(path)
        if not isinstance(raw, dict):
            raise SchemaError(f"manifest: {origin} must hold a JSON object")

    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise SchemaError(f"{unknown[0]}: unknown manifest field")
    merged = {**DEFAULTS, **raw}

    base_model = _require_nonempty_str(merged["base_model"], "base_model")
    rank = _require_positive_int(merged, "rank")
    batch_size = _require_positive_int(merged, "batch_size")
    epochs = _require_positive_int(merged, "epochs")
    grad_accum = _require_positive_int(merged, "grad_accum")

    lr = merged["learning_rate"]
    if isinstance(lr, bool) or not isinstance(lr, (int, float)) or not lr > 0:
        raise SchemaError(f"learning_rate: expected a positive number, got {lr!r}")

    precision = merged["precision"]
    if precision not in PRECISIONS:
        raise SchemaError(f"precision: expected one of {PRECISIONS}, got {precision!r}")

    target_modules = _require_str_list(merged, "target_modules")
    stages = _require_str_list(merged, "stages")
    if len(set(stages)) != len(stages):
        raise SchemaError(f"stages: stage names must be unique, got {list(stages)!r}")

    return LoraManifest(
        base_model=base_model,
        rank=rank,
        target_modules=target_modules,
        precision=precision,
        batch_size=batch_size,
        epochs=epochs,
        learning_rate=float(lr),
        grad_accum=grad_accum,
        stages=stages,
    )


def default_manifest_path() -> Path:
    """The manifest asset shipped inside the package."""
    return Path(__file__).resolve().parent / "assets" / "default_manifest.json"
