"""Default LoRA fine-tune manifest written next to fine-tune exports.

The manifest is a plain JSON file consumed by the separate fine-tuning
package; the defaults here are the harness' reference adapter recipe.
"""

from __future__ import annotations

import json
from pathlib import Path

DEFAULT_LORA_MANIFEST: dict = {
    "base_model": "NTQAI/Nxcode-CQ-7B-orpo",
    "rank": 32,
    "target_modules": ["attention", "mlp", "lm_head"],
    "precision": "bfloat16",
    "batch_size": 32,
    "epochs": 40,
    "learning_rate": 0.0002,
    "grad_accum": 2,
    "stages": ["ethereum", "cve"],
}


def write_lora_manifest(path: str | Path, overrides: dict | None = None) -> dict:
    """Write the default manifest (plus overrides) and return the dict."""
    manifest = dict(DEFAULT_LORA_MANIFEST)
    manifest.update(overrides or {})
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
