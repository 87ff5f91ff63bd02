"""Sequential LoRA fine-tuning runner for exported audit training sets.

Consumes exactly two artifacts from the audit harness - the fine-tune export
JSONL and the LoRA manifest JSON - and never imports the harness itself.
"""

from .dryrun import DryRunReport, dry_run, read_records, token_count
from .errors import EnvironmentUnavailable, FtuneError, SchemaError
from .manifest import DEFAULTS, LoraManifest, default_manifest_path, validate_manifest
from .train import TrainResult, expand_target_modules, probe_environment, train

__version__ = "0.1.0"

__all__ = [
    "DEFAULTS",
    "DryRunReport",
    "EnvironmentUnavailable",
    "FtuneError",
    "LoraManifest",
    "SchemaError",
    "TrainResult",
    "__version__",
    "default_manifest_path",
    "dry_run",
    "expand_target_modules",
    "probe_environment",
    "read_records",
    "token_count",
    "train",
    "validate_manifest",
]
