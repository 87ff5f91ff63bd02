"""Sequential LoRA fine-tuning over the manifest's stage list.

Schema problems surface as SchemaError before any environment probing, so a
bad export fails identically on a laptop and on a GPU box. The actual
training path imports torch/peft/trl lazily and is guarded by
EnvironmentUnavailable; everything else in this package runs without them.
"""

from __future__ import annotations

import csv
import importlib.util
from dataclasses import dataclass
from pathlib import Path

from .dryrun import dry_run, read_records
from .errors import EnvironmentUnavailable
from .manifest import LoraManifest, validate_manifest

# Coarse manifest module groups -> concrete projection names used by the
# reference base model family.
MODULE_GROUPS = {
    "attention": ["q_proj", "k_proj", "v_proj", "o_proj"],
    "mlp": ["gate_proj", "up_proj", "down_proj"],
    "lm_head": ["lm_head"],
}

REQUIRED_PACKAGES = ("torch", "transformers", "datasets", "peft", "trl")


@dataclass(frozen=True)
class TrainResult:
    adapter_dirs: list[Path]
    loss_logs: list[Path]


def probe_environment() -> list[str]:
    """Names of missing training prerequisites; empty when training can run."""
    missing = [name for name in REQUIRED_PACKAGES if importlib.util.find_spec(name) is None]
    if "torch" not in missing:
        import torch

        if not torch.cuda.is_available():
            missing.insert(0, "CUDA device")
    else:
        missing.insert(0, "CUDA device")
    return missing


def expand_target_modules(manifest: LoraManifest) -> list[str]:
    modules: list[str] = []
    for group in manifest.target_modules:
        modules.extend(MODULE_GROUPS.get(group, [group]))
    return modules


def train(
    manifest: LoraManifest | str | Path | dict,
    dataset_paths: str | Path | list[str | Path],
    out_dir: str | Path,
) -> TrainResult:
    """Fine-tune each stage in order, saving one adapter and loss log per stage.

    Raises SchemaError for manifest/dataset problems and EnvironmentUnavailable
    when the GPU stack is missing - in that order, so dataset validation never
    depends on the environment.
    """
    if not isinstance(manifest, LoraManifest):
        manifest = validate_manifest(manifest)
    dry_run(manifest, dataset_paths)  # schema gate; raises SchemaError on bad input

    missing = probe_environment()
    if missing:
        raise EnvironmentUnavailable(
            "training needs a CUDA GPU and the 'train' extras "
            f"(pip install 'ftune[train]'); missing: {', '.join(missing)}"
        )
    return _run_training(manifest, dataset_paths, Path(out_dir))


def _write_loss_log(path: Path, rows: list[tuple[int, float]]) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["step", "loss"])
        for step, loss in rows:
            writer.writerow([step, repr(loss)])


def _run_training(manifest: LoraManifest, dataset_paths, out_dir: Path) -> TrainResult:
    # Only reachable with the full GPU stack installed; imports stay local so
    # the rest of the package works without it.
    import torch
    from datasets import Dataset
    from peft import LoraConfig, get_peft_model
    from transformers import AutoModelForCausalLM, AutoTokenizer
    from trl import SFTConfig, SFTTrainer

    if isinstance(dataset_paths, (str, Path)):
        dataset_paths = [dataset_paths]
    records: list[dict] = []
    for path in dataset_paths:
        records.extend(read_records(path))

    dtype = {"bfloat16": torch.bfloat16, "float16": torch.float16, "float32": torch.float32}[
        manifest.precision
    ]
    tokenizer = AutoTokenizer.from_pretrained(manifest.base_model)
    model = AutoModelForCausalLM.from_pretrained(manifest.base_model, torch_dtype=dtype)
    model = get_peft_model(
        model,
        LoraConfig(r=manifest.rank, target_modules=expand_target_modules(manifest), task_type="CAUSAL_LM"),
    )

    out_dir.mkdir(parents=True, exist_ok=True)
    adapter_dirs: list[Path] = []
    loss_logs: list[Path] = []
    for stage in manifest.stages:
        stage_records = [r for r in records if r["meta"]["dataset_tag"] == stage]
        dataset = Dataset.from_list(
            [{"text": r["prompt"] + r["completion"]} for r in stage_records]
        )
        stage_dir = out_dir / f"stage_{stage}"
        trainer = SFTTrainer(
            model=model,
            train_dataset=dataset,
            processing_class=tokenizer,
            args=SFTConfig(
                output_dir=str(stage_dir),
                per_device_train_batch_size=manifest.batch_size,
                gradient_accumulation_steps=manifest.grad_accum,
                num_train_epochs=manifest.epochs,
                learning_rate=manifest.learning_rate,
                logging_steps=1,
                save_strategy="no",
                report_to=[],
            ),
        )
        trainer.train()
        model = trainer.model  # warm start the next stage from this one
        model.save_pretrained(stage_dir)
        adapter_dirs.append(stage_dir)

        log_path = out_dir / f"loss_{stage}.csv"
        steps = [
            (entry["step"], entry["loss"])
            for entry in trainer.state.log_history
            if "loss" in entry
        ]
        _write_loss_log(log_path, steps)
        loss_logs.append(log_path)
    return TrainResult(adapter_dirs, loss_logs)
