"""Command-line pipeline: ingest -> split -> audit -> optimize -> ensemble -> eval.

Exit codes: 0 on success, 1 on validation errors, 2 when an audit finished
with partial backend failures (results are still written).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from collections import Counter
from datetime import datetime, timezone
from pathlib import Path

from . import ensemble as ens
from . import evaluation as ev
from . import reports
from .backends import BackendSpec, CompletionCache, GenerationParams, build_backends, fanout
from .corpus import Corpus, load_corpus, load_split, save_split, split_corpus, write_manifest
from .corpus import export_finetune_set
from .errors import ConfigError, MissingFileError, ScauditError
from .lora import write_lora_manifest
from .parsing import build_audit_run, load_alias_table, read_audit_runs, write_audit_runs
from .prompting import render_auditor_prompt
from .similarity import TfidfCosineScorer

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PARTIAL_FAILURE = 2


def _corpus_from_args(args) -> Corpus:
    manifest = Path(args.corpus)
    root = Path(args.root) if args.root else manifest.parent
    return load_corpus(root, manifest)


def _corpus_hash(corpus: Corpus) -> str:
    digest = hashlib.sha256()
    for record in sorted(corpus.records, key=lambda r: r.id):
        digest.update(record.id.encode())
        digest.update(hashlib.sha256(record.source_code.encode()).digest())
    return digest.hexdigest()


def _load_backends_config(path: str | Path):
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"backends config not found: {path}")
    try:
        obj = json.loads(path.read_text())
    except ValueError as exc:
        raise ConfigError(f"backends config {path}: invalid JSON ({exc})") from exc
    raw_specs = obj.get("backends")
    if not isinstance(raw_specs, list) or not raw_specs:
        raise ConfigError(f"backends config {path}: 'backends' must be a non-empty list")
    specs = []
    for entry in raw_specs:
        try:
            specs.append(
                BackendSpec(
                    backend_id=entry["backend_id"],
                    kind=entry["kind"],
                    model_name=entry.get("model_name", ""),
                    endpoint=entry.get("endpoint", ""),
                    auth=entry.get("auth", ""),
                )
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"backends config {path}: malformed backend entry ({exc})") from exc
    replay_fixture = obj.get("replay_fixture")
    if replay_fixture is not None:
        replay_fixture = (path.parent / replay_fixture).resolve()
    params = GenerationParams.from_dict(obj.get("params", {}))
    return specs, replay_fixture, obj.get("mock_responses"), params


def _read_run_manifest(run_dir: Path) -> dict:
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.is_file():
        raise MissingFileError(f"run manifest not found: {manifest_path}")
    return json.loads(manifest_path.read_text())


def _subset_truths(corpus: Corpus, split_path: str | None, subset: str) -> dict:
    truths = corpus.truths()
    if subset == "all" or split_path is None:
        return truths
    split = load_split(split_path)
    wanted = set(split.subset_ids(subset))
    missing = wanted - set(truths)
    if missing:
        raise ConfigError(f"split subset {subset!r} references unknown contracts: {sorted(missing)}")
    return {cid: truths[cid] for cid in wanted}


# --- subcommands ---------------------------------------------------------------


def cmd_ingest(args) -> int:
    corpus = _corpus_from_args(args)
    tag_counts = Counter(r.dataset_tag for r in corpus)
    type_counts = Counter(lbl.vulnerability_type.value for r in corpus for lbl in r.labels)
    print(f"loaded {len(corpus)} contracts from {args.corpus}")
    for tag, count in sorted(tag_counts.items()):
        print(f"  dataset_tag {tag}: {count}")
    for name, count in sorted(type_counts.items()):
        print(f"  label {name}: {count}")
    if args.out:
        write_manifest(corpus, args.out)
        print(f"wrote normalized manifest to {args.out}")
    return EXIT_OK


def cmd_split(args) -> int:
    corpus = _corpus_from_args(args)
    fractions = tuple(float(x) for x in args.fractions.split(","))
    split = split_corpus(corpus, fractions, args.seed)
    save_split(split, args.out)
    print(
        f"split {len(corpus)} contracts (seed {args.seed}): "
        f"train {len(split.train_ids)}, validation {len(split.validation_ids)}, test {len(split.test_ids)}"
    )
    print(f"wrote split to {args.out}")
    return EXIT_OK


def cmd_audit(args) -> int:
    corpus = _corpus_from_args(args)
    specs, replay_fixture, mock_responses, params = _load_backends_config(args.backends)
    if args.params:
        params = GenerationParams.from_dict({**params.to_dict(), **json.loads(Path(args.params).read_text())})
    params.validate()
    backends = build_backends(specs, replay_fixture, mock_responses)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cache_dir = Path(args.cache_dir) if args.cache_dir else out_dir / "cache"
    cache = CompletionCache(cache_dir)

    records = sorted(corpus.records, key=lambda r: r.id)
    prompts = [render_auditor_prompt(r, args.topk) for r in records]
    completions = fanout(backends, prompts, params, parallelism=args.parallelism, cache=cache)

    alias_table = load_alias_table()
    runs = [
        build_audit_run(
            c.backend_id,
            c.contract_id,
            c.raw_text if c.ok else None,
            raw_ref=c.prompt_hash,
            failed=not c.ok,
            alias_table=alias_table,
        )
        for c in completions
    ]
    write_audit_runs(out_dir / "audit_runs.jsonl", runs)

    manifest = {
        "run_id": hashlib.sha256(
            (_corpus_hash(corpus) + json.dumps([s.backend_id for s in specs]) + json.dumps(params.to_dict(), sort_keys=True)).encode()
        ).hexdigest()[:12],
        "created_at": datetime.now(timezone.utc).isoformat(),
        "corpus_manifest": str(Path(args.corpus).resolve()),
        "corpus_hash": _corpus_hash(corpus),
        "topk": args.topk,
        "params": params.to_dict(),
        "model_order": [s.backend_id for s in specs],
        "backends": [
            {"backend_id": s.backend_id, "kind": s.kind, "model_name": s.model_name, "endpoint": s.endpoint, "auth": s.auth}
            for s in specs
        ],
        "parallelism": args.parallelism,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    failures = [c for c in completions if not c.ok]
    cached = sum(1 for c in completions if c.from_cache)
    print(
        f"audited {len(records)} contracts x {len(backends)} backends: "
        f"{len(completions) - len(failures)} ok ({cached} cached), {len(failures)} failed"
    )
    for c in failures:
        print(f"  FAILED {c.backend_id}/{c.contract_id}: {c.error}", file=sys.stderr)
    print(f"wrote {out_dir / 'audit_runs.jsonl'}")
    return EXIT_PARTIAL_FAILURE if failures else EXIT_OK


def cmd_optimize(args) -> int:
    corpus = _corpus_from_args(args)
    run_dir = Path(args.run)
    manifest = _read_run_manifest(run_dir)
    model_order = manifest["model_order"]
    runs = read_audit_runs(run_dir / "audit_runs.jsonl")
    split = load_split(args.split)
    validation_ids = set(split.validation_ids)
    truths = {cid: labels for cid, labels in corpus.truths().items() if cid in validation_ids}
    validation_runs = [r for r in runs if r.contract_id in validation_ids]

    method = args.method.replace("-", "_")
    if method == ens.METHOD_WEIGHTED:
        raw_rates = ens.model_hit_rates(validation_runs, truths, args.k, model_order)
        weights = ens.learn_weights(validation_runs, truths, args.k, model_order)
        config = ens.EnsembleConfig(method=ens.METHOD_WEIGHTED, k=args.k, weights=weights)
        config.validate(model_order)
        by_contract: dict[str, list] = {}
        for r in validation_runs:
            by_contract.setdefault(r.contract_id, []).append(r)
        hits = 0
        for cid in sorted(truths):
            matrix = ens.build_vote_matrix(by_contract.get(cid, []), model_order)
            prediction = ens.weighted_vote(matrix, config)
            if any(ev.direct_hit(prediction, lbl, args.k) for lbl in truths[cid]):
                hits += 1
        provenance = {
            "split": "validation",
            "validation_contracts": len(truths),
            "raw_hit_rates": dict(sorted(raw_rates.items())),
            "validation_hit_rate": hits / len(truths) if truths else 0.0,
        }
    elif method == ens.METHOD_PERM_OPT:
        result = ens.optimize_permutation(validation_runs, truths, args.k, model_order)
        config = ens.EnsembleConfig(method=ens.METHOD_PERM_OPT, k=args.k, permutation=result.permutation)
        config.validate(model_order)
        provenance = {
            "split": "validation",
            "validation_contracts": len(truths),
            "validation_hit_rate": result.hit_rate,
            "candidates_evaluated": result.candidates_evaluated,
        }
    else:
        raise ConfigError(f"unknown method {args.method!r} (expected weighted or perm-opt)")

    ens.save_ensemble_config(config, args.out, provenance)
    print(f"optimized {method} ensemble on {len(truths)} validation contracts")
    if method == ens.METHOD_WEIGHTED:
        for model, w in sorted((config.weights or {}).items()):
            print(f"  weight {model}: {w:.4f}")
    else:
        print(f"  permutation: {' > '.join(config.permutation or ())}")
        print(f"  candidates evaluated: {provenance['candidates_evaluated']}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_ensemble(args) -> int:
    run_dir = Path(args.run)
    manifest = _read_run_manifest(run_dir)
    model_order = manifest["model_order"]
    config = ens.load_ensemble_config(args.config)
    config.validate(model_order)
    runs = read_audit_runs(run_dir / "audit_runs.jsonl")
    by_contract: dict[str, list] = {}
    for r in runs:
        by_contract.setdefault(r.contract_id, []).append(r)
    vote = ens.weighted_vote if config.method == ens.METHOD_WEIGHTED else ens.perm_opt_vote
    predictions = []
    for cid in sorted(by_contract):
        matrix = ens.build_vote_matrix(by_contract[cid], model_order)
        predictions.append(vote(matrix, config))
    out = Path(args.out) if args.out else run_dir / f"predictions_{config.method}.jsonl"
    ens.write_predictions(out, predictions)
    print(f"wrote {len(predictions)} {ens.SYSTEM_IDS[config.method]} predictions to {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    corpus = _corpus_from_args(args)
    run_dir = Path(args.run)
    manifest = _read_run_manifest(run_dir)
    model_order = manifest["model_order"]
    truths = _subset_truths(corpus, args.split, args.subset)
    contracts = sorted(truths)
    if not contracts:
        raise ConfigError("no contracts selected for evaluation")

    config = ev.EvalConfig(
        ks=tuple(int(x) for x in args.ks.split(",")),
        thresholds=tuple(float(x) for x in args.thresholds.split(",")),
        match_modes=tuple(args.modes.split(",")),
    )
    config.validate()
    k_max = max(config.ks)

    runs = [r for r in read_audit_runs(run_dir / "audit_runs.jsonl") if r.contract_id in truths]
    by_contract: dict[str, list] = {}
    for r in runs:
        by_contract.setdefault(r.contract_id, []).append(r)

    predictions_by_system: dict[str, dict[str, ens.RankedPrediction]] = {}
    for r in runs:
        predictions_by_system.setdefault(r.backend_id, {})[r.contract_id] = ens.single_model_prediction(r, k_max)
    single_systems = sorted(predictions_by_system)

    ensemble_systems = []
    for pred_file in sorted(run_dir.glob("predictions_*.jsonl")):
        loaded = [p for p in ens.read_predictions(pred_file) if p.contract_id in truths]
        if not loaded:
            continue
        system_id = loaded[0].system_id
        predictions_by_system[system_id] = {p.contract_id: p for p in loaded}
        ensemble_systems.append(system_id)

    scorer = None
    if ev.MODE_COSINE in config.match_modes:
        fit_texts = [ev.truth_text(lbl) for cid in contracts for lbl in truths[cid]]
        for system in sorted(predictions_by_system):
            for cid in contracts:
                prediction = predictions_by_system[system].get(cid)
                if prediction:
                    fit_texts.extend(p.description for p in prediction.ranked_pairs)
        scorer = TfidfCosineScorer(fit_texts)

    rows = ev.evaluate(predictions_by_system, truths, config, scorer)
    confusions = {
        system: ev.confusion(predictions_by_system[system], truths) for system in sorted(predictions_by_system)
    }

    scenarios: dict[str, tuple[list, str]] = {}
    if ensemble_systems and single_systems:
        def single_rate(system: str) -> float:
            preds = predictions_by_system[system]
            hits = sum(
                1
                for cid in contracts
                if any(ev.direct_hit(preds.get(cid), lbl, k_max) for lbl in truths[cid])
            )
            return hits / len(contracts)

        best_single = sorted(single_systems, key=lambda s: (-single_rate(s), s))[0]
        matrices = {
            cid: ens.build_vote_matrix(by_contract.get(cid, []), model_order) for cid in contracts
        }
        for system in sorted(ensemble_systems):
            full_single = {
                cid: predictions_by_system[best_single].get(cid)
                or ens.RankedPrediction(cid, [], system_id=best_single)
                for cid in contracts
            }
            full_ens = {
                cid: predictions_by_system[system].get(cid) or ens.RankedPrediction(cid, [], system_id=system)
                for cid in contracts
            }
            records = ev.scenario_analysis(full_single, full_ens, truths, matrices, k_max)
            scenarios[system] = (records, best_single)

    out_dir = Path(args.out) if args.out else run_dir / "reports"
    written = reports.write_report_files(out_dir, rows, config, confusions, scenarios)
    print(f"evaluated {len(contracts)} contracts across {len(predictions_by_system)} systems")
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_report(args) -> int:
    run_dir = Path(args.run)
    reports_dir = Path(args.reports) if args.reports else run_dir / "reports"
    metrics_txt = reports_dir / "metrics.txt"
    if not metrics_txt.is_file():
        raise MissingFileError(f"no metrics.txt under {reports_dir}; run eval first")
    print(metrics_txt.read_text(), end="")
    extra = sorted(p.name for p in reports_dir.glob("*.csv"))
    if extra:
        print("\nreport files:")
        for name in extra:
            print(f"  {reports_dir / name}")
    return EXIT_OK


def cmd_export_finetune(args) -> int:
    corpus = _corpus_from_args(args)
    if args.split:
        split = load_split(args.split)
        corpus = corpus.subset(set(split.subset_ids(args.subset)))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    count = export_finetune_set(corpus, args.template, out)
    manifest_path = Path(args.lora_manifest) if args.lora_manifest else out.parent / "lora_manifest.json"
    write_lora_manifest(manifest_path)
    print(f"exported {count} {args.template} training records to {out}")
    print(f"wrote LoRA manifest to {manifest_path}")
    return EXIT_OK


# --- parser ---------------------------------------------------------------------


def _add_corpus_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--corpus", required=True, help="path to the corpus manifest (JSONL)")
    parser.add_argument("--root", default=None, help="source tree root (default: manifest directory)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scaudit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a corpus manifest and source tree")
    _add_corpus_args(p)
    p.add_argument("--out", default=None, help="write a normalized manifest here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="deterministically partition the corpus")
    _add_corpus_args(p)
    p.add_argument("--fractions", default="0.8,0.1,0.1", help="train,validation,test fractions")
    p.add_argument("--split-seed", "--seed", dest="seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("audit", help="prompt every backend over every contract")
    _add_corpus_args(p)
    p.add_argument("--backends", required=True, help="backend registry JSON")
    p.add_argument("--params", default=None, help="generation params JSON overriding the registry")
    p.add_argument("--topk", type=int, default=5)
    p.add_argument("--parallelism", type=int, default=4)
    p.add_argument("--cache-dir", default=None, help="completion cache (default: <out>/cache)")
    p.add_argument("--out", required=True, help="run directory")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("optimize", help="learn ensemble weights or a priority permutation")
    _add_corpus_args(p)
    p.add_argument("--run", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--method", required=True, choices=["weighted", "perm-opt"])
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("ensemble", help="aggregate per-model findings into predictions")
    p.add_argument("--run", required=True)
    p.add_argument("--config", required=True, help="ensemble config JSON from optimize")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    _add_corpus_args(p)
    p.add_argument("--run", required=True)
    p.add_argument("--split", default=None)
    p.add_argument("--subset", default="all", choices=["all", "train", "validation", "test"])
    p.add_argument("--ks", default="1,5")
    p.add_argument("--thresholds", default="0.5,0.7,0.9")
    p.add_argument("--modes", default="direct,cosine")
    p.add_argument("--out", default=None, help="report directory (default: <run>/reports)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="print the rendered metric table for a run")
    p.add_argument("--run", required=True)
    p.add_argument("--reports", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("export-finetune", help="render training pairs and a LoRA manifest")
    _add_corpus_args(p)
    p.add_argument("--template", required=True)
    p.add_argument("--split", default=None, help="optional split file for subsetting")
    p.add_argument("--subset", default="train", choices=["train", "validation", "test"])
    p.add_argument("--out", required=True)
    p.add_argument("--lora-manifest", default=None)
    p.set_defaults(func=cmd_export_finetune)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScauditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def entrypoint() -> None:  # console_scripts hook
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
