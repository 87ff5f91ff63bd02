#!/usr/bin/env python3
"""Run the whole pipeline on the bundled replay corpus and print the results.

The repository ships a 12-contract Solidity corpus with recorded completions
for five model backends (one deliberately missing, to show failure handling).
This script drives the same CLI commands a user would run - audit, optimize,
ensemble, eval, report - against a temporary run directory.

Run:  python3 demos/replay_pipeline.py
"""

import sys
import tempfile
from pathlib import Path

from scaudit import cli

REPLAY = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "replay_corpus"


def run(argv):
    print(f"\n$ scaudit {' '.join(argv)}")
    rc = cli.main(argv)
    print(f"(exit {rc})")
    return rc


def main():
    manifest = str(REPLAY / "corpus" / "manifest.jsonl")
    backends = str(REPLAY / "backends.json")
    split = str(REPLAY / "split.json")
    with tempfile.TemporaryDirectory() as tmp:
        run_dir = str(Path(tmp) / "run")

        # Exit 2 = the audit finished but one (backend, contract) pair failed;
        # results for the other 59 are still written.
        rc = run(["audit", "--corpus", manifest, "--backends", backends, "--out", run_dir])
        assert rc == 2

        # Learn per-model weights and a tie-break priority order on the
        # validation half, then aggregate predictions with each.
        run(["optimize", "--corpus", manifest, "--run", run_dir, "--split", split,
             "--method", "weighted", "--out", f"{run_dir}/weights.json"])
        run(["optimize", "--corpus", manifest, "--run", run_dir, "--split", split,
             "--method", "perm-opt", "--out", f"{run_dir}/perm.json"])
        run(["ensemble", "--run", run_dir, "--config", f"{run_dir}/weights.json"])
        run(["ensemble", "--run", run_dir, "--config", f"{run_dir}/perm.json"])

        # Score every single model and both ensembles on the held-out test half.
        run(["eval", "--corpus", manifest, "--run", run_dir, "--split", split, "--subset", "test"])
        run(["report", "--run", run_dir])

        scenarios = Path(run_dir) / "reports" / "scenarios_weighted_ensemble.csv"
        print("\nper-contract scenarios (weighted ensemble vs best single model):")
        print(scenarios.read_text())


if __name__ == "__main__":
    sys.exit(main())
