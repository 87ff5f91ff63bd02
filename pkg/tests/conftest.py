import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
SRC = ROOT / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

FIXTURES = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def replay_dir() -> Path:
    return FIXTURES / "replay_corpus"


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return FIXTURES / "golden"


@pytest.fixture(scope="session")
def replay_corpus(replay_dir):
    from scaudit.corpus import load_corpus

    return load_corpus(replay_dir / "corpus", replay_dir / "corpus" / "manifest.jsonl")


@pytest.fixture(scope="session")
def golden_runs(golden_dir):
    from scaudit.parsing import read_audit_runs

    return read_audit_runs(golden_dir / "audit_runs.jsonl")


MODEL_ORDER = ["codellama", "deepseek", "gemma", "nxcode", "openinterpreter"]


@pytest.fixture(scope="session")
def model_order() -> list[str]:
    return list(MODEL_ORDER)
