import sys
from pathlib import Path

import pytest

FTUNE_SRC = Path(__file__).resolve().parents[1] / "src"
if str(FTUNE_SRC) not in sys.path:
    sys.path.insert(0, str(FTUNE_SRC))


@pytest.fixture(scope="session")
def ftune_fixtures():
    return Path(__file__).resolve().parent / "fixtures"


@pytest.fixture(scope="session")
def cve_export(ftune_fixtures):
    return ftune_fixtures / "cve_export.jsonl"


@pytest.fixture(scope="session")
def eth_export(ftune_fixtures):
    return ftune_fixtures / "eth_export.jsonl"


@pytest.fixture(scope="session")
def exported_manifest(ftune_fixtures):
    return ftune_fixtures / "lora_manifest.json"
