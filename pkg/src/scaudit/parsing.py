"""Finding extraction and canonicalization for raw model completions.

A completion is expected to carry one JSON object of the form
``{"output_list": [{"function_name": ..., "vulnerability": ..., "reason": ...}]}``,
possibly wrapped in prose or fenced code blocks. Extraction is tolerant and
never raises; canonicalization maps free-text function names and vulnerability
phrases onto stable keys suitable for voting and scoring.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path

STATUS_PARSED = "parsed"
STATUS_EMPTY = "empty"
STATUS_PARSE_FAILURE = "parse_failure"
STATUS_BACKEND_FAILURE = "backend_failure"

RUN_STATUSES = (STATUS_PARSED, STATUS_EMPTY, STATUS_PARSE_FAILURE, STATUS_BACKEND_FAILURE)


class VulnType(str, Enum):
    """Closed vulnerability taxonomy; OTHER absorbs unmappable free text.

    Ground-truth labels are restricted to the six concrete variants; OTHER
    only ever appears on the prediction side.
    """

    INTEGER_OVERFLOW = "IntegerOverflow"
    WRONG_LOGIC = "WrongLogic"
    BAD_RANDOMNESS = "BadRandomness"
    ACCESS_CONTROL = "AccessControl"
    TYPO_CONSTRUCTOR = "TypoConstructor"
    TOKEN_DEVALUE = "TokenDevalue"
    OTHER = "Other"


GROUND_TRUTH_TYPES: tuple[VulnType, ...] = tuple(t for t in VulnType if t is not VulnType.OTHER)

DISPLAY_NAMES: dict[VulnType, str] = {
    VulnType.INTEGER_OVERFLOW: "Integer Overflow",
    VulnType.WRONG_LOGIC: "Wrong Logic",
    VulnType.BAD_RANDOMNESS: "Bad Randomness",
    VulnType.ACCESS_CONTROL: "Access Control",
    VulnType.TYPO_CONSTRUCTOR: "Typo Constructor",
    VulnType.TOKEN_DEVALUE: "Token Devalue",
    VulnType.OTHER: "Other",
}


@dataclass(frozen=True)
class Finding:
    """One raw item from a model's output_list."""

    function_name: str
    vulnerability: str
    reason: str


@dataclass(frozen=True)
class NormalizedFinding:
    """A finding after function-name normalization and type canonicalization."""

    function_key: str
    vuln_type: VulnType
    description: str

    @property
    def pair(self) -> tuple[str, VulnType]:
        return (self.function_key, self.vuln_type)


@dataclass
class AuditRun:
    """Parsed outcome of one (backend, contract) completion."""

    backend_id: str
    contract_id: str
    status: str
    findings: list[NormalizedFinding] = field(default_factory=list)
    raw_ref: str = ""


_DECODER = json.JSONDecoder()
_REQUIRED_KEYS = ("function_name", "vulnerability", "reason")


def extract_findings(raw_text: str | bytes) -> tuple[list[Finding], str]:
    """Pull findings out of raw completion text.

    Scans for the first syntactically valid JSON object that carries an
    "output_list" key, tolerating surrounding prose and markdown fences.
    Returns (findings, status) with status one of parsed/empty/parse_failure.
    Never raises, whatever the input bytes look like.
    """
    if isinstance(raw_text, bytes):
        raw_text = raw_text.decode("utf-8", errors="replace")
    if not isinstance(raw_text, str):
        return [], STATUS_PARSE_FAILURE
    pos = raw_text.find("{")
    while pos != -1:
        try:
            obj, _ = _DECODER.raw_decode(raw_text, pos)
        except ValueError:
            obj = None
        if isinstance(obj, dict) and "output_list" in obj:
            # First object carrying the key decides the outcome.
            return _validate_output_list(obj["output_list"])
        pos = raw_text.find("{", pos + 1)
    return [], STATUS_PARSE_FAILURE


def _validate_output_list(value: object) -> tuple[list[Finding], str]:
    if not isinstance(value, list):
        return [], STATUS_PARSE_FAILURE
    findings: list[Finding] = []
    for item in value:
        if not isinstance(item, dict):
            return [], STATUS_PARSE_FAILURE
        fields = {}
        for key in _REQUIRED_KEYS:
            v = item.get(key)
            if not isinstance(v, (str, int, float)) or isinstance(v, bool):
                return [], STATUS_PARSE_FAILURE
            fields[key] = str(v)
        findings.append(Finding(**fields))
    if not findings:
        return [], STATUS_EMPTY
    return findings, STATUS_PARSED


def normalize_function_name(raw: str) -> str:
    """Collapse a reported function name to a stable lowercase key.

    Strips backticks and whitespace, drops any parameter list from the first
    "(" on, and removes contract qualifiers ("Token.transfer" -> "transfer").
    """
    s = raw.replace("`", "").strip()
    paren = s.find("(")
    if paren != -1:
        s = s[:paren]
    s = s.rsplit(".", 1)[-1]
    return s.strip().lower()


@lru_cache(maxsize=4)
def _load_alias_file(path_str: str | None) -> tuple[tuple[str, VulnType], ...]:
    if path_str is None:
        text = resources.files("scaudit").joinpath("assets/vuln_aliases.json").read_text()
    else:
        text = Path(path_str).read_text()
    raw = json.loads(text)
    table = {phrase.strip().lower(): VulnType(name) for phrase, name in raw.items()}
    # Longest aliases first so the most specific phrase wins containment ties.
    ordered = sorted(table.items(), key=lambda kv: (-len(kv[0]), kv[0]))
    return tuple(ordered)


def load_alias_table(path: str | Path | None = None) -> dict[str, VulnType]:
    """Load the editable phrase -> type alias table (bundled asset by default)."""
    return dict(_load_alias_file(str(path) if path is not None else None))


def match_vuln_type(text: str, alias_table: dict[str, VulnType]) -> VulnType:
    """Map free vulnerability text to the taxonomy by longest contained alias."""
    hay = text.strip().lower()
    best: tuple[str, VulnType] | None = None
    for alias, vt in alias_table.items():
        if alias and alias in hay:
            if best is None or (-len(alias), alias) < (-len(best[0]), best[0]):
                best = (alias, vt)
    return best[1] if best else VulnType.OTHER


def canonicalize(finding: Finding, alias_table: dict[str, VulnType] | None = None) -> NormalizedFinding:
    """Normalize one raw finding; unmappable vulnerability text becomes OTHER."""
    table = alias_table if alias_table is not None else load_alias_table()
    return NormalizedFinding(
        function_key=normalize_function_name(finding.function_name),
        vuln_type=match_vuln_type(finding.vulnerability, table),
        description=finding.reason,
    )


def dedupe(findings: list[NormalizedFinding]) -> list[NormalizedFinding]:
    """Drop repeated (function_key, vuln_type) pairs, keeping first occurrences."""
    seen: set[tuple[str, VulnType]] = set()
    out: list[NormalizedFinding] = []
    for f in findings:
        if f.pair not in seen:
            seen.add(f.pair)
            out.append(f)
    return out


def build_audit_run(
    backend_id: str,
    contract_id: str,
    raw_text: str | None,
    raw_ref: str = "",
    failed: bool = False,
    alias_table: dict[str, VulnType] | None = None,
) -> AuditRun:
    """Turn one completion (or backend failure) into a normalized AuditRun."""
    if failed or raw_text is None:
        return AuditRun(backend_id, contract_id, STATUS_BACKEND_FAILURE, [], raw_ref)
    findings, status = extract_findings(raw_text)
    table = alias_table if alias_table is not None else load_alias_table()
    normalized = dedupe([canonicalize(f, table) for f in findings])
    return AuditRun(backend_id, contract_id, status, normalized, raw_ref)


# --- store ------------------------------------------------------------------


def run_to_dict(run: AuditRun) -> dict:
    return {
        "backend_id": run.backend_id,
        "contract_id": run.contract_id,
        "status": run.status,
        "findings": [
            {"function_key": f.function_key, "vuln_type": f.vuln_type.value, "description": f.description}
            for f in run.findings
        ],
        "raw_ref": run.raw_ref,
    }


def run_from_dict(obj: dict) -> AuditRun:
    findings = [
        NormalizedFinding(f["function_key"], VulnType(f["vuln_type"]), f.get("description", ""))
        for f in obj.get("findings", [])
    ]
    return AuditRun(obj["backend_id"], obj["contract_id"], obj["status"], findings, obj.get("raw_ref", ""))


def write_audit_runs(path: str | Path, runs: list[AuditRun]) -> None:
    lines = [json.dumps(run_to_dict(r), sort_keys=True, separators=(",", ":")) for r in runs]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_audit_runs(path: str | Path) -> list[AuditRun]:
    text = Path(path).read_text()
    return [run_from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]
