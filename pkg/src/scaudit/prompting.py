"""Prompt templates and rendering for audit and fine-tune flows.

Templates ship as plain-text assets with ``{name}`` placeholders and are
rendered by literal replacement (str.format would choke on the JSON schema
braces inside the auditor prompt). Rendering the same record twice yields
byte-identical text.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import TYPE_CHECKING, Callable

from .errors import BadTopKError, MissingLabelFieldError, TemplateNotFoundError
from .parsing import DISPLAY_NAMES, GROUND_TRUTH_TYPES

if TYPE_CHECKING:  # pragma: no cover - typing only, avoids a runtime cycle
    from .corpus import ContractRecord

AUDITOR_TEMPLATE_ID = "auditor"

# The closed vulnerability-type list as it appears inside the auditor prompt.
VULN_TYPE_LIST = ", ".join(DISPLAY_NAMES[t] for t in GROUND_TRUTH_TYPES)


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    body: str
    placeholders: tuple[str, ...]
    schema_block: str = ""


@dataclass(frozen=True)
class RenderedPrompt:
    contract_id: str
    template_id: str
    text: str
    topk: int


def _read_asset(name: str) -> str:
    return resources.files("scaudit").joinpath(f"assets/{name}").read_text()


def _extract_schema_block(body: str) -> str:
    """Return the first brace-balanced JSON block after the output-format cue."""
    marker = "JSON format:"
    start = body.find(marker)
    anchor = body.find("{", start if start != -1 else 0)
    if anchor == -1:
        return ""
    depth = 0
    for i in range(anchor, len(body)):
        if body[i] == "{":
            depth += 1
        elif body[i] == "}":
            depth -= 1
            if depth == 0:
                return body[anchor : i + 1]
    return ""


def _render(template: PromptTemplate, bindings: dict[str, str]) -> str:
    text = template.body
    for name in template.placeholders:
        if name not in bindings:
            raise TemplateNotFoundError(f"template {template.template_id!r}: placeholder {name!r} unbound")
        text = text.replace("{" + name + "}", bindings[name])
    for name in template.placeholders:
        if "{" + name + "}" in text:
            raise TemplateNotFoundError(f"template {template.template_id!r}: residual marker {name!r}")
    return text


@lru_cache(maxsize=1)
def load_auditor_template() -> PromptTemplate:
    body = _read_asset("auditor_prompt.txt")
    return PromptTemplate(
        template_id=AUDITOR_TEMPLATE_ID,
        body=body,
        placeholders=("topk", "vuln_types", "code"),
        schema_block=_extract_schema_block(body),
    )


def render_auditor_prompt(record: "ContractRecord", topk: int = 5) -> RenderedPrompt:
    """Render the audit prompt for one contract; topk must be >= 1."""
    if not isinstance(topk, int) or isinstance(topk, bool) or topk < 1:
        raise BadTopKError(f"topk must be a positive integer, got {topk!r}")
    template = load_auditor_template()
    text = _render(
        template,
        {"topk": str(topk), "vuln_types": VULN_TYPE_LIST, "code": record.source_code},
    )
    return RenderedPrompt(record.id, template.template_id, text, topk)


# --- fine-tune templates ------------------------------------------------------

_CONTRACT_NAME_RE = re.compile(r"\bcontract\s+([A-Za-z_]\w*)")


def _contract_name(record: "ContractRecord") -> str:
    m = _CONTRACT_NAME_RE.search(record.source_code)
    return m.group(1) if m else record.id


def _cve_prompt(record: "ContractRecord") -> str:
    # Single-label records train on the audit prompt asking for one finding.
    return render_auditor_prompt(record, topk=1).text


def _cve_completion(record: "ContractRecord") -> str:
    if len(record.labels) != 1:
        raise MissingLabelFieldError("labels", record.id)
    label = record.labels[0]
    if not label.function_name.strip():
        raise MissingLabelFieldError("function_name", record.id)
    payload = {
        "output_list": [
            {
                "function_name": label.function_name,
                "vulnerability": DISPLAY_NAMES[label.vulnerability_type],
                "reason": label.description,
            }
        ]
    }
    return json.dumps(payload, indent=2)


@lru_cache(maxsize=1)
def _ethereum_prompt_template() -> PromptTemplate:
    body = _read_asset("finetune_ethereum_prompt.txt")
    return PromptTemplate("ethereum", body, ("code",))


def _ethereum_prompt(record: "ContractRecord") -> str:
    return _render(_ethereum_prompt_template(), {"code": record.source_code})


def _ethereum_completion(record: "ContractRecord") -> str:
    names = [DISPLAY_NAMES[lbl.vulnerability_type] for lbl in record.labels]
    listed = ", ".join(names) if names else "none"
    return f"Contract {_contract_name(record)} vulnerability list: {listed}."


@dataclass(frozen=True)
class FinetuneTemplate:
    template_id: str
    dataset_tag: str
    build_prompt: Callable
    build_completion: Callable


FINETUNE_TEMPLATES: dict[str, FinetuneTemplate] = {
    "cve": FinetuneTemplate("cve", "cve", _cve_prompt, _cve_completion),
    "ethereum": FinetuneTemplate("ethereum", "ethereum", _ethereum_prompt, _ethereum_completion),
}


def get_finetune_template(template_id: str) -> FinetuneTemplate:
    try:
        return FINETUNE_TEMPLATES[template_id]
    except KeyError:
        raise TemplateNotFoundError(f"no fine-tune template registered as {template_id!r}") from None


def render_finetune_prompt(record: "ContractRecord", template_id: str) -> tuple[str, str]:
    """Render one record into a (prompt, completion) training pair."""
    template = get_finetune_template(template_id)
    if template.dataset_tag != record.dataset_tag:
        raise TemplateNotFoundError(
            f"template {template_id!r} serves dataset_tag {template.dataset_tag!r}, "
            f"record {record.id!r} is tagged {record.dataset_tag!r}"
        )
    return template.build_prompt(record), template.build_completion(record)
