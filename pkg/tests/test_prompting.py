"""Prompt rendering: the audit prompt and the fine-tune templates."""

import json

import pytest

from scaudit.corpus import ContractRecord, GroundTruthLabel
from scaudit.errors import BadTopKError, MissingLabelFieldError, TemplateNotFoundError
from scaudit.parsing import VulnType, extract_findings
from scaudit.prompting import (
    VULN_TYPE_LIST,
    load_auditor_template,
    render_auditor_prompt,
    render_finetune_prompt,
)


def record(cid="c1", code="pragma solidity ^0.4.24;\ncontract Demo { function f() public {} }",
           labels=(), tag="cve"):
    return ContractRecord(cid, f"{cid}.sol", code, tuple(labels), tag)


CVE_LABEL = GroundTruthLabel("transfer", VulnType.INTEGER_OVERFLOW, "adds without check")


class TestAuditorPrompt:
    def test_fixed_wording(self):
        prompt = render_auditor_prompt(record(), topk=5).text
        assert prompt.startswith("Task Instructions:\n")
        assert "Identify 5 most severe vulnerability in the provided smart contract." in prompt
        assert "Ensure it is exploitable in real world and beneficial to attackers." in prompt
        assert f"Restrict your identification to these vulnerability types: {VULN_TYPE_LIST}." in prompt
        assert "You should ONLY output in below JSON format:" in prompt
        assert '{"output_list": []}' in prompt
        assert prompt.rstrip().endswith("Your Output:")

    def test_type_list_content(self):
        assert VULN_TYPE_LIST == (
            "Integer Overflow, Wrong Logic, Bad Randomness, Access Control, Typo Constructor, Token Devalue"
        )
        assert "Other" not in VULN_TYPE_LIST

    def test_code_embedded_verbatim_once(self):
        code = "contract Odd { function weird_name_xyz() public {} }"
        prompt = render_auditor_prompt(record(code=code), topk=3).text
        assert prompt.count(code) == 1
        assert prompt.index("Full Code Input:") < prompt.index(code)

    def test_no_residual_placeholders(self):
        prompt = render_auditor_prompt(record(), topk=2).text
        for marker in ("{topk}", "{vuln_types}", "{code}"):
            assert marker not in prompt

    def test_each_placeholder_declared_once(self):
        template = load_auditor_template()
        for name in template.placeholders:
            assert template.body.count("{" + name + "}") == 1

    def test_schema_block_is_valid_json(self):
        template = load_auditor_template()
        schema = json.loads(template.schema_block)
        assert list(schema) == ["output_list"]
        assert {"function_name", "vulnerability", "reason"} == set(schema["output_list"][0])

    def test_schema_survives_rendering(self):
        # The JSON-format example must reach the model byte-for-byte.
        template = load_auditor_template()
        prompt = render_auditor_prompt(record(), topk=5).text
        assert template.schema_block in prompt

    def test_example_output_round_trips_through_parser(self):
        # An answer shaped exactly like the prompt's example must parse.
        reply = json.dumps(
            {"output_list": [{"function_name": "f", "vulnerability": "Integer Overflow", "reason": "x"}]}
        )
        findings, status = extract_findings(reply)
        assert status == "parsed" and len(findings) == 1

    def test_rendering_is_deterministic(self):
        r = record()
        assert render_auditor_prompt(r, 5).text == render_auditor_prompt(r, 5).text

    def test_topk_appears_in_text(self):
        one = render_auditor_prompt(record(), topk=1).text
        five = render_auditor_prompt(record(), topk=5).text
        assert "Identify 1 most severe" in one
        assert "Identify 5 most severe" in five

    def test_metadata(self):
        rendered = render_auditor_prompt(record(cid="c42"), topk=4)
        assert rendered.contract_id == "c42"
        assert rendered.topk == 4
        assert rendered.template_id == "auditor"

    @pytest.mark.parametrize("topk", [0, -1, "5", 2.0, True, None])
    def test_bad_topk(self, topk):
        with pytest.raises(BadTopKError):
            render_auditor_prompt(record(), topk=topk)


class TestCveFinetune:
    def test_prompt_is_single_finding_audit(self):
        prompt, _ = render_finetune_prompt(record(labels=[CVE_LABEL]), "cve")
        assert "Identify 1 most severe" in prompt

    def test_completion_is_parseable_truth(self):
        _, completion = render_finetune_prompt(record(labels=[CVE_LABEL]), "cve")
        payload = json.loads(completion)
        assert payload == {
            "output_list": [
                {
                    "function_name": "transfer",
                    "vulnerability": "Integer Overflow",
                    "reason": "adds without check",
                }
            ]
        }
        findings, status = extract_findings(completion)
        assert status == "parsed" and findings[0].function_name == "transfer"

    def test_requires_exactly_one_label(self):
        with pytest.raises(MissingLabelFieldError):
            render_finetune_prompt(record(labels=[]), "cve")
        with pytest.raises(MissingLabelFieldError):
            render_finetune_prompt(record(labels=[CVE_LABEL, CVE_LABEL]), "cve")


class TestEthereumFinetune:
    def test_multi_label_completion(self):
        labels = [
            GroundTruthLabel("withdraw", VulnType.ACCESS_CONTROL, ""),
            GroundTruthLabel("deposit", VulnType.INTEGER_OVERFLOW, ""),
        ]
        code = "contract PiggyBank { function withdraw() public {} }"
        _, completion = render_finetune_prompt(record(code=code, labels=labels, tag="ethereum"), "ethereum")
        assert completion == "Contract PiggyBank vulnerability list: Access Control, Integer Overflow."

    def test_clean_contract_completion(self):
        code = "contract SafeStore { function store() public {} }"
        _, completion = render_finetune_prompt(record(code=code, tag="ethereum"), "ethereum")
        assert completion == "Contract SafeStore vulnerability list: none."

    def test_contract_name_falls_back_to_id(self):
        _, completion = render_finetune_prompt(
            record(cid="e99", code="// bare snippet without a declaration", tag="ethereum"), "ethereum"
        )
        assert completion.startswith("Contract e99 vulnerability list:")

    def test_prompt_contains_code(self):
        code = "contract Probe { function p() public {} }"
        prompt, _ = render_finetune_prompt(record(code=code, tag="ethereum"), "ethereum")
        assert code in prompt


class TestTemplateRegistry:
    def test_unknown_template(self):
        with pytest.raises(TemplateNotFoundError):
            render_finetune_prompt(record(labels=[CVE_LABEL]), "nonsense")

    def test_dataset_tag_gating(self):
        with pytest.raises(TemplateNotFoundError):
            render_finetune_prompt(record(labels=[CVE_LABEL], tag="cve"), "ethereum")
        with pytest.raises(TemplateNotFoundError):
            render_finetune_prompt(record(tag="ethereum"), "cve")
