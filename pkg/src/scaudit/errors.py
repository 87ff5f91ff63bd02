"""Exception types shared across the audit harness.

Every harness-raised error derives from ScauditError so the CLI can map
validation problems to a single exit code.
"""

from __future__ import annotations


class ScauditError(Exception):
    """Base class for all harness errors."""


class ConfigError(ScauditError):
    """Malformed configuration: generation params, backend specs, eval config."""


# --- corpus ---------------------------------------------------------------


class MissingFileError(ScauditError):
    pass


class DuplicateIdError(ScauditError):
    pass


class UnknownVulnerabilityTypeError(ScauditError):
    def __init__(self, alias: str):
        super().__init__(f"unknown vulnerability type: {alias!r}")
        self.alias = alias


class EmptySourceError(ScauditError):
    pass


class CorpusFormatError(ScauditError):
    """Structurally invalid manifest record (bad JSON, missing field, label rules)."""


class BadFractionsError(ScauditError):
    pass


class WriteFailureError(ScauditError):
    pass


# --- prompting ------------------------------------------------------------


class TemplateNotFoundError(ScauditError):
    pass


class MissingLabelFieldError(ScauditError):
    def __init__(self, field: str, record_id: str = ""):
        where = f" on record {record_id!r}" if record_id else ""
        super().__init__(f"label field {field!r} is missing or empty{where}")
        self.field = field


class BadTopKError(ScauditError):
    pass


# --- backends ---------------------------------------------------------------


class NetworkError(ScauditError):
    """Transport failure that persisted through the bounded retry schedule."""


class ContextOverflowError(ScauditError):
    pass


class AuthError(ScauditError):
    pass


class BackendRefusalError(ScauditError):
    """Backend answered with a non-2xx protocol response or malformed body."""


class ReplayMissError(ScauditError):
    """Replay fixture has no recorded completion for the requested pair."""


# --- ensemble ---------------------------------------------------------------


class DuplicateModelRunError(ScauditError):
    pass


class WeightMissingError(ScauditError):
    pass


class BadPermutationError(ScauditError):
    pass


class TooManyModelsError(ScauditError):
    pass


class EmptyValidationError(ScauditError):
    pass


# --- similarity / evaluation ------------------------------------------------


class EmbeddingServiceError(ScauditError):
    pass


class MismatchedContractSetsError(ScauditError):
    pass
