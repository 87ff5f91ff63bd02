"""Error hierarchy for the fine-tuning runner."""


class FtuneError(Exception):
    """Base class for every error this package raises on purpose."""


class SchemaError(FtuneError):
    """A manifest or dataset file violates the expected schema.

    Messages start with the offending field path (e.g. ``rank:`` or
    ``line 3: completion:``) so failures point at the exact input.
    """


class EnvironmentUnavailable(FtuneError):
    """Training prerequisites (CUDA-capable torch, peft, trl) are missing."""
