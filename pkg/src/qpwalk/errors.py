"""Exception types shared across the package.

Two failure families are distinguished because the command line maps them to
different exit codes: a model that violates its own structural contract
(``ModelError``, exit code 1) versus a numerical stage that could not deliver
its guarantee (``NumericalError``, exit code 2).
"""

from __future__ import annotations


class ModelError(ValueError):
    """The step-set model is structurally invalid (bad class layout, bad
    probabilities, jumps exiting the quadrant, ...)."""

    def __init__(self, message: str, details: list[str] | None = None):
        super().__init__(message)
        self.details = list(details or [])


class NumericalError(RuntimeError):
    """A numerical stage failed to meet its contract.

    ``stage`` names the pipeline stage (e.g. ``"trace-curve"``) so a caller
    can report where the computation broke down.
    """

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
