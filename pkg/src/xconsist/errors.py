"""Exception hierarchy shared across the harness.

The CLI maps these to stable exit codes: InputError -> 2,
MissingEmbeddingsError -> 3, RevisionConflictError -> 4, ProviderError -> 5.
"""
from __future__ import annotations


class HarnessError(Exception):
    """Base class for all harness failures."""


class InputError(HarnessError):
    """Bad or unparseable input: files, preconditions, configuration."""


class MissingEmbeddingsError(HarnessError):
    """Scoring was requested but the stores lack required entries.

    Carries the exhaustive list of missing key descriptions so callers can
    fix the stores in one pass instead of replaying failures one by one.
    """

    def __init__(self, missing: list[str]):
        self.missing = sorted(missing)
        preview = "\n  ".join(self.missing)
        super().__init__(f"{len(self.missing)} required embedding(s) missing:\n  {preview}")


class RevisionConflictError(HarnessError):
    """A correction's recorded original does not match the inventory cell."""


class ProviderError(HarnessError):
    """The embedding provider failed or disagreed with the local store."""


class DegenerateSeriesError(InputError):
    """A statistic is undefined because an axis has zero variance."""
