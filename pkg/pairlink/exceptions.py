"""Exceptions raised by pairlink.

Every concrete error also subclasses the builtin it refines so callers catching
`ValueError` or `KeyError` keep working.
"""

__all__ = [
    "PairLinkError",
    "KbFormatError",
    "KbValidationError",
    "CorpusFormatError",
    "MissingEntityError",
    "ContractViolation",
    "RefusalError",
    "UsageError",
]


class PairLinkError(Exception):
    """Base class for all pairlink errors."""


class KbFormatError(PairLinkError, ValueError):
    """A KB-stats or embeddings file is syntactically malformed."""


class KbValidationError(PairLinkError, ValueError):
    """A KB-stats or embeddings file parses but violates an invariant."""


class CorpusFormatError(PairLinkError, ValueError):
    """A corpus JSONL line cannot be read into a LinkingInstance."""


class MissingEntityError(PairLinkError, KeyError):
    """An entity is absent from the KB statistics or the embedding store."""

    def __str__(self) -> str:
        # KeyError quotes its argument; keep messages readable
        return str(self.args[0]) if self.args else ""


class ContractViolation(PairLinkError, ValueError):
    """A caller broke an operation's precondition."""


class RefusalError(PairLinkError, ValueError):
    """An operation declines a well-formed but unsupported request."""


class UsageError(PairLinkError):
    """The command line or its configuration file is malformed."""
