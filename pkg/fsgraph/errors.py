"""
Exception hierarchy for fsgraph.

Library code raises these; only the CLI turns them into exit codes.
"""

from typing import Optional


class FsGraphError(Exception):
    """Root of every error raised by fsgraph."""


class CorpusError(FsGraphError, ValueError):
    """A corpus file or sentence violates the data model."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            prefix = f"line {line}: "
        super().__init__(prefix + message)


class OntologyError(FsGraphError, ValueError):
    """The frame ontology is inconsistent or a lookup fell outside it."""


class LemmatizationError(FsGraphError, ValueError):
    pass


class ConfigError(FsGraphError, ValueError):
    """Invalid configuration values, unknown keys or unknown variants."""


class DecodingError(FsGraphError):
    pass


class SegmentationError(FsGraphError, ValueError):
    """A segmentation does not exactly cover the sentence."""


class NonFiniteLossError(FsGraphError, ArithmeticError):
    def __init__(self, term: str, value: float):
        self.term = term
        self.value = value
        super().__init__(f"non-finite loss in term {term!r}: {value}")


class CheckpointError(FsGraphError):
    """Missing checkpoint files or vocabulary/ontology digest mismatch."""


class AlignmentError(FsGraphError, ValueError):
    def __init__(self, index: int, message: str):
        self.index = index
        super().__init__(f"sentence {index}: {message}")
