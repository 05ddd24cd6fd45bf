"""Exception hierarchy shared across the workbench."""


class D3reError(Exception):
    """Base class for all workbench errors."""


class ParseError(D3reError):
    """Rule-source syntax error with a source position."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{message} (line {line}, col {col})"
        super().__init__(message)


class ProgramError(D3reError):
    """Semantic error in a parsed program: undeclared relation, arity
    mismatch, unsafe rule, conflicting declarations."""


class StratificationError(D3reError):
    """Program cannot be stratified; message names an offending cycle."""


class EvaluationError(D3reError):
    """Runtime error during fixpoint evaluation (type error, overflow,
    division by zero, EDB/declaration mismatch)."""


class FactFormatError(D3reError):
    """Malformed .facts file or unserializable value."""


class ElfError(D3reError):
    """Base for ELF ingestion failures."""


class NotElfError(ElfError):
    """Input is not an ELF file (bad magic)."""


class TruncatedElfError(ElfError):
    """ELF structures point past the end of the file."""


class UnsupportedElfError(ElfError):
    """ELF is valid but not 64-bit little-endian."""


class StoreError(D3reError):
    """Metadatabase storage failure or unknown node/root."""


class SessionError(D3reError):
    """Bad REPL/session command or state."""
