"""Exception types shared across the toolkit."""

from __future__ import annotations

from dataclasses import dataclass


class HrepairError(Exception):
    """Base class for all toolkit errors."""


class DomainValidationError(HrepairError):
    """An unknown predicate, object, type, or task symbol was referenced."""


class PreconditionError(HrepairError):
    """An action was applied in a state that falsifies its precondition."""

    def __init__(self, action: str, falsified: str):
        super().__init__(f"action {action} inapplicable: {falsified} is false")
        self.action = action
        self.falsified = falsified


class StructuralError(HrepairError):
    """A tree operation was called with nodes that violate its contract."""


class DecodeError(HrepairError):
    """A rewritten solution failed to map back onto the executed prefix."""


@dataclass(frozen=True)
class SourceSpan:
    """Location of a construct or error in an input file."""

    file: str
    line: int
    column: int
    length: int = 1

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class ParseError(HrepairError):
    """A parse failure, tagged with a kind and a source span.

    Kinds: ``lexical``, ``arity``, ``undeclared-symbol``,
    ``unsupported-construct``, ``type-mismatch``, ``malformed``.
    """

    def __init__(self, kind: str, message: str, span: SourceSpan):
        super().__init__(f"{span}: [{kind}] {message}")
        self.kind = kind
        self.span = span
        self.detail = message


class SchemaError(HrepairError):
    """A JSON document violated the tree/plan schema."""

    def __init__(self, message: str, pointer: str):
        super().__init__(f"{pointer}: {message}")
        self.pointer = pointer
        self.detail = message
