"""Exception hierarchy shared by every pipeline stage."""

from __future__ import annotations


class PepError(Exception):
    """Base class for all errors raised by pepcheck."""


class ParseError(PepError):
    """The XML document is malformed or lacks a mandatory attribute."""

    def __init__(self, message: str, element_id: str | None = None):
        super().__init__(message if element_id is None else f"{element_id}: {message}")
        self.element_id = element_id


class ValidationError(PepError):
    """The model violates one or more core invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"{len(self.violations)} violation(s): {lines}")


class AmbiguousDialect(PepError):
    pass


class SpliceError(PepError):
    """A message-flow endpoint offers no sequence flow to splice an event into."""

    def __init__(self, message: str, element_id: str):
        super().__init__(f"{element_id}: {message}")
        self.element_id = element_id


class GenerationError(PepError):
    """A diagram cannot be compiled to a finite module (e.g. an unsafe token flow)."""


class UnlinkedSignal(GenerationError):
    def __init__(self, signal: str, node_id: str):
        super().__init__(f"signal {signal!r} of node {node_id!r} has no event link")
        self.signal = signal
        self.node_id = node_id


class StateSpaceLimitExceeded(PepError):
    def __init__(self, limit: int, explored: int):
        super().__init__(f"state space exceeds the limit of {limit} states "
                         f"({explored} states explored)")
        self.limit = limit
        self.explored = explored


class EmitError(PepError):
    def __init__(self, name: str):
        super().__init__(f"identifier {name!r} cannot be expressed in PRISM syntax")
        self.name = name


class NonConvergence(PepError):
    def __init__(self, iterations: int, residual: float):
        super().__init__(f"value iteration did not converge after {iterations} "
                         f"iterations (residual {residual:.3g})")
        self.iterations = iterations
        self.residual = residual
