"""Exception hierarchy shared by every layer of the simulator."""


class FramerError(Exception):
    pass


class UsageError(FramerError, ValueError):
    """A caller violated an operation's precondition."""


class EncodingError(FramerError, ValueError):
    pass


class MalformedTag(FramerError, ValueError):
    pass


class MissingMetadata(FramerError, LookupError):
    pass


class OutOfSpace(FramerError, MemoryError):
    pass


class DoubleFreeError(FramerError):
    pass


class TypeDefinitionError(FramerError, ValueError):
    pass


class InternalFault(FramerError, AssertionError):
    """An invariant that must be impossible was violated."""


class ShadowCollision(InternalFault):
    pass


class TraceSyntaxError(FramerError, ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class MonitorAbort(FramerError):
    """Raised under the abort policy when a check fails."""

    def __init__(self, verdict):
        super().__init__(f"monitor abort: {verdict.outcome.value}")
        self.verdict = verdict


class TraceRunError(FramerError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
