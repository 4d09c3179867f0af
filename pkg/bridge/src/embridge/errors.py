class BridgeError(Exception):
    """Base class for bridge failures."""


class ExportError(BridgeError):
    """Embedding export produced no usable records."""


class PairSpecError(BridgeError):
    """Pair specification is malformed or references unknown ids."""

    def __init__(self, message: str, unresolved: list[str] | None = None):
        super().__init__(message)
        self.unresolved = unresolved or []
