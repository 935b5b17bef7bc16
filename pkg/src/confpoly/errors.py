"""Exception hierarchy.

Every error raised on bad input derives from :class:`ConfpolyError`, so callers
(and the CLI) can separate domain failures from programming errors.
"""


class ConfpolyError(Exception):
    """Base class for all domain errors."""

    kind = "error"

    def to_dict(self):
        return {"error": self.kind, "message": str(self)}


class InvalidDimension(ConfpolyError, ValueError):
    kind = "InvalidDimension"


class DimensionMismatch(ConfpolyError, ValueError):
    kind = "DimensionMismatch"


class InvalidState(ConfpolyError, ValueError):
    kind = "InvalidState"


class InvalidPovm(ConfpolyError, ValueError):
    kind = "InvalidPovm"

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index

    def to_dict(self):
        out = super().to_dict()
        if self.index is not None:
            out["index"] = self.index
        return out


class DomainError(ConfpolyError, ValueError):
    kind = "DomainError"


class InvalidSplit(ConfpolyError, ValueError):
    kind = "InvalidSplit"


class InvalidGroup(ConfpolyError, ValueError):
    kind = "InvalidGroup"


class BasisMismatch(ConfpolyError, ValueError):
    kind = "BasisMismatch"


class EmptyRegion(ConfpolyError):
    kind = "EmptyRegion"


class UnboundedAxis(ConfpolyError):
    kind = "UnboundedAxis"

    def __init__(self, axis):
        super().__init__(f"region is unbounded along basis axis {axis}")
        self.axis = axis

    def to_dict(self):
        out = super().to_dict()
        out["axis"] = self.axis
        return out


class ChainStall(ConfpolyError):
    kind = "ChainStall"


class DegenerateWeights(ConfpolyError):
    kind = "DegenerateWeights"


class NonQubit(ConfpolyError, ValueError):
    kind = "NonQubit"


class SchemaError(ConfpolyError, ValueError):
    kind = "SchemaError"

    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer or "/"

    def to_dict(self):
        out = super().to_dict()
        out["pointer"] = self.pointer
        return out
