"""Exception hierarchy.

Every error raised deliberately by the package derives from KinebenchError so
batch drivers can catch pipeline failures without swallowing programming bugs.
"""

from __future__ import annotations


class KinebenchError(Exception):
    pass


# skeleton
class MissingSourceJoint(KinebenchError):
    def __init__(self, name: str):
        super().__init__(f"harmonization map references absent source joint {name!r}")
        self.name = name


class MissingRequiredTarget(KinebenchError):
    def __init__(self, name: str):
        super().__init__(f"required canonical joint {name!r} has no mapping")
        self.name = name


class InvalidMap(KinebenchError):
    pass


# kinematics
class UnknownMarker(KinebenchError):
    def __init__(self, name: str):
        super().__init__(f"marker {name!r} not present in joint set")
        self.name = name


class UnknownAngle(KinebenchError, KeyError):
    def __str__(self) -> str:
        return f"unknown angle {self.args[0]!r}"


class UnknownActivity(KinebenchError, KeyError):
    def __str__(self) -> str:
        return f"unknown activity {self.args[0]!r}"


# dsp / align / metrics
class EmptySignal(KinebenchError):
    pass


class WindowTooLarge(KinebenchError):
    pass


class EvenWindow(KinebenchError):
    pass


class InsufficientOverlap(KinebenchError):
    pass


class RateMismatch(KinebenchError):
    pass


class LengthMismatch(KinebenchError):
    pass


class ZeroRange(KinebenchError):
    pass


class ZeroVariance(KinebenchError):
    pass


class EmptyInput(KinebenchError):
    pass


# ingest
class MalformedHeader(KinebenchError):
    pass


class RaggedRow(KinebenchError):
    def __init__(self, line: int, detail: str = ""):
        super().__init__(f"ragged row at line {line}" + (f": {detail}" if detail else ""))
        self.line = line


class NoFrames(KinebenchError):
    pass


class MissingEndHeader(KinebenchError):
    pass


class ColumnCountMismatch(KinebenchError):
    pass


class RowCountMismatch(KinebenchError):
    pass


class NonNumericCell(KinebenchError):
    def __init__(self, line: int, col: int, token: str = ""):
        super().__init__(f"non-numeric cell {token!r} at line {line}, column {col}")
        self.line = line
        self.col = col


class NonMonotonicTime(KinebenchError):
    pass


class UnknownColumn(KinebenchError, KeyError):
    def __str__(self) -> str:
        return f"unknown column {self.args[0]!r}"


class UnknownModelKind(KinebenchError):
    def __init__(self, kind: str):
        super().__init__(f"unknown model kind {kind!r}")
        self.kind = kind


class SchemaError(KinebenchError):
    def __init__(self, field: str, detail: str = ""):
        super().__init__(f"manifest field {field!r}: {detail}" if detail else f"manifest field {field!r}")
        self.field = field


class UnresolvablePath(KinebenchError):
    def __init__(self, path):
        super().__init__(f"path does not exist: {path}")
        self.path = path


# report
class MixedActivities(KinebenchError):
    pass
