# errors.py
"""
Exception hierarchy for the relational similarity pipeline.

Two families:
    DataError  - the input data is wrong (CLI exit code 1, HTTP 400)
    UsageError - the caller asked for something invalid (CLI exit code 2, HTTP 422)

None of these subclass ValueError, so pydantic validators can raise them
and they reach the caller unwrapped.
"""
from typing import Optional


class RelsimError(Exception):
    """Base class for every error raised by this package."""


# ==========================================================
# Data errors
# ==========================================================
class DataError(RelsimError):
    exit_code = 1


class ParseError(DataError):
    def __init__(self, line: Optional[int], reason: str):
        self.line = line
        self.reason = reason
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{reason}")


class SchemaMismatch(DataError):
    pass


class UnknownReference(DataError):
    def __init__(self, name: str, line: Optional[int] = None):
        self.name = name
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}unknown reference '{name}'")


class UnknownType(DataError):
    pass


class DuplicateId(DataError):
    pass


class ArityMismatch(DataError):
    pass


class UnknownVertex(DataError):
    def __init__(self, vertex_id: str):
        self.vertex_id = vertex_id
        super().__init__(f"unknown vertex '{vertex_id}'")


class PositionTypeMismatch(DataError):
    pass


class FrozenGraph(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class AsymmetricMatrix(DataError):
    pass


class IdMismatch(DataError):
    pass


class MissingLabels(DataError):
    pass


class TooFewTargets(DataError):
    pass


class DepthMismatch(DataError):
    pass


class EmptyTrain(DataError):
    pass


# ==========================================================
# Usage errors
# ==========================================================
class UsageError(RelsimError):
    exit_code = 2


class InvalidDepth(UsageError):
    pass


class LevelOutOfRange(UsageError):
    pass


class UnknownAttribute(UsageError):
    pass


class WeightSumInvalid(UsageError):
    pass


class BadK(UsageError):
    pass


class BadGrid(UsageError):
    pass
