"""Exception types shared across the package."""


class PartdagError(Exception):
    """Base class for all package errors."""


class MissingFile(PartdagError):
    pass


class RaggedRows(PartdagError):
    def __init__(self, line, expected, got):
        super().__init__(f"line {line}: expected {expected} fields, got {got}")
        self.line = line
        self.expected = expected
        self.got = got


class NonNumericCell(PartdagError):
    def __init__(self, line, column, cell):
        super().__init__(f"line {line}, column {column}: not a finite number: {cell!r}")
        self.line = line
        self.column = column


class ConstantColumn(PartdagError):
    def __init__(self, column):
        super().__init__(f"column {column} has zero sample variance")
        self.column = column


class SizeOutOfRange(PartdagError):
    pass


class NumericFailure(PartdagError):
    pass


class OrderViolation(PartdagError):
    pass


class NotSubset(PartdagError):
    pass


class KTooLarge(PartdagError):
    pass


class MarginalsMissing(PartdagError):
    pass


class NoMoves(PartdagError):
    pass


class CyclicGraph(PartdagError):
    pass


class CyclicSupport(PartdagError):
    pass


class TooLarge(PartdagError):
    pass


class CandidateRestricted(PartdagError):
    pass


class EmptySupport(PartdagError):
    pass


class SingularBlock(PartdagError):
    pass


class DegreeOutOfRange(PartdagError):
    pass
