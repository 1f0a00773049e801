"""Exception hierarchy shared by the library and the command-line front end."""


class QBCError(Exception):
    """Base class. ``code`` is a stable machine-readable identifier."""

    code = "qbc-error"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.details = details

    def to_dict(self) -> dict:
        out = {"error": self.code, "message": str(self)}
        out.update(self.details)
        return out


# linalg
class DimensionOverflow(QBCError):
    code = "dimension-overflow"


class ConvergenceFailure(QBCError):
    code = "convergence-failure"


class NotHermitian(QBCError):
    code = "not-hermitian"


class NotPSD(QBCError):
    code = "not-psd"


class NotFinite(QBCError):
    code = "not-finite"


# qstate / attack
class DimMismatch(QBCError):
    code = "dim-mismatch"


class LayoutMismatch(QBCError):
    code = "layout-mismatch"


class NotNormalized(QBCError):
    code = "not-normalized"


class NotUnitary(QBCError):
    code = "not-unitary"


class NotConcealing(QBCError):
    code = "not-concealing"


class InconsistentBranches(QBCError):
    code = "inconsistent-branches"


class MalformedDistribution(QBCError):
    code = "malformed-distribution"


class DimensionTooLarge(QBCError):
    code = "dimension-too-large"


# protocol
class UnknownFamily(QBCError):
    code = "unknown-family"


class MissingParam(QBCError):
    code = "missing-param"


class InvalidParam(QBCError):
    code = "invalid-param"


class InvalidSpec(QBCError):
    code = "invalid-spec"


# protofile
class ParseError(QBCError):
    """Error raised while reading a protocol document; carries a location."""

    code = "parse-error"

    def __init__(self, message: str, *, offset: int | None = None,
                 line: int | None = None, column: int | None = None, **details):
        loc = {}
        if offset is not None:
            loc["offset"] = offset
        if line is not None:
            loc["line"] = line
            loc["column"] = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message, **loc, **details)
        self.offset = offset
        self.line = line
        self.column = column


class SyntaxErrorQBC(ParseError):
    code = "syntax-error"


class BadComplex(ParseError):
    code = "bad-complex"


class ParseDimMismatch(ParseError):
    code = "dim-mismatch"


class ParseNotNormalized(ParseError):
    code = "not-normalized"


class DuplicateOmega(ParseError):
    code = "duplicate-omega"


class BadWeights(ParseError):
    code = "bad-weights"
