"""Exception hierarchy.

``ValidationError`` subclasses signal bad inputs (CLI exit code 2);
``NumericalError`` subclasses signal numeric pathology (exit code 1).
"""


class QuantumnessError(Exception):
    """Base class for every error raised by the package."""

    code = "Error"

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


class ValidationError(QuantumnessError, ValueError):
    code = "ValidationError"


class NumericalError(QuantumnessError, ArithmeticError):
    code = "NumericalError"


class NonSquare(ValidationError):
    code = "NonSquare"


class NotHermitian(ValidationError):
    code = "NotHermitian"


class NonFinite(ValidationError):
    code = "NonFinite"


class DimensionMismatch(ValidationError):
    code = "DimensionMismatch"


class DimensionTooLarge(ValidationError):
    code = "DimensionTooLarge"


class WrongDimension(ValidationError):
    code = "WrongDimension"


class NotAState(ValidationError):
    code = "NotAState"


class ZeroVector(ValidationError):
    code = "ZeroVector"


class NormTooFarFromUnit(ValidationError):
    code = "NormTooFarFromUnit"


class ZeroAmplitudes(ValidationError):
    code = "ZeroAmplitudes"


class ImaginaryResidue(NumericalError):
    code = "ImaginaryResidue"


class ConvergenceFailure(NumericalError):
    code = "ConvergenceFailure"


class SolverFailure(NumericalError):
    code = "SolverFailure"


class InvalidTriple(ValidationError):
    """Raised when (A, B, B - A) are not all positive semidefinite."""

    code = "InvalidTriple"

    def __init__(self, validity):
        self.validity = validity
        failed = ", ".join(validity.failed) or "none"
        super().__init__(f"operator triple is not valid; failed PSD checks: {failed}")

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["failed"] = list(self.validity.failed)
        d["min_eigs"] = list(self.validity.min_eigs)
        return d


class UnknownTag(ValidationError):
    code = "UnknownTag"


class NotCommuting(ValidationError):
    code = "NotCommuting"


class BadResolution(ValidationError):
    code = "BadResolution"


class BadRadius(ValidationError):
    code = "BadRadius"


class UnknownSignalKind(ValidationError):
    code = "UnknownSignalKind"


class SchemaViolation(ValidationError):
    code = "SchemaViolation"


class BadFlag(ValidationError):
    code = "BadFlag"


class UnknownCommand(ValidationError):
    code = "UnknownCommand"
