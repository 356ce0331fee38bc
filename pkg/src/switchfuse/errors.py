"""Exception hierarchy shared across the package.

Every error carries a stable short code used by the CLI as a diagnostic
prefix, so scripted callers can match on it.
"""


class SwitchFuseError(Exception):
    code = "SF-ERROR"


class InvalidInputError(SwitchFuseError):
    code = "SF-INPUT"


class UnknownTechniqueError(SwitchFuseError):
    code = "SF-TECHNIQUE"


class FormatError(SwitchFuseError):
    """A file does not match its declared binary or text layout."""

    code = "SF-FORMAT"


class EmptySetError(FormatError):
    code = "SF-EMPTY"


class DataError(SwitchFuseError):
    """File parsed but holds unusable values (NaN/inf)."""

    code = "SF-DATA"


class InsufficientDataError(SwitchFuseError):
    code = "SF-SAMPLES"


class IncompleteCalibrationError(SwitchFuseError):
    code = "SF-CALIBRATION"


class UndefinedEvidenceError(SwitchFuseError):
    """Both likelihood terms are zero; posterior is undefined."""

    code = "SF-EVIDENCE"


class InvalidSpecError(SwitchFuseError):
    """Synthetic dataset specification is infeasible."""

    code = "SF-SPEC"
