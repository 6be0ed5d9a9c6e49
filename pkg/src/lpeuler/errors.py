"""Exception hierarchy.

Every error carries a short machine-readable ``code`` so the command line
layer (and callers) can tell failure modes apart without parsing messages.
"""


class LPError(Exception):
    code = "error"


class GridError(LPError, ValueError):
    code = "grid"


class ShapeError(LPError, ValueError):
    code = "shape"


class NonRealFieldError(LPError, ValueError):
    code = "non-real"


class FieldFormatError(LPError, ValueError):
    code = "format"


class HeaderError(FieldFormatError):
    code = "header"


class UnsupportedDimensionError(HeaderError):
    code = "dimension"


class PayloadLengthError(FieldFormatError):
    code = "payload-length"


class ChecksumError(FieldFormatError):
    code = "checksum"


class MeanModeError(LPError, ValueError):
    code = "mean-mode"


class DivergenceError(LPError, ValueError):
    code = "divergence"


class SupportError(LPError, ValueError):
    code = "support"


class HorizonError(LPError, ValueError):
    code = "horizon"


class BlowUpError(LPError, FloatingPointError):
    code = "blow-up"


class ConfigError(LPError, ValueError):
    code = "config"


class DegenerateEnsembleError(LPError, ValueError):
    code = "degenerate"
