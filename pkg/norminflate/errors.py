"""Exceptions raised by norminflate.

Every error derives from ``ValueError`` so callers that only care about
"bad input" can keep catching that.
"""


class NormInflateError(ValueError):
    pass


class InvalidArgument(NormInflateError):
    pass


class ArityError(NormInflateError):
    pass


class PreconditionError(NormInflateError):
    pass


class ParameterError(NormInflateError):
    pass


class ResolutionError(NormInflateError):
    pass


class SimulationError(NormInflateError):
    pass


class ConfigError(NormInflateError):
    pass
