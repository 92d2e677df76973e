"""Structured exceptions.

Every exception carries a short machine-readable ``code`` so the harness can
turn failures into records instead of tracebacks.
"""


class TVSError(Exception):
    code = "error"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        out = {"reason": self.code, "message": str(self)}
        for key, value in self.details.items():
            if isinstance(value, (int, float, str, bool)) or value is None:
                out[key] = value
        return out


class SpaceMismatchError(TVSError):
    code = "space_mismatch"


class NonFiniteError(TVSError):
    code = "non_finite"


class InvalidSpaceError(TVSError, ValueError):
    code = "invalid_space"


class UnsupportedCombinationError(TVSError):
    code = "unsupported_combination"


class DegenerateFunctionalError(TVSError):
    code = "degenerate_functional"


class ActivationOverflowError(TVSError, OverflowError):
    code = "activation_overflow"


class LikelyPolynomialError(TVSError):
    code = "likely_polynomial"


class NonSmoothActivationError(TVSError):
    code = "non_smooth_activation"


class DivergenceError(TVSError):
    code = "divergence"

    def __init__(self, message, trace=None, **details):
        super().__init__(message, **details)
        self.trace = trace


class ConditioningError(TVSError):
    code = "ill_conditioned"


class InadmissibleActivationError(TVSError):
    code = "inadmissible_activation"


class ThresholdRangeError(TVSError):
    code = "threshold_out_of_range"


class ConfigError(TVSError, ValueError):
    code = "usage"

    def __init__(self, message, field=None, **details):
        super().__init__(message, field=field, **details)
        self.field = field
