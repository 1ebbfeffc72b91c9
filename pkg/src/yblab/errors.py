"""Exception types shared across the package."""


class YBLabError(Exception):
    """Base class for all package errors."""


class SingularPoint(YBLabError):
    """Evaluation hit a vanishing denominator or another removable/measure-zero locus.

    Samplers treat this as "resample", never as "perturb": perturbing would mask
    genuinely singular behaviour of a family.
    """

    def __init__(self, what, point=None):
        self.what = what
        self.point = point
        msg = what if point is None else f"{what} at {point}"
        super().__init__(msg)


class CapacityError(YBLabError):
    """A tensor operation would exceed the configured dimension cap."""


class ExprError(YBLabError):
    """Parse or evaluation error in the expression mini-language.

    ``offset`` is the byte offset into the source text for parse errors,
    or None for evaluation errors.
    """

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class ConfigError(YBLabError):
    """Invalid configuration document (missing keys, bad branch, bad values)."""


class NonConvergence(YBLabError):
    """An iterative numerical procedure failed to converge."""
