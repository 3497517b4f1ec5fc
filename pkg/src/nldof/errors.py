"""Exception types shared across the package."""


class InvalidProfileError(ValueError):
    """The whitening matrix does not describe a valid rank-Q fading process."""


class RankDeficientError(ValueError):
    """A matrix expected to have full row rank does not."""


class SingularPivotError(ValueError):
    """The pivot block chosen for a canonical form is (numerically) singular.

    Kept distinct from :class:`RankDeficientError` so callers can retry with
    a different pivot policy.
    """

    def __init__(self, message, pivot_cols=None, cond=None):
        super().__init__(message)
        self.pivot_cols = pivot_cols
        self.cond = cond


class DecodeFailure(RuntimeError):
    """A decoder guard tripped; the estimate would not be trustworthy.

    Attributes
    ----------
    guard : str
        Short machine-readable name of the guard that tripped.
    value : float or None
        The offending magnitude or condition number.
    """

    def __init__(self, guard, message, value=None):
        super().__init__(f"{guard}: {message}")
        self.guard = guard
        self.value = value
