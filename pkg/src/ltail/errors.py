"""Shared exception types."""


class UnsupportedError(ValueError):
    """Requested operation is not available for this model/method combination."""


class InfiniteMomentError(UnsupportedError):
    """A moment of order >= tail index was requested."""


class NoSecondOrderError(UnsupportedError):
    """The model carries no second-order tail term (auxiliary function is zero)."""
