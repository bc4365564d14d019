"""Shared exception and warning types."""


class CapacityError(ValueError):
    """Raised when a request exceeds the factorial enumeration cap."""


class UnsupportedMetricError(ValueError):
    """Raised for quadratic weight matrices that couple target blocks.

    The per-target assignment decomposition requires the stacked quadratic
    form to be block-diagonal; anything else cannot be evaluated by a
    target-to-target assignment.
    """


class DegenerateEstimateWarning(UserWarning):
    """Estimate has duplicate target blocks; region labels degenerate to the
    lexicographic tie-break."""
