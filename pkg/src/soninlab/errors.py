class NumericalAbort(RuntimeError):
    """A simulation was stopped because its numerical state became unusable."""


class BlowUpError(NumericalAbort):
    """A radial profile exceeded the blow-up threshold."""


class CollisionError(NumericalAbort):
    """Dyson Brownian motion could not keep its eigenvalues ordered."""

    def __init__(self, message: str, time: float, gap: float):
        super().__init__(message)
        self.time = time
        self.gap = gap
