"""Exception types shared across the toolkit."""


class SnapSpiralError(Exception):
    """Base class for all toolkit errors."""


class GeometryInfeasibleError(SnapSpiralError):
    """Requested geometry cannot be realized (coil overlap, beams crossing, ...)."""


class SpecificationError(SnapSpiralError):
    """Inconsistent or invalid problem definition."""


class SingularElementError(SnapSpiralError):
    """An element degenerated (length collapsed) during deformation."""


class ConvergenceError(SnapSpiralError):
    """Newton iteration failed to reach the residual tolerance."""

    def __init__(self, message, residual_norm=None):
        super().__init__(message)
        self.residual_norm = residual_norm


class FoldSingularityError(SnapSpiralError):
    """Tangent is singular at a limit point; fixed-control correction cannot proceed."""


class TraceStalledError(SnapSpiralError):
    """Arc-length radius underflowed; carries the partial path traced so far."""

    def __init__(self, message, partial_path=None):
        super().__init__(message)
        self.partial_path = partial_path


class EmulationIncompleteError(SnapSpiralError):
    """Displacement-control emulation could not find a stable landing branch."""

    def __init__(self, message, partial_curve=None):
        super().__init__(message)
        self.partial_curve = partial_curve


class IntegrationError(SnapSpiralError):
    """Explicit time integration diverged; a smaller step is needed."""
