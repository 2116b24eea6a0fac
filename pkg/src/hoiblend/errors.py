"""Exception hierarchy shared across the package."""


class HoiBlendError(Exception):
    """Base class for all package errors."""


class ValidationError(HoiBlendError):
    """Structurally invalid input (bad shapes, broken invariants)."""


class MotionFileError(HoiBlendError):
    """Motion file cannot be parsed or violates the format contract."""


class NoInteractionError(HoiBlendError):
    """Contact mask contains no hand-object contact at all."""


class DegenerateAnchorsError(HoiBlendError):
    """Anchor set is unusable for rigid alignment (all points coincident)."""


class UndefinedMetricError(HoiBlendError):
    """Metric is undefined for the given trajectory (empty window, too short)."""


class SimulationDivergedError(HoiBlendError):
    """Simulation state became non-finite."""

    def __init__(self, step_index, message=None):
        self.step_index = step_index
        super().__init__(message or f"simulation diverged at step {step_index}")


class ConfigurationError(HoiBlendError):
    """Invalid configuration value or missing required config."""
