"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid preset, weight table, or command-line configuration."""


class DomainError(ValueError):
    """A point lies outside the fluid domain it was claimed to be in."""


class FieldBuildError(RuntimeError):
    """Distance-field interpolation could not be built to tolerance."""


class MetricError(ValueError):
    """Error-metric request is ill-posed (degenerate reference, bad subset)."""


class TrainingAbort(RuntimeError):
    """Training hit a non-finite loss; carries the last loss breakdown."""

    def __init__(self, message, breakdown=None):
        super().__init__(message)
        self.breakdown = breakdown
