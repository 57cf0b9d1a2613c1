class TrainerError(Exception):
    """Base class for trainer errors."""


class EmptySet(TrainerError, ValueError):
    """Training requires at least one volume."""


class IndivisibleDimension(TrainerError, ValueError):
    """A training volume cannot be downscaled to the requested level."""
