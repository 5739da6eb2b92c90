"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Matrix or vector sizes are inconsistent with the scenario."""


class DegenerateChannelError(ValueError):
    """A channel draw is rank deficient or carries no usable gain."""


class DomainError(ValueError):
    """An input lies outside the domain of the requested function."""


class ChannelFileError(ValueError):
    """A channel file could not be parsed."""
