"""Exception types shared across the package."""


class NetTrackError(Exception):
    """Base class for all package-specific errors."""


class SizeLimitError(NetTrackError):
    """A requested graph order exceeds the supported bit-width bound."""


class InvariantError(NetTrackError):
    """A value violates a structural invariant (self-loop bit, bad simplex, ...)."""


class DimensionError(NetTrackError):
    """Shapes or lengths of related objects do not match."""


class DomainError(NetTrackError):
    """A parameter is outside its valid domain (probabilities, scales, ...)."""


class ParseError(NetTrackError):
    """A data file could not be parsed; message carries the offending line."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + where)


class ConfigError(NetTrackError):
    """Run configuration is invalid; ``fields`` lists every violation."""

    def __init__(self, violations):
        self.fields = list(violations)
        super().__init__("invalid configuration: " + "; ".join(self.fields))
