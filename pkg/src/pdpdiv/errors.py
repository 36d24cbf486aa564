"""Exception types. Every class carries a stable ``code`` used by the CLI."""


class PdpError(Exception):
    code = "error"


class DomainError(PdpError, ValueError):
    """Argument outside the domain of a function or a parameter invariant."""

    code = "domain_error"


class UnsupportedIndexError(PdpError, ValueError):
    """The requested diversity index has no closed form for this operation."""

    code = "unsupported_index"


class InvalidStepError(PdpError, IndexError):
    code = "invalid_step"


class ParseError(PdpError, ValueError):
    code = "parse_error"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DiscoveryOrderError(ParseError):
    code = "discovery_order"
