"""Exception types shared across the package.

Plain ValueError is used for bad arguments; the classes here mark the
remaining failure categories so the CLI can map them to exit diagnostics.
"""


class FormatError(ValueError):
    """An input file does not match its declared format."""


class ProtocolError(ValueError):
    """A dataset cannot support the requested experimental protocol."""


class NumericalError(RuntimeError):
    """An iterative numerical routine failed to converge."""
