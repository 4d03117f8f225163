"""Exception types shared across the package."""


class ScanbenchError(Exception):
    """Base class for all scanbench errors."""


class MapFormatError(ScanbenchError):
    """Raised on malformed FGRID files; carries the failing byte offset."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class SearchSpaceExhausted(ScanbenchError):
    """All grid cells have been visited; the searcher cannot move."""
