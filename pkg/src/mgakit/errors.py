"""Common exception base for the toolkit.

Every domain error derives from MgaError so that the CLI and the HTTP
service can map failures uniformly (exit code 1 / HTTP 422 with a
machine-readable code).  The code defaults to the class name.
"""


class MgaError(Exception):
    """Base class for all toolkit domain errors."""

    @property
    def code(self) -> str:
        return type(self).__name__
