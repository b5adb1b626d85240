"""Shared exception base for the toolkit."""


class ToolkitError(Exception):
    """Base class for all data-level errors raised by this package.

    The CLI maps any subclass to exit code 65 (bad input data).
    """
