"""Exception types shared across the toolkit."""


class LangDeiError(Exception):
    """Base class for every error raised by this package."""


class InputError(LangDeiError):
    """Invalid input data, file content, or configuration (CLI exit code 2)."""


class ComputationError(LangDeiError):
    """A metric or fit is mathematically undefined for the given values (CLI exit code 1)."""
