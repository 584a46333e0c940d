"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: validation problems exit 1,
resource-limit problems exit 2, and I/O problems exit 3 (plain OSError).
"""


class ForgeError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(ForgeError):
    """Malformed input: bad netlist, genotype, model, dataset, or config."""


class ConfigError(ValidationError):
    """A configuration table or option is missing or inconsistent."""


class CapacityError(ValidationError):
    """A fixed-size container cannot hold the requested content.

    Carries ``required`` and ``available`` so callers can size a retry.
    """

    def __init__(self, message: str, *, required: int, available: int):
        super().__init__(message)
        self.required = required
        self.available = available


class ResourceError(ForgeError):
    """A computation exceeded its memory or node budget."""
