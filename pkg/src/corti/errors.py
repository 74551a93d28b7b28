"""Exception types shared by all corti modules.

Every error carries the name of the module that raised it so the CLI can
report provenance.
"""


class CortiError(Exception):
    """Base class; ``module`` names the stage that failed."""

    module = "corti"

    def __init__(self, message, module=None):
        super().__init__(message)
        if module is not None:
            self.module = module

    def __str__(self):
        return f"[{self.module}] {self.args[0]}"


class DomainError(CortiError, ValueError):
    """An argument lies outside the domain of the operation."""


class FormatError(CortiError, ValueError):
    """A file could not be parsed or uses an unsupported encoding."""


class ConfigError(CortiError, ValueError):
    """Invalid or inconsistent configuration."""
