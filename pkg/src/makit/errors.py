"""Toolkit-specific exceptions, kept separate so the CLI can map them to exit codes."""


class ConfigError(ValueError):
    """A configuration document is malformed or references unknown entries."""


class InfeasibleError(ValueError):
    """The requested constraints admit no feasible placement or allocation."""
