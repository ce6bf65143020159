"""Exception hierarchy shared by all modules."""


class NevaError(Exception):
    pass


class InvalidParameter(NevaError, ValueError):
    """A numeric parameter or coordinate is outside its allowed range."""


class InvalidInput(NevaError, ValueError):
    """Data handed to an operation does not satisfy its preconditions."""


class InvalidModel(NevaError, ValueError):
    """A task model or weights file is malformed."""


class GenerationError(NevaError, RuntimeError):
    """A scanpath generator could not produce a scanpath.

    ``step`` is the fixation index at which generation failed, if known.
    """

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


class ConfigError(NevaError):
    """Run configuration is missing, malformed or references absent files."""
