"""Exception types shared across the package."""


class EntityScoutError(Exception):
    """Base class for all errors raised by entityscout."""


class ParseError(EntityScoutError):
    """A file could not be parsed; carries the offending location."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc += str(path)
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line


class EmptyCorpusError(EntityScoutError):
    """Input contained no tokens."""


class ConfigError(EntityScoutError):
    """Invalid feature or run configuration."""


class TrainingError(EntityScoutError):
    """Model training could not proceed."""


class SingleClassError(TrainingError):
    """Labeled data contains only one class; keep ranking with the prior model."""


class ModelFormatError(EntityScoutError):
    """Model file is malformed, has a bad version, or non-finite weights."""


class SessionError(EntityScoutError):
    """Invalid session operation (wrong sentence, bad label vector, ...)."""


class SessionComplete(Exception):
    """Signal: every sentence available to the session has been labeled.

    Not an error; deliberately outside the EntityScoutError hierarchy.
    """
