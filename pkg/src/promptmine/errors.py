"""Exception hierarchy shared by every promptmine module."""


class PromptMineError(Exception):
    """Base class for all package errors."""


class ConfigError(PromptMineError):
    """Invalid configuration value (sizes, fractions, modes, thresholds)."""


class IoError(PromptMineError):
    """File could not be read or written."""


class SchemaError(PromptMineError):
    """On-disk record violates the documented schema."""


class TemplateSyntaxError(PromptMineError):
    """Template source contains an unknown placeholder or malformed block."""


class RenderError(PromptMineError):
    """Template references data the window does not provide."""


class EmptyTextError(PromptMineError):
    """Entropy of the empty string is undefined."""


class DegenerateCorpusError(PromptMineError):
    """Classifier corpus contains a single class."""


class GateRejectedError(PromptMineError):
    """Generated text fell below the entropy threshold."""


class ShapeError(PromptMineError):
    """Token/probability shapes disagree or probabilities are not normalized."""


class NoExpressionsFound(PromptMineError):
    """Text contains no arithmetic expressions to verify."""


class BackendError(PromptMineError):
    """Generation backend failed after exhausting its retry budget."""

    def __init__(self, message, retries=0, request_id=None):
        super().__init__(message)
        self.retries = retries
        self.request_id = request_id


class AlignmentError(PromptMineError):
    """Forecast outcomes and ground-truth windows do not line up."""


class DataError(PromptMineError):
    """Training-pair JSONL is malformed."""
