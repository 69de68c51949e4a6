"""Exception hierarchy shared by all modules."""


class SnrEnhanceError(Exception):
    """Base class for package errors."""


class InvalidConfigError(SnrEnhanceError, ValueError):
    pass


class EmptyInputError(SnrEnhanceError, ValueError):
    pass


class DomainError(SnrEnhanceError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class ShapeError(SnrEnhanceError, ValueError):
    pass


class ConfigurationError(SnrEnhanceError, ValueError):
    """Incompatible combination of otherwise valid settings (e.g. model vs. feature kind)."""


class CorruptFileError(SnrEnhanceError, ValueError):
    pass


class CorruptModelError(CorruptFileError):
    pass


class CorpusError(SnrEnhanceError, ValueError):
    pass


class DegenerateInputError(SnrEnhanceError, ValueError):
    pass


class AudioFormatError(SnrEnhanceError, ValueError):
    pass


class ManifestError(SnrEnhanceError, ValueError):
    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class TrainingDivergedError(SnrEnhanceError, ArithmeticError):
    def __init__(self, epoch, message="loss became non-finite"):
        super().__init__(f"training diverged at epoch {epoch}: {message}")
        self.epoch = epoch
