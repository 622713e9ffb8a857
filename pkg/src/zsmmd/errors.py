class ShapeError(ValueError):
    pass


class UsageError(RuntimeError):
    pass


class NumericError(ArithmeticError):
    pass


class DomainError(ValueError):
    pass


class SelectionTooSmall(DomainError):
    """Raised when fewer than ``q_min`` pseudo features survive selection."""

    def __init__(self, count, q_min):
        super().__init__(f"selected {count} pseudo features, need at least {q_min}")
        self.count = count
        self.q_min = q_min


class EmbeddingFileError(ValueError):
    pass


class ConfigError(ValueError):
    """Invalid experiment configuration; ``key`` and ``line`` point at the culprit."""

    def __init__(self, message, key=None, line=None):
        where = ""
        if key is not None:
            where += f" [key {key}]"
        if line is not None:
            where += f" [line {line}]"
        super().__init__(message + where)
        self.key = key
        self.line = line


class ModelFileError(ValueError):
    pass


class CorruptModelError(ModelFileError):
    pass


class VersionMismatchError(ModelFileError):
    pass


class DimensionError(ModelFileError):
    pass
