from typing import Optional


class SSLSError(RuntimeError):
    """
    Base class of every error raised on purpose by the library. The CLI maps each subclass to an exit code.
    """
    exit_code: int = 1


class DataError(SSLSError):
    """
    Malformed or inconsistent input data. The source name and line number are carried along when they are known, and are part of the message.
    """
    exit_code = 3

    def __init__(self, message: str, source: Optional[str] = None, line: Optional[int] = None):
        self.source = source
        self.line = line

        location = ""
        if source is not None and line is not None:
            location = f"{source}:{line}: "
        elif line is not None:
            location = f"line {line}: "
        elif source is not None:
            location = f"{source}: "

        super().__init__(f"{location}{message}")


class NotFoundError(DataError):
    pass


class QueryIneligibleError(SSLSError):
    exit_code = 4


class DomainError(ValueError):
    """
    Invalid parameters for an otherwise valid query, e.g. k larger than the candidate set or omega outside (0, 1).
    """
    exit_code = 4
