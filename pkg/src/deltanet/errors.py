class ContractError(ValueError):
    """An operation was called with arguments that violate its contract."""


class ParseError(ValueError):
    """A model or dataset file could not be parsed."""

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class ValidationError(ValueError):
    """Parsed data is well-formed but internally inconsistent."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""
