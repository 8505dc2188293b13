"""Exception types raised across the package."""


class ContractError(ValueError):
    """An argument violates a documented precondition."""


class EmptySetError(ContractError):
    """Orthogonalization left no usable operator."""


class GenerationError(RuntimeError):
    """An orthogonal set could not be generated within the retry budget."""


class NumericalConsistencyError(ArithmeticError):
    """A quantity that must be real (or unitary, ...) is not, beyond tolerance."""


class ConfigError(ValueError):
    """Invalid experiment configuration.

    ``line`` is the 1-based line in the config file the error refers to, when
    it can be located.
    """

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class PulseFormatError(ValueError):
    """A pulse file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
