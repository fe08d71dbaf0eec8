"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of the function."""


class PreconditionError(ValueError):
    """Inputs are well-formed numbers but violate a stated requirement."""


class NumericError(RuntimeError):
    """An iterative routine failed to converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConfigError(ValueError):
    """A configuration document failed validation; ``problems`` lists each issue."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
