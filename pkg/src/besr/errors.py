"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """An argument lies outside the domain of a physical law or operation."""


class NotFoundError(LookupError):
    """A root, peak, or resonance that was asked for does not exist."""


class RankDeficiencyError(ArithmeticError):
    """The normal equations of a least-squares problem are singular."""


class IntegrationError(RuntimeError):
    """The ODE integrator could not advance the solution.

    ``t`` holds the simulation time at which the failure occurred.
    """

    def __init__(self, message, t):
        super().__init__(f"{message} (t = {t:.6g} s)")
        self.t = t


class ConfigError(ValueError):
    """A configuration or data file could not be parsed.

    ``line`` and ``column`` are 1-based; either may be ``None``.
    """

    def __init__(self, message, line=None, column=None, source=None):
        where = []
        if source:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.line = line
        self.column = column
        self.source = source
