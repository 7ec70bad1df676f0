"""Exception hierarchy shared by all stages of the simulator."""


class OptaggError(Exception):
    """Base class; the CLI maps subclasses to exit status 3."""

    module = "optagg"

    def __str__(self) -> str:
        return f"[{self.module}] {super().__str__()}"


class GridMismatchError(OptaggError):
    module = "signal_core"


class AliasingError(OptaggError):
    module = "signal_core"


class GeometryError(OptaggError):
    module = "aggregator"


class CalibrationError(OptaggError):
    module = "link_elements"


class InsufficientStatisticsError(OptaggError):
    module = "receiver_dsp"


class ReceiverConfigError(OptaggError):
    module = "receiver_dsp"


class InfeasibleTargetError(OptaggError):
    module = "tuner"

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ConfigError(Exception):
    """Scenario configuration problem (CLI exit status 2)."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = ""
        if line is not None:
            where = f"line {line}: "
        if field is not None:
            where += f"{field}: "
        super().__init__(where + message)
