"""Exception hierarchy shared by all spingas modules."""


class SpinGasError(Exception):
    """Base class for every error raised by this package."""


class DuplicateLabel(SpinGasError, ValueError):
    pass


class UnknownLabel(SpinGasError, KeyError):
    pass


class ShapeError(SpinGasError, ValueError):
    pass


class TooLarge(SpinGasError, ValueError):
    """A dense object would exceed the hard qubit caps."""


class ParseError(SpinGasError, ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class RangeError(ParseError):
    """Qubit index outside the declared register."""


class DuplicateGate(ParseError):
    pass


class NotAGraphState(SpinGasError, ValueError):
    pass


class UnsupportedPattern(SpinGasError, ValueError):
    pass


class ClosedFormInapplicable(SpinGasError, ValueError):
    pass


class WrongArity(SpinGasError, ValueError):
    pass


class FitError(SpinGasError, RuntimeError):
    pass


class NumericalError(SpinGasError, RuntimeError):
    pass
