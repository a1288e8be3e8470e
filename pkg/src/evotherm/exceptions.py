"""Exception hierarchy shared by all evotherm modules."""


class EvothermError(Exception):
    """Base class for all errors raised by evotherm."""


class NotSquare(EvothermError, ValueError):
    pass


class NotSymmetric(EvothermError, ValueError):
    pass


class NotPSD(EvothermError, ValueError):
    pass


class NoConvergence(EvothermError, RuntimeError):
    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class Singular(EvothermError, ArithmeticError):
    pass


class SingularKappa(Singular):
    pass


class Unstable(EvothermError, RuntimeError):
    pass


class VariantMismatch(EvothermError, ValueError):
    pass


class MaterialError(EvothermError, ValueError):
    """A material coefficient violates its positivity or shape constraint."""


class ParseError(EvothermError, ValueError):
    """Scenario text is not well-formed JSON or has the wrong structure.

    ``path`` is the dotted field path (or ``line L column C`` for JSON syntax errors).
    """

    def __init__(self, message, path=None):
        super().__init__(message if path is None else f"{path}: {message}")
        self.path = path


class ValidationError(EvothermError, ValueError):
    """Scenario is well-formed but violates a physical or schema invariant."""

    def __init__(self, message, path=None):
        super().__init__(message if path is None else f"{path}: {message}")
        self.path = path


class NonMonotone(UserWarning):
    """A limit study produced a deviation that grew along the sweep."""
