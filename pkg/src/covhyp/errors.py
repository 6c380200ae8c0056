"""Exception hierarchy shared by every covhyp module."""


class CovHypError(Exception):
    """Base class for all covhyp errors."""


class InvalidParameter(CovHypError, ValueError):
    pass


class DomainError(CovHypError, ValueError):
    """A rest density lies outside the entropy datum's domain."""


class OutsideValidity(CovHypError, ValueError):
    """A state (or transported state) lies outside a system's validity domain."""


class OutOfRange(CovHypError, ValueError):
    pass


class DegenerateFrame(CovHypError, ArithmeticError):
    """C_theta vanishes, so the fiber map is singular."""


class DivisionByZero(CovHypError, ZeroDivisionError):
    pass


class UnsupportedRepresentation(CovHypError):
    pass


class UnsupportedCombination(CovHypError):
    pass


class NoConvergence(CovHypError, ArithmeticError):
    pass


class SingularJacobian(CovHypError, ArithmeticError):
    pass


class ComplexEigenvalues(CovHypError, ArithmeticError):
    """The flux Jacobian lost hyperbolicity."""


class CflViolation(CovHypError, ValueError):
    pass


class StateLeftDomain(CovHypError):
    """A finite-volume update produced an inadmissible cell."""

    def __init__(self, cell, time, message=""):
        self.cell = int(cell)
        self.time = float(time)
        super().__init__(f"cell {self.cell} left the validity domain at t={self.time!r}"
                         + (f": {message}" if message else ""))
