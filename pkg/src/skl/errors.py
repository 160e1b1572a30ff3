"""Exception and warning classes shared across the package."""


class SklError(Exception):
    """Base class for all errors raised by skl."""


class MeasureError(SklError, ValueError):
    """Invalid measure description or an operation that would produce one."""


class EmptyTruncationError(MeasureError):
    """Truncation removed all of the mass."""


class NodeCollisionError(MeasureError):
    """Two quadrature nodes coincide after merging parts."""


class EvaluationError(SklError, ValueError):
    """A function returned a non-finite value at a quadrature node."""


class NumericalDegeneration(SklError, ArithmeticError):
    """A numerical procedure lost the accuracy it needs to continue."""


class OrthogonalityLossError(NumericalDegeneration):
    pass


class MomentOverflowError(NumericalDegeneration):
    pass


class NotInRangeError(SklError, ValueError):
    """The right-hand side is not in the range of the multiplication operator."""


class SchemaError(SklError, ValueError):
    """A scenario document failed validation."""


class SklWarning(UserWarning):
    pass


class DivergenceWarning(SklWarning):
    """Quadrature tail contributions do not decay."""


class ExactnessWarning(SklWarning):
    """Requested degree exceeds the polynomial exactness of the quadrature."""


class RangeWarning(SklWarning):
    """Zero lies inside a continuous part of the spectrum."""
