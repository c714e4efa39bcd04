"""Exception types shared across the package."""


class WardSolitonError(Exception):
    """Base class for all package errors."""


class ParseError(WardSolitonError, ValueError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class PoleHit(WardSolitonError, ArithmeticError):
    """Evaluation point lies on a pole (a singular line of the data)."""


class ZeroSpan(WardSolitonError, ValueError):
    """All spanning vectors vanish numerically."""


class Singular(WardSolitonError, ArithmeticError):
    """Matrix is numerically singular."""


class NotHolomorphic(WardSolitonError, ArithmeticError):
    """A jet expected to be holomorphic carries a negative-exponent term."""

    def __init__(self, exponent, norm):
        self.exponent = exponent
        self.norm = norm
        super().__init__(f"coefficient of exponent {exponent} has norm {norm:.3e}")


class NearPole(WardSolitonError, ArithmeticError):
    """Spectral parameter too close to a pole of the extended solution."""


class ForbiddenPolePair(WardSolitonError, ValueError):
    """Poles are equal or complex conjugate where distinct poles are required."""


class MinimalityViolated(WardSolitonError, ValueError):
    """A chain claimed to be minimal fails the rank or kernel laws."""


class PoleClash(WardSolitonError, ValueError):
    """A transformation pole coincides with a pole of the seed solution."""


class Degenerate(WardSolitonError, ArithmeticError):
    """Seed solution is singular at the transformation pole."""


class RankCollapse(WardSolitonError, ValueError):
    """Witness vectors cannot realize the requested rank."""


class ConstraintViolated(WardSolitonError, ValueError):
    """A uniton membership constraint fails beyond tolerance."""

    def __init__(self, level, order, defect, message=None):
        self.level = level
        self.order = order
        self.defect = defect
        text = message or (
            f"constraint violated at level {level}, derivative order {order}: "
            f"defect {defect:.3e}"
        )
        super().__init__(text)


class StrictDecreaseViolated(WardSolitonError, ValueError):
    """Uniton ranks do not strictly decrease."""


class NonDecaying(WardSolitonError, ArithmeticError):
    """Integrand tail is too large for the quadrature window."""


class SpecError(WardSolitonError, ValueError):
    """Invalid construction spec file."""
