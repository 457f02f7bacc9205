"""Exception types raised across the package."""


class CMCError(Exception):
    """Base class for all package errors."""


class HermitianError(CMCError, ValueError):
    pass


class LoopError(CMCError):
    pass


class LoopInversionError(LoopError):
    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class NotInBigCell(LoopError):
    """Birkhoff splitting failed: the loop is (numerically) off the big cell."""

    def __init__(self, message, residual=None, node=None):
        super().__init__(message)
        self.residual = residual
        self.node = node


class SingularPoint(LoopError):
    """Iwasawa splitting failed because star(g)*g is not positive definite."""

    def __init__(self, message, node=None, min_eig=None):
        super().__init__(message)
        self.node = node
        self.min_eig = min_eig


class ParseError(CMCError, ValueError):
    def __init__(self, message, position, expected=()):
        self.position = position
        self.expected = tuple(expected)
        detail = f"{message} at position {position}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class Pole(CMCError, ArithmeticError):
    """Evaluation hit a pole of a meromorphic expression."""

    def __init__(self, z, message="pole"):
        super().__init__(f"{message} at z={complex(z)!r}")
        self.z = complex(z)


class InfiniteMeanCurvature(CMCError, ArithmeticError):
    pass


class DomainError(CMCError, ValueError):
    pass


class ConfigError(CMCError, ValueError):
    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
