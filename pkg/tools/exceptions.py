class UnipotentToolException(Exception):
    """Base class for every error raised by the tools package."""


class InvalidPartitionException(UnipotentToolException):
    def __init__(self, value, reason: str = "not a valid partition"):
        super().__init__(f"Invalid partition or composition {value!r}: {reason}")


class InvalidParabolicException(UnipotentToolException):
    def __init__(self, value, reason: str = "not a valid parabolic subgroup"):
        super().__init__(f"Invalid parabolic data {value!r}: {reason}")


class SingularDirectionException(UnipotentToolException):
    def __init__(self, direction):
        super().__init__(f"Direction {direction!r} lies on a singular hyperplane")


class SingularMatrixException(UnipotentToolException):
    def __init__(self, reason: str = "matrix is not invertible"):
        super().__init__(f"Singular matrix: {reason}")


class OrbitMembershipException(UnipotentToolException):
    def __init__(self, reason: str):
        super().__init__(f"Matrix is not in the expected orbit: {reason}")


class ZetaPoleException(UnipotentToolException):
    def __init__(self, backend: str, s):
        super().__init__(f"Zeta factor of backend {backend} has a pole at s = {s}")


class DivergenceException(UnipotentToolException):
    def __init__(self, what: str):
        super().__init__(f"Divergent global quantity: {what} (the orbit is not simple)")


class BoundaryPointException(UnipotentToolException):
    def __init__(self, point):
        super().__init__(f"Point {point!r} lies on the boundary of the hull")


class UnsupportedOrbitException(UnipotentToolException):
    def __init__(self, what: str):
        super().__init__(f"No closed form or numeric path available for {what}")


class InvalidPlaceException(UnipotentToolException):
    def __init__(self, value, reason: str = "unknown place"):
        super().__init__(f"Invalid place {value!r}: {reason}")
