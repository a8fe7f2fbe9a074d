"""Exception hierarchy. Domain errors map to CLI exit code 1, format errors to 2."""


class OverlapSketchError(Exception):
    pass


class DomainError(OverlapSketchError, ValueError):
    """An input lies outside the mathematical domain of the operation."""


class EmptySupportError(DomainError):
    pass


class InfeasiblePlanError(DomainError):
    pass


class InvalidPairError(DomainError):
    """The sampled-sketch correction has a nonpositive denominator."""


class FamilyMismatchError(DomainError):
    pass


class EmptySketchError(DomainError):
    pass


class ResourceError(OverlapSketchError, RuntimeError):
    """A computation would exceed its configured term budget."""


class MalformedSketchError(OverlapSketchError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at byte {position})")
        self.position = position
