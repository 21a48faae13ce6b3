class CommunityForgeError(Exception):
    pass


class InvalidArgumentError(CommunityForgeError, ValueError):
    pass


class BoundaryError(CommunityForgeError, ValueError):
    """A derivative was requested exactly on a kernel's support boundary."""


class KernelValidationError(CommunityForgeError, ValueError):
    pass


class InversionError(CommunityForgeError, RuntimeError):
    """The production map could not be inverted branch by branch."""


class IntegrityError(CommunityForgeError, RuntimeError):
    """Two routes to the same quantity disagree beyond any discretisation error."""


class ConstructionError(CommunityForgeError, RuntimeError):
    def __init__(self, message: str, diagnosis: dict | None = None):
        super().__init__(message)
        self.diagnosis = diagnosis or {}
