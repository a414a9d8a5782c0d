from shared.exceptions import PrmTreeError


class ObjectiveConfigurationError(PrmTreeError):
    pass


class AssignmentMismatchError(PrmTreeError, ValueError):
    def __init__(self) -> None:
        super().__init__("token assignment belongs to another tree")
