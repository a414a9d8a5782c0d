from shared.exceptions import PrmTreeError


class PositionOutOfRangeError(PrmTreeError, IndexError):
    def __init__(self, t: int, max_length: int) -> None:
        super().__init__(
            f"position {t} is outside [0, {max_length})",
        )
        self.t = t
        self.max_length = max_length


class TreeDocumentError(PrmTreeError, ValueError):
    pass
