from shared.exceptions import PrmTreeError


class GroupParseError(PrmTreeError):
    def __init__(self, line_number: int, message: str) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number
        self.message = message


class GroupNotFoundError(PrmTreeError, LookupError):
    def __init__(self, query_id: str, occurrence: int = 0) -> None:
        super().__init__(
            f"no group {query_id!r} (occurrence {occurrence}) in the input",
        )
        self.query_id = query_id
        self.occurrence = occurrence
