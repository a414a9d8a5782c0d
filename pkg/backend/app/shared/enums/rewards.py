from enum import auto

from shared.enums.base import ChoiceStrEnum


class StdMode(ChoiceStrEnum):
    SAMPLE = auto()
    POPULATION = auto()

    @property
    def ddof(self) -> int:
        return 1 if self is StdMode.SAMPLE else 0
