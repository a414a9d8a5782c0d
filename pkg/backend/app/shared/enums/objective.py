from enum import auto

from shared.enums.base import ChoiceStrEnum


class ObjectiveKind(ChoiceStrEnum):
    GRPO = auto()
    PRM = auto()
    LAMBDA = auto()


class ExportFormat(ChoiceStrEnum):
    DOT = auto()
    JSON = auto()
