from enum import auto

from shared.enums.base import ChoiceStrEnum


class RewardDist(ChoiceStrEnum):
    BERNOULLI = auto()
    UNIFORM = auto()
    CONSTANT = auto()


class LogpMode(ChoiceStrEnum):
    ABSENT = auto()
    RANDOM_CONSISTENT = auto()


class SimScenario(ChoiceStrEnum):
    EXPLOITATION = auto()
    CONSTANT = auto()
    RANDOM = auto()
