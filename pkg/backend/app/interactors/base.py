from abc import ABC, abstractmethod
from typing import TypeVar

from dto.base import BaseDTO, ObjectiveOptionsDTO
from entities.objective.models import ObjectiveConfig
from rich.console import Console

D = TypeVar("D", bound=BaseDTO)

EXIT_OK = 0
EXIT_FAILURE = 1

console = Console(stderr=True)


class BaseInteractor[D](ABC):
    @abstractmethod
    def execute(self, dto: D) -> int:
        pass


def objective_config(options: ObjectiveOptionsDTO) -> ObjectiveConfig:
    return ObjectiveConfig(
        beta=options.beta,
        assume_unit_ratio=options.assume_unit_ratio,
    )


def render_float(value: float | None) -> str:
    return "" if value is None else repr(float(value))
