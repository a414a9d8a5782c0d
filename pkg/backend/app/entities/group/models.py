from typing import Literal, Self

import numpy as np
from numpy.typing import NDArray
from pydantic import (
    Field,
    NonNegativeFloat,
    NonNegativeInt,
    NonPositiveFloat,
    PositiveFloat,
    model_validator,
)
from shared.enums.rewards import StdMode
from shared.schemas.base import DomainModel

type LogpField = Literal["logp_new", "logp_old", "logp_ref"]

LOGP_FIELDS: tuple[LogpField, ...] = ("logp_new", "logp_old", "logp_ref")


class Trajectory(DomainModel):
    tokens: tuple[NonNegativeInt, ...] = ()
    reward: float
    logp_new: tuple[NonPositiveFloat, ...] | None = None
    logp_old: tuple[NonPositiveFloat, ...] | None = None
    logp_ref: tuple[NonPositiveFloat, ...] | None = None

    @model_validator(mode="after")
    def check_logp_lengths(self) -> Self:
        for name in LOGP_FIELDS:
            values = getattr(self, name)
            if values is not None and len(values) != len(self.tokens):
                raise ValueError(
                    f"{name} has {len(values)} entries "
                    f"for {len(self.tokens)} tokens",
                )
        return self

    @property
    def length(self) -> int:
        return len(self.tokens)

    def logp(self, name: LogpField) -> NDArray[np.float64] | None:
        values = getattr(self, name)
        if values is None:
            return None
        return np.asarray(values, dtype=np.float64)


class Group(DomainModel):
    query_id: str
    trajectories: tuple[Trajectory, ...] = Field(min_length=2)
    step: NonNegativeInt | None = None

    @property
    def k(self) -> int:
        return len(self.trajectories)

    @property
    def rewards(self) -> NDArray[np.float64]:
        return np.asarray(
            [trajectory.reward for trajectory in self.trajectories],
            dtype=np.float64,
        )

    @property
    def lengths(self) -> list[int]:
        return [trajectory.length for trajectory in self.trajectories]

    @property
    def total_tokens(self) -> int:
        return sum(self.lengths)

    @property
    def max_length(self) -> int:
        return max(self.lengths)

    def has_logp(self, name: LogpField) -> bool:
        return all(
            getattr(trajectory, name) is not None
            for trajectory in self.trajectories
        )


class RewardStats(DomainModel):
    mean: float
    std: NonNegativeFloat
    std_mode: StdMode
    epsilon: PositiveFloat = 1e-8

    @property
    def degenerate(self) -> bool:
        return self.std < self.epsilon
