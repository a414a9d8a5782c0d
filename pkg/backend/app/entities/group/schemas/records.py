from entities.group.models import Group, Trajectory
from pydantic import NonNegativeInt
from shared.enums.objective import ObjectiveKind
from shared.schemas.base import WireModel


class CompletionRecord(WireModel):
    tokens: list[NonNegativeInt]
    reward: float
    logp: list[float] | None = None
    logp_old: list[float] | None = None
    logp_ref: list[float] | None = None

    def to_trajectory(self) -> Trajectory:
        return Trajectory(
            tokens=tuple(self.tokens),
            reward=self.reward,
            logp_new=_as_tuple(self.logp),
            logp_old=_as_tuple(self.logp_old),
            logp_ref=_as_tuple(self.logp_ref),
        )

    @classmethod
    def from_trajectory(cls, trajectory: Trajectory) -> "CompletionRecord":
        return cls(
            tokens=list(trajectory.tokens),
            reward=trajectory.reward,
            logp=_as_list(trajectory.logp_new),
            logp_old=_as_list(trajectory.logp_old),
            logp_ref=_as_list(trajectory.logp_ref),
        )


class GroupRecord(WireModel):
    query_id: str
    step: NonNegativeInt | None = None
    completions: list[CompletionRecord]

    def to_group(self) -> Group:
        return Group(
            query_id=self.query_id,
            step=self.step,
            trajectories=tuple(
                completion.to_trajectory() for completion in self.completions
            ),
        )

    @classmethod
    def from_group(cls, group: Group) -> "GroupRecord":
        return cls(
            query_id=group.query_id,
            step=group.step,
            completions=[
                CompletionRecord.from_trajectory(trajectory)
                for trajectory in group.trajectories
            ],
        )


class CompletionWeights(WireModel):
    advantage: float
    token_advantage: list[float]
    lambda_weight: list[float]


class WeightRecord(WireModel):
    query_id: str
    step: NonNegativeInt | None = None
    objective: ObjectiveKind
    objective_value: float
    loss: float
    completions: list[CompletionWeights]


def _as_tuple(values: list[float] | None) -> tuple[float, ...] | None:
    return None if values is None else tuple(values)


def _as_list(values: tuple[float, ...] | None) -> list[float] | None:
    return None if values is None else list(values)
