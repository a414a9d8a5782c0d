from dataclasses import dataclass

from entities.group.models import Group
from pydantic import Field
from shared.enums.objective import ObjectiveKind
from shared.schemas.base import DomainModel
from shared.utils.numeric import TokenValues


class ObjectiveConfig(DomainModel):
    beta: float = Field(default=0.04, ge=0)
    assume_unit_ratio: bool = True

    @property
    def uses_kl(self) -> bool:
        return self.beta > 0

    def supports(self, group: Group) -> bool:
        if not self.assume_unit_ratio and not (
            group.has_logp("logp_new") and group.has_logp("logp_old")
        ):
            return False
        return not self.uses_kl or (
            group.has_logp("logp_new") and group.has_logp("logp_ref")
        )


@dataclass(slots=True, frozen=True, eq=False)
class StepAdvantages:
    token_reward: TokenValues
    token_advantage: TokenValues

    def reward(self, index: int, t: int) -> float:
        return float(self.token_reward[index][t])

    def advantage(self, index: int, t: int) -> float:
        return float(self.token_advantage[index][t])


@dataclass(slots=True, frozen=True, eq=False)
class ObjectiveReport:
    kind: ObjectiveKind
    value: float
    per_token_terms: TokenValues
    advantage_total: float
    kl_total: float
    token_count: int

    @property
    def loss(self) -> float:
        return -self.value

    def term(self, index: int, t: int) -> float:
        return float(self.per_token_terms[index][t])
