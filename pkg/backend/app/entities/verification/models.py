from dataclasses import dataclass
from typing import Self

import numpy as np
from entities.group.models import RewardStats
from entities.objective.models import StepAdvantages
from entities.tree.models import ProcessTree, TokenAssignment
from numpy.typing import NDArray
from pydantic import Field, NonNegativeInt, model_validator
from shared.enums.generation import LogpMode, RewardDist
from shared.schemas.base import DomainModel, WireModel


class GenParams(DomainModel):
    seed: int = Field(default=0, ge=0)
    k_range: tuple[int, int] = (2, 16)
    length_range: tuple[NonNegativeInt, NonNegativeInt] = (1, 64)
    vocab_size: int = Field(default=8, ge=2)
    fork_bias: float = Field(default=0.5, ge=0, le=1)
    reward_dist: RewardDist = RewardDist.BERNOULLI
    logp_mode: LogpMode = LogpMode.RANDOM_CONSISTENT
    degenerate_rate: float = Field(default=0.05, ge=0, le=0.5)
    distinct_first_tokens: bool = False

    @model_validator(mode="after")
    def check_ranges(self) -> Self:
        k_low, k_high = self.k_range
        length_low, length_high = self.length_range
        if k_low < 2 or k_low > k_high:  # noqa: PLR2004
            raise ValueError(f"invalid k_range {self.k_range}")
        if length_low > length_high:
            raise ValueError(f"invalid length_range {self.length_range}")
        if self.distinct_first_tokens and (
            self.vocab_size < k_high or length_low < 1
        ):
            raise ValueError(
                "distinct_first_tokens needs vocab_size >= k and length >= 1",
            )
        return self


class VerificationFailure(WireModel):
    check: str
    seed: int | None
    group_index: int
    gap: float


class VerificationReport(WireModel):
    """Merged outcome of the equivalence checks.

    `max_rel_gap` compares the two objectives against
    max(|L_GRPO|, |L_PRM|); `max_identity_gap` covers the per-node,
    partition and scaling identities relative to the size of their terms.
    """

    groups_checked: NonNegativeInt = 0
    checks: NonNegativeInt = 0
    configs_skipped: NonNegativeInt = 0
    trivial_count: NonNegativeInt = 0
    max_abs_gap: float = 0.0
    max_rel_gap: float = 0.0
    max_identity_gap: float = 0.0
    failures: list[VerificationFailure] = []

    @property
    def passed(self) -> bool:
        return not self.failures

    def merge(self, other: "VerificationReport") -> "VerificationReport":
        return VerificationReport(
            groups_checked=self.groups_checked + other.groups_checked,
            checks=self.checks + other.checks,
            configs_skipped=self.configs_skipped + other.configs_skipped,
            trivial_count=self.trivial_count + other.trivial_count,
            max_abs_gap=max(self.max_abs_gap, other.max_abs_gap),
            max_rel_gap=max(self.max_rel_gap, other.max_rel_gap),
            max_identity_gap=max(
                self.max_identity_gap,
                other.max_identity_gap,
            ),
            failures=sorted(
                [*self.failures, *other.failures],
                key=lambda failure: (
                    failure.seed if failure.seed is not None else -1,
                    failure.group_index,
                    failure.check,
                    failure.gap,
                ),
            ),
        )


@dataclass(slots=True, frozen=True, eq=False)
class GroupLayout:
    """Tree data of one group, shared by every objective configuration.

    Token arrays are flattened trajectory by trajectory. A cell is one
    (process set, position) pair inside a non-empty span.
    """

    tree: ProcessTree
    assignment: TokenAssignment
    stats: RewardStats
    advantages: NDArray[np.float64]
    steps: StepAdvantages
    token_advantage: NDArray[np.float64]
    step_advantage: NDArray[np.float64]
    owner_size: NDArray[np.float64]
    cell: NDArray[np.int64]
    cells: int
    representative: NDArray[np.bool_]
    partition_order: NDArray[np.int64]
