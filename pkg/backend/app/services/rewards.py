import math

import numpy as np
from entities.group.models import Group, RewardStats
from numpy.typing import NDArray
from services.base import BaseService
from shared.enums.rewards import StdMode


class RewardService(BaseService):
    def reward_stats(
        self,
        group: Group,
        std_mode: StdMode = StdMode.SAMPLE,
        epsilon: float = 1e-8,
    ) -> RewardStats:
        rewards = group.rewards.tolist()
        mean = math.fsum(rewards) / group.k
        variance = math.fsum((reward - mean) ** 2 for reward in rewards) / (
            group.k - std_mode.ddof
        )
        return RewardStats(
            mean=mean,
            std=math.sqrt(variance),
            std_mode=std_mode,
            epsilon=epsilon,
        )

    def normalize(
        self,
        values: NDArray[np.float64],
        stats: RewardStats,
    ) -> NDArray[np.float64]:
        if stats.degenerate:
            return np.zeros_like(values, dtype=np.float64)
        return (values - stats.mean) / stats.std

    def outcome_advantages(
        self,
        group: Group,
        stats: RewardStats,
    ) -> NDArray[np.float64]:
        return self.normalize(group.rewards, stats)
