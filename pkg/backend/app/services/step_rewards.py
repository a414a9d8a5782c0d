import math

import numpy as np
from entities.group.models import Group, RewardStats
from entities.objective.models import StepAdvantages
from entities.tree.models import ProcessNode, ProcessTree, TokenAssignment
from services.base import BaseService
from services.rewards import RewardService


class StepRewardService(BaseService):
    def __init__(self, reward_service: RewardService) -> None:
        self.reward_service = reward_service

    def step_reward(self, node: ProcessNode, group: Group) -> float:
        """Monte Carlo step reward: mean outcome reward of the members."""
        if node.step_reward_cache is None:
            node.step_reward_cache = math.fsum(
                group.trajectories[index].reward for index in node.members
            ) / len(node.members)
        return node.step_reward_cache

    def node_advantage(
        self,
        node: ProcessNode,
        group: Group,
        stats: RewardStats,
    ) -> float:
        if stats.degenerate:
            return 0.0
        return (self.step_reward(node, group) - stats.mean) / stats.std

    def step_advantages(
        self,
        tree: ProcessTree,
        assignment: TokenAssignment,
        group: Group,
        stats: RewardStats,
    ) -> StepAdvantages:
        reward_of = np.asarray(
            [self.step_reward(node, group) for node in tree.nodes],
            dtype=np.float64,
        )
        token_reward = tuple(reward_of[row] for row in assignment.owners)
        return StepAdvantages(
            token_reward=token_reward,
            token_advantage=tuple(
                self.reward_service.normalize(row, stats)
                for row in token_reward
            ),
        )

    def process_steps(
        self,
        tree: ProcessTree,
        group: Group,
        index: int,
    ) -> list[tuple[tuple[int, ...], float]]:
        """The PRM view of g_i: (span tokens, step reward) along its path."""
        tokens = group.trajectories[index].tokens
        return [
            (
                tuple(tokens[node.span_start : node.span_end]),
                self.step_reward(node, group),
            )
            for node in tree.path(index)
            if node.span_length > 0
        ]
