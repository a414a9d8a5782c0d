import numpy as np
from entities.group.models import Group, LogpField, RewardStats
from entities.objective.exceptions import (
    AssignmentMismatchError,
    ObjectiveConfigurationError,
)
from entities.objective.models import (
    ObjectiveConfig,
    ObjectiveReport,
    StepAdvantages,
)
from entities.tree.models import ProcessTree, TokenAssignment
from numpy.typing import NDArray
from services.base import BaseService
from services.step_rewards import StepRewardService
from shared.enums.objective import ObjectiveKind
from shared.utils.numeric import TokenValues, exact_sum


class ObjectiveService(BaseService):
    """Token-level GRPO, PRM and lambda-GRPO surrogate objectives.

    Every report value is the surrogate to be maximized, normalized by the
    total token count of the group; `ObjectiveReport.loss` is its negation.
    """

    def __init__(self, step_reward_service: StepRewardService) -> None:
        self.step_reward_service = step_reward_service

    def ratio_terms(
        self,
        group: Group,
        config: ObjectiveConfig,
    ) -> TokenValues:
        if config.assume_unit_ratio:
            return self._constant(group, 1.0)
        new = self._require(group, "logp_new", "ratio terms")
        old = self._require(group, "logp_old", "ratio terms")
        return tuple(
            np.exp(row_new - row_old)
            for row_new, row_old in zip(new, old, strict=True)
        )

    def kl_terms(
        self,
        group: Group,
        config: ObjectiveConfig,
    ) -> TokenValues:
        """k3 estimator exp(x) - x - 1 with x = logp_ref - logp_new."""
        if not config.uses_kl:
            return self._constant(group, 0.0)
        new = self._require(group, "logp_new", "the KL term")
        ref = self._require(group, "logp_ref", "the KL term")
        terms = []
        for row_new, row_ref in zip(new, ref, strict=True):
            log_ratio = row_ref - row_new
            terms.append(np.expm1(log_ratio) - log_ratio)
        return tuple(terms)

    def objective_grpo(
        self,
        group: Group,
        advantages: NDArray[np.float64],
        config: ObjectiveConfig,
    ) -> ObjectiveReport:
        rows = tuple(
            np.full(length, advantage, dtype=np.float64)
            for length, advantage in zip(
                group.lengths,
                advantages.tolist(),
                strict=True,
            )
        )
        return self._evaluate(ObjectiveKind.GRPO, group, rows, config)

    def objective_prm(
        self,
        group: Group,
        step_advantages: StepAdvantages,
        config: ObjectiveConfig,
    ) -> ObjectiveReport:
        return self._evaluate(
            ObjectiveKind.PRM,
            group,
            step_advantages.token_advantage,
            config,
        )

    def objective_lambda(
        self,
        group: Group,
        tree: ProcessTree,
        assignment: TokenAssignment,
        advantages: NDArray[np.float64],
        config: ObjectiveConfig,
    ) -> ObjectiveReport:
        if assignment.tree is not tree:
            raise AssignmentMismatchError
        rows = tuple(
            np.full(length, advantage, dtype=np.float64)
            for length, advantage in zip(
                group.lengths,
                advantages.tolist(),
                strict=True,
            )
        )
        return self._evaluate(
            ObjectiveKind.LAMBDA,
            group,
            rows,
            config,
            sizes=assignment.sizes(),
        )

    def lambda_weights(self, assignment: TokenAssignment) -> TokenValues:
        """1 / |λ| for every token."""
        return tuple(1.0 / row for row in assignment.sizes())

    def objective_prm_grouped(
        self,
        group: Group,
        tree: ProcessTree,
        stats: RewardStats,
        config: ObjectiveConfig,
    ) -> float:
        """L_PRM by enumerating process sets instead of tokens.

        Reads only node step rewards and whole-group statistics, never the
        outcome advantages.
        """
        ratio = self.ratio_terms(group, config)
        kl = self.kl_terms(group, config)
        blocks = []
        for node in tree.nodes:
            if node.span_length == 0:
                continue
            step_advantage = self.step_reward_service.node_advantage(
                node,
                group,
                stats,
            )
            members = sorted(node.members)
            span = slice(node.span_start, node.span_end)
            ratio_block = np.stack([ratio[index][span] for index in members])
            kl_block = np.stack([kl[index][span] for index in members])
            blocks.extend(
                ratio_block * step_advantage - config.beta * kl_block,
            )
        return self._normalize(exact_sum(blocks), group.total_tokens)

    def objective_lambda_grouped(
        self,
        group: Group,
        tree: ProcessTree,
        stats: RewardStats,
        config: ObjectiveConfig,
    ) -> float:
        """Sum over t and X_t of P_t(λ)·Â(λ) - β·D_t(λ), one term per set."""
        ratio = self.ratio_terms(group, config)
        kl = self.kl_terms(group, config)
        blocks = []
        for node in tree.nodes:
            if node.span_length == 0:
                continue
            step_advantage = self.step_reward_service.node_advantage(
                node,
                group,
                stats,
            )
            representative = min(node.members)
            span = slice(node.span_start, node.span_end)
            blocks.append(
                ratio[representative][span] * step_advantage
                - config.beta * kl[representative][span],
            )
        return self._normalize(exact_sum(blocks), group.total_tokens)

    def _evaluate(
        self,
        kind: ObjectiveKind,
        group: Group,
        advantage_rows: TokenValues,
        config: ObjectiveConfig,
        sizes: TokenValues | None = None,
    ) -> ObjectiveReport:
        ratio = self.ratio_terms(group, config)
        kl = self.kl_terms(group, config)
        advantage_part = [
            p * a for p, a in zip(ratio, advantage_rows, strict=True)
        ]
        kl_part = [config.beta * d for d in kl]
        terms = [
            x - y for x, y in zip(advantage_part, kl_part, strict=True)
        ]
        if sizes is not None:
            terms = [
                row / size for row, size in zip(terms, sizes, strict=True)
            ]
            advantage_part = [
                row / size
                for row, size in zip(advantage_part, sizes, strict=True)
            ]
            kl_part = [
                row / size for row, size in zip(kl_part, sizes, strict=True)
            ]
        token_count = group.total_tokens
        return ObjectiveReport(
            kind=kind,
            value=self._normalize(exact_sum(terms), token_count),
            per_token_terms=tuple(terms),
            advantage_total=exact_sum(advantage_part),
            kl_total=exact_sum(kl_part),
            token_count=token_count,
        )

    @staticmethod
    def _normalize(total: float, token_count: int) -> float:
        return total / token_count if token_count else 0.0

    @staticmethod
    def _constant(group: Group, value: float) -> TokenValues:
        return tuple(
            np.full(length, value, dtype=np.float64)
            for length in group.lengths
        )

    @staticmethod
    def _require(
        group: Group,
        name: LogpField,
        purpose: str,
    ) -> TokenValues:
        rows = []
        for index, trajectory in enumerate(group.trajectories):
            row = trajectory.logp(name)
            if row is None:
                raise ObjectiveConfigurationError(
                    f"{purpose} need {name} on every completion; "
                    f"completion {index} of {group.query_id!r} has none",
                )
            rows.append(row)
        return tuple(rows)
