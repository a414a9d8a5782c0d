from core.logs import logger
from dishka import FromDishka
from dto.weights import WeightsDTO
from entities.group.models import Group
from entities.group.schemas.records import CompletionWeights, WeightRecord
from entities.objective.exceptions import ObjectiveConfigurationError
from entities.objective.models import ObjectiveConfig
from interactors.base import EXIT_OK, BaseInteractor, objective_config
from services.group_io import GroupIOService
from services.objectives import ObjectiveService
from services.process_tree import ProcessTreeService
from services.rewards import RewardService
from services.step_rewards import StepRewardService
from shared.enums.objective import ObjectiveKind
from shared.utils.files import open_input, open_output


class WeightsInteractor(BaseInteractor[WeightsDTO]):
    def __init__(
        self,
        group_io: FromDishka[GroupIOService],
        tree_service: FromDishka[ProcessTreeService],
        reward_service: FromDishka[RewardService],
        step_reward_service: FromDishka[StepRewardService],
        objective_service: FromDishka[ObjectiveService],
    ):
        self.group_io = group_io
        self.tree_service = tree_service
        self.reward_service = reward_service
        self.step_reward_service = step_reward_service
        self.objective_service = objective_service

    def execute(self, dto: WeightsDTO) -> int:
        if dto.objective is ObjectiveKind.PRM:
            raise ObjectiveConfigurationError(
                "weights are emitted for the grpo or lambda objective",
            )
        config = objective_config(dto.options)
        count = 0
        unsupported = 0
        with open_input(dto.input) as source, open_output(dto.output) as out:
            reader = self.group_io.parse_groups(
                source,
                strict=dto.options.strict,
            )
            for group in reader:
                if not config.supports(group):
                    logger.warning(
                        "Group lacks log-probabilities, skipped",
                        query_id=group.query_id,
                        beta=config.beta,
                        hint="use --beta 0 without --with-ratio",
                    )
                    unsupported += 1
                    continue
                record = self.weight_record(group, dto, config)
                out.write(self.group_io.serialize_weights(record) + "\n")
                count += 1
        logger.info(
            "Weights emitted",
            groups=count,
            skipped=reader.skipped,
            unsupported=unsupported,
            objective=str(dto.objective),
        )
        return EXIT_OK

    def weight_record(
        self,
        group: Group,
        dto: WeightsDTO,
        config: ObjectiveConfig,
    ) -> WeightRecord:
        stats = self.reward_service.reward_stats(
            group,
            dto.options.std_mode,
            dto.options.epsilon,
        )
        advantages = self.reward_service.outcome_advantages(group, stats)
        tree = self.tree_service.build_process_tree(group)
        assignment = self.tree_service.assign_tokens(tree)
        steps = self.step_reward_service.step_advantages(
            tree,
            assignment,
            group,
            stats,
        )
        lambda_weights = self.objective_service.lambda_weights(assignment)
        if dto.objective is ObjectiveKind.LAMBDA:
            report = self.objective_service.objective_lambda(
                group,
                tree,
                assignment,
                advantages,
                config,
            )
        else:
            report = self.objective_service.objective_grpo(
                group,
                advantages,
                config,
            )
        return WeightRecord(
            query_id=group.query_id,
            step=group.step,
            objective=dto.objective,
            objective_value=report.value,
            loss=report.loss,
            completions=[
                CompletionWeights(
                    advantage=advantage,
                    token_advantage=token_advantage.tolist(),
                    lambda_weight=weights.tolist(),
                )
                for advantage, token_advantage, weights in zip(
                    advantages.tolist(),
                    steps.token_advantage,
                    lambda_weights,
                    strict=True,
                )
            ],
        )
