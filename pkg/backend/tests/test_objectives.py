import math

import numpy as np
import pytest
from entities.group.models import Group, Trajectory
from entities.objective.exceptions import (
    AssignmentMismatchError,
    ObjectiveConfigurationError,
)
from entities.objective.models import ObjectiveConfig
from factories import WORKED_STD, WORKED_TOKENS_TOTAL, make_group
from numpy.testing import assert_allclose
from services.objectives import ObjectiveService
from services.process_tree import ProcessTreeService
from services.rewards import RewardService
from services.step_rewards import StepRewardService
from shared.enums.objective import ObjectiveKind

UNIT = ObjectiveConfig(beta=0.0, assume_unit_ratio=True)

GRPO_GOLDEN = -20 / 12 / WORKED_STD / WORKED_TOKENS_TOTAL
LAMBDA_GOLDEN = -5 / 12 / WORKED_STD / WORKED_TOKENS_TOTAL


@pytest.fixture
def evaluate(
    reward_service: RewardService,
    tree_service: ProcessTreeService,
    step_reward_service: StepRewardService,
    objective_service: ObjectiveService,
):
    def run(group: Group, config: ObjectiveConfig = UNIT):
        stats = reward_service.reward_stats(group)
        advantages = reward_service.outcome_advantages(group, stats)
        tree = tree_service.build_process_tree(group)
        assignment = tree_service.assign_tokens(tree)
        steps = step_reward_service.step_advantages(
            tree,
            assignment,
            group,
            stats,
        )
        return {
            ObjectiveKind.GRPO: objective_service.objective_grpo(
                group,
                advantages,
                config,
            ),
            ObjectiveKind.PRM: objective_service.objective_prm(
                group,
                steps,
                config,
            ),
            ObjectiveKind.LAMBDA: objective_service.objective_lambda(
                group,
                tree,
                assignment,
                advantages,
                config,
            ),
            "prm_grouped": objective_service.objective_prm_grouped(
                group,
                tree,
                stats,
                config,
            ),
            "lambda_grouped": objective_service.objective_lambda_grouped(
                group,
                tree,
                stats,
                config,
            ),
        }

    return run


def with_logps(group: Group, seed: int = 0) -> Group:
    """Attach log-probabilities that agree on shared prefixes."""
    rng = np.random.default_rng(seed)
    cache: dict[tuple[int, ...], tuple[float, float, float]] = {}
    trajectories = []
    for trajectory in group.trajectories:
        rows: tuple[list[float], ...] = ([], [], [])
        for t in range(trajectory.length):
            prefix = trajectory.tokens[: t + 1]
            if prefix not in cache:
                cache[prefix] = tuple(
                    np.log(rng.uniform(0.05, 1.0, size=3)).tolist(),
                )
            for row, value in zip(rows, cache[prefix], strict=True):
                row.append(value)
        trajectories.append(
            trajectory.model_copy(
                update={
                    "logp_new": tuple(rows[0]),
                    "logp_old": tuple(rows[1]),
                    "logp_ref": tuple(rows[2]),
                },
            ),
        )
    return group.model_copy(update={"trajectories": tuple(trajectories)})


def test_worked_goldens(evaluate, worked):
    reports = evaluate(worked)
    grpo = reports[ObjectiveKind.GRPO]
    lam = reports[ObjectiveKind.LAMBDA]

    assert grpo.value == pytest.approx(GRPO_GOLDEN, rel=1e-13)
    assert reports[ObjectiveKind.PRM].value == pytest.approx(
        GRPO_GOLDEN,
        rel=1e-13,
    )
    assert reports["prm_grouped"] == pytest.approx(GRPO_GOLDEN, rel=1e-13)
    assert lam.value == pytest.approx(LAMBDA_GOLDEN, rel=1e-13)
    assert reports["lambda_grouped"] == pytest.approx(
        LAMBDA_GOLDEN,
        rel=1e-13,
    )
    assert grpo.value == pytest.approx(-0.130235, abs=1e-5)
    assert lam.value == pytest.approx(-0.032558, abs=1e-5)
    assert grpo.loss == -grpo.value
    assert grpo.token_count == WORKED_TOKENS_TOTAL
    assert grpo.kl_total == 0.0


def test_grpo_and_prm_terms_differ_per_token(evaluate, worked):
    reports = evaluate(worked)
    grpo = reports[ObjectiveKind.GRPO]
    prm = reports[ObjectiveKind.PRM]

    # g3 is rewarded, its shared prefix is not
    assert grpo.term(2, 0) > 0 > prm.term(2, 0)
    assert grpo.term(2, 5) == pytest.approx(prm.term(2, 5))


def test_lambda_scales_terms_by_process_set_size(evaluate, worked):
    reports = evaluate(worked)
    grpo = reports[ObjectiveKind.GRPO]
    lam = reports[ObjectiveKind.LAMBDA]

    assert lam.term(4, 0) == pytest.approx(grpo.term(4, 0) / 3)
    assert lam.term(4, 4) == pytest.approx(grpo.term(4, 4) / 2)
    assert lam.term(4, 7) == pytest.approx(grpo.term(4, 7))


def test_trivial_group_has_identical_terms(evaluate):
    group = make_group([[1, 2], [2, 2, 2], [3]], [1.0, 0.0, 0.5])
    reports = evaluate(group)

    for kind in (ObjectiveKind.PRM, ObjectiveKind.LAMBDA):
        for left, right in zip(
            reports[ObjectiveKind.GRPO].per_token_terms,
            reports[kind].per_token_terms,
            strict=True,
        ):
            assert_allclose(left, right, rtol=0, atol=0)


def test_constant_rewards_only_keep_kl(evaluate):
    group = with_logps(make_group([[1, 2], [1, 3], [4]], [1.0, 1.0, 1.0]))
    config = ObjectiveConfig(beta=0.5, assume_unit_ratio=False)
    reports = evaluate(group, config)

    for kind in (ObjectiveKind.GRPO, ObjectiveKind.PRM):
        assert reports[kind].advantage_total == 0.0
        assert reports[kind].value == pytest.approx(
            -0.5 * reports[kind].kl_total / 0.5 / 5,
        )
    assert reports[ObjectiveKind.GRPO].kl_total > 0


def test_kl_is_k3_estimator(objective_service: ObjectiveService):
    group = Group(
        query_id="kl",
        trajectories=(
            Trajectory(
                tokens=(1, 2),
                reward=1.0,
                logp_new=(math.log(0.5), math.log(0.25)),
                logp_ref=(math.log(0.5), math.log(0.5)),
            ),
            Trajectory(
                tokens=(3,),
                reward=0.0,
                logp_new=(math.log(0.8),),
                logp_ref=(math.log(0.4),),
            ),
        ),
    )
    terms = objective_service.kl_terms(group, ObjectiveConfig(beta=0.1))

    assert_allclose(terms[0], [0.0, 2 - math.log(2) - 1], atol=1e-15)
    assert_allclose(terms[1], [0.5 + math.log(2) - 1], atol=1e-15)


def test_ratio_terms(objective_service: ObjectiveService):
    group = Group(
        query_id="ratio",
        trajectories=(
            Trajectory(
                tokens=(1,),
                reward=1.0,
                logp_new=(math.log(0.3),),
                logp_old=(math.log(0.6),),
            ),
            Trajectory(
                tokens=(2,),
                reward=0.0,
                logp_new=(math.log(0.9),),
                logp_old=(math.log(0.9),),
            ),
        ),
    )
    config = ObjectiveConfig(beta=0.0, assume_unit_ratio=False)
    ratio = objective_service.ratio_terms(group, config)

    assert ratio[0][0] == pytest.approx(0.5)
    assert ratio[1][0] == pytest.approx(1.0)


def test_missing_logps_are_rejected(evaluate, worked):
    for config in (
        ObjectiveConfig(beta=0.04, assume_unit_ratio=True),
        ObjectiveConfig(beta=0.0, assume_unit_ratio=False),
    ):
        assert not config.supports(worked)
        with pytest.raises(ObjectiveConfigurationError):
            evaluate(worked, config)


def test_empty_completions_only(evaluate):
    group = make_group([[], []], [1.0, 0.0])
    reports = evaluate(group)

    assert reports[ObjectiveKind.GRPO].value == 0.0
    assert reports[ObjectiveKind.LAMBDA].value == 0.0
    assert reports["prm_grouped"] == 0.0


def test_two_summation_orders_agree_with_ratio_and_kl(evaluate, worked):
    group = with_logps(worked, seed=4)
    config = ObjectiveConfig(beta=0.04, assume_unit_ratio=False)
    reports = evaluate(group, config)
    scale = max(abs(reports[ObjectiveKind.GRPO].value), 1e-3)

    for key in (ObjectiveKind.PRM, "prm_grouped"):
        value = reports[key]
        value = getattr(value, "value", value)
        assert abs(value - reports[ObjectiveKind.GRPO].value) <= 1e-12 * scale
    assert abs(
        reports["lambda_grouped"] - reports[ObjectiveKind.LAMBDA].value,
    ) <= 1e-12 * max(abs(reports[ObjectiveKind.LAMBDA].value), 1e-3)


def test_lambda_rejects_foreign_assignment(
    reward_service: RewardService,
    tree_service: ProcessTreeService,
    objective_service: ObjectiveService,
    worked,
):
    stats = reward_service.reward_stats(worked)
    tree = tree_service.build_process_tree(worked)
    foreign = tree_service.assign_tokens(
        tree_service.build_process_tree(worked),
    )

    with pytest.raises(AssignmentMismatchError) as error:
        objective_service.objective_lambda(
            worked,
            tree,
            foreign,
            reward_service.outcome_advantages(worked, stats),
            UNIT,
        )
    assert isinstance(error.value, ValueError)
