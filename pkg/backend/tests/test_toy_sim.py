import itertools

import numpy as np
import pytest
from entities.group.models import Group, Trajectory
from entities.simulation.config import SimConfig
from entities.simulation.exceptions import SimulationConfigError
from entities.simulation.models import ToyEnv, ToyPolicy
from entities.simulation.scenarios import build_scenario
from numpy.testing import assert_allclose
from pydantic import ValidationError
from services.process_tree import ProcessTreeService
from services.toy_sim import ToySimService
from shared.enums.generation import SimScenario
from shared.enums.objective import ObjectiveKind

PREFIX = (7, 7, 7, 7)
PREFIX_CONTEXTS = [(7,), (7, 7), (7, 7, 7)]
OBJECTIVES = [ObjectiveKind.GRPO, ObjectiveKind.LAMBDA]


def random_policy(vocab_size: int, horizon: int, seed: int) -> ToyPolicy:
    rng = np.random.default_rng(seed)
    contexts = [
        context
        for size in range(horizon)
        for context in itertools.product(range(vocab_size), repeat=size)
    ]
    return ToyPolicy(
        vocab_size=vocab_size,
        horizon=horizon,
        logits={
            context: rng.normal(size=vocab_size) for context in contexts
        },
    )


def test_policy_probabilities():
    policy = random_policy(4, 3, seed=0)

    for context in [(), (1,), (2, 3)]:
        assert policy.probs(context).sum() == pytest.approx(1.0)
    assert_allclose(ToyPolicy(vocab_size=5, horizon=2).probs(()), 0.2)
    with pytest.raises(ValueError):
        ToyPolicy(vocab_size=1, horizon=2)
    with pytest.raises(ValueError):
        ToyPolicy(vocab_size=3, horizon=2, logits={(): np.zeros(4)})


def test_sequence_probabilities_sum_to_one(toy_sim_service: ToySimService):
    policy = random_policy(3, 3, seed=1)
    env = ToyEnv(reward_table={(1, 0): 1.0}, max_len=3, terminal_token=0)
    total = sum(
        toy_sim_service.sequence_probability(policy, env, tokens)
        for size in range(1, 4)
        for tokens in itertools.product(range(3), repeat=size)
    )

    assert total == pytest.approx(1.0, rel=1e-12)
    best = toy_sim_service.sequence_probability(policy, env, (1, 0))
    assert toy_sim_service.expected_reward(policy, env) == pytest.approx(best)
    assert toy_sim_service.sequence_probability(policy, env, (0, 1)) == 0.0
    assert toy_sim_service.sequence_probability(policy, env, (1, 2)) == 0.0


def test_rollout_is_deterministic(toy_sim_service: ToySimService):
    policy = ToyPolicy(vocab_size=10, horizon=12)
    env = ToyEnv(reward_table={}, max_len=12, terminal_token=0)
    first = toy_sim_service.rollout_group(policy, env, 6, (3, 0))

    assert first == toy_sim_service.rollout_group(policy, env, 6, (3, 0))
    assert first != toy_sim_service.rollout_group(policy, env, 6, (3, 1))
    for trajectory in first.trajectories:
        assert trajectory.logp_new == trajectory.logp_old
        assert 0 not in trajectory.tokens[:-1]


def test_greedy_policy_gives_identical_rollouts(
    toy_sim_service: ToySimService,
    tree_service: ProcessTreeService,
):
    row = np.array([0.0, 50.0, 0.0])
    policy = ToyPolicy(
        vocab_size=3,
        horizon=4,
        logits={(1,) * size: row for size in range(4)},
    )
    env = ToyEnv(reward_table={}, max_len=4)
    group = toy_sim_service.rollout_group(policy, env, 4, 0)

    assert {trajectory.tokens for trajectory in group.trajectories} == {
        (1, 1, 1, 1),
    }
    tree = tree_service.build_process_tree(group)
    assert not tree_service.is_trivial(tree)
    assert tree.root.span_length == 4
    gradient = toy_sim_service.analytic_gradient(
        policy,
        group,
        ObjectiveKind.GRPO,
        SimConfig(),
    )
    for grad in gradient.values():
        assert not grad.any()


@pytest.mark.parametrize("objective", OBJECTIVES)
@pytest.mark.parametrize(
    ("k", "vocab_size", "horizon"),
    [(4, 3, 4), (8, 3, 8), (6, 5, 6)],
)
def test_finite_differences_match_gradient(
    toy_sim_service: ToySimService,
    objective: ObjectiveKind,
    k: int,
    vocab_size: int,
    horizon: int,
):
    config = SimConfig(
        scenario=SimScenario.RANDOM,
        objective=objective,
        k=k,
        vocab_size=vocab_size,
        horizon=horizon,
    )
    for seed in range(5):
        scenario = build_scenario(config.model_copy(update={"seed": seed}))
        group = toy_sim_service.rollout_group(
            scenario.policy,
            scenario.env,
            k,
            seed,
        )
        error = toy_sim_service.finite_diff_check(
            scenario.policy,
            group,
            objective,
            config,
        )

        assert error <= 1e-4


@pytest.mark.parametrize("objective", OBJECTIVES)
def test_finite_differences_on_worked(
    toy_sim_service: ToySimService,
    worked,
    objective: ObjectiveKind,
):
    config = SimConfig(objective=objective)
    policy = build_scenario(config).policy

    assert (
        toy_sim_service.finite_diff_check(policy, worked, objective, config)
        <= 1e-4
    )


def test_finite_difference_step_range(
    toy_sim_service: ToySimService,
    worked,
):
    config = SimConfig()
    policy = build_scenario(config).policy

    for h in (1e-7, 1e-2):
        with pytest.raises(ValueError):
            toy_sim_service.finite_diff_check(
                policy,
                worked,
                ObjectiveKind.GRPO,
                config,
                h=h,
            )


def test_owner_gradient_scales_by_process_set_size(
    toy_sim_service: ToySimService,
    tree_service: ProcessTreeService,
    worked,
):
    config = SimConfig()
    policy = build_scenario(config).policy
    owner = tree_service.build_process_tree(worked).node(5)

    grpo = toy_sim_service.analytic_gradient(
        policy,
        worked,
        ObjectiveKind.GRPO,
        config,
        owner=owner,
    )
    lam = toy_sim_service.analytic_gradient(
        policy,
        worked,
        ObjectiveKind.LAMBDA,
        config,
        owner=owner,
    )

    assert grpo.keys() == lam.keys()
    for context in grpo:
        assert_allclose(grpo[context], 3 * lam[context], rtol=1e-12, atol=0)


def test_shared_prefix_contexts(
    toy_sim_service: ToySimService,
    worked,
):
    config = SimConfig()
    scenario = build_scenario(config)
    grpo = toy_sim_service.analytic_gradient(
        scenario.policy,
        worked,
        ObjectiveKind.GRPO,
        config,
    )
    lam = toy_sim_service.analytic_gradient(
        scenario.policy,
        worked,
        ObjectiveKind.LAMBDA,
        config,
    )

    assert scenario.prefix == PREFIX
    for context in PREFIX_CONTEXTS:
        assert_allclose(grpo[context], 3 * lam[context], rtol=1e-12)
        # one success and two failures share it, so it goes down
        assert grpo[context][7] < lam[context][7] < 0


def test_grpo_lowers_shared_prefix_more(
    toy_sim_service: ToySimService,
    worked,
):
    config = SimConfig()
    policy = build_scenario(config).policy
    before = toy_sim_service.prefix_probability(policy, PREFIX)

    after = {}
    for objective in (ObjectiveKind.GRPO, ObjectiveKind.LAMBDA):
        updated, _ = toy_sim_service.one_step_update(
            policy,
            worked,
            objective,
            config,
        )
        after[objective] = toy_sim_service.prefix_probability(
            updated,
            PREFIX,
        )

    assert after[ObjectiveKind.GRPO] < after[ObjectiveKind.LAMBDA] < before


def test_constant_scenario_keeps_policy(toy_sim_service: ToySimService):
    series = toy_sim_service.run_experiment(
        SimConfig(scenario=SimScenario.CONSTANT, steps=3),
    )

    assert len(series) == 3
    for row in series:
        assert row.expected_reward == pytest.approx(1.0)
        assert row.objective_value == 0.0
        assert row.prefix_probability == series[0].prefix_probability


def test_run_experiment_is_deterministic(toy_sim_service: ToySimService):
    config = SimConfig(steps=4, seed=3, objective=ObjectiveKind.LAMBDA)
    series = toy_sim_service.run_experiment(config)

    assert series == toy_sim_service.run_experiment(config)
    assert [row.step for row in series] == [0, 1, 2, 3]
    assert all(row.objective is ObjectiveKind.LAMBDA for row in series)
    assert all(0.0 <= row.best_probability <= 1.0 for row in series)
    assert toy_sim_service.run_experiment(
        config.model_copy(update={"steps": 0}),
    ) == []


def test_sim_config_validation():
    with pytest.raises(ValidationError):
        SimConfig(objective=ObjectiveKind.PRM)
    with pytest.raises(ValidationError):
        SimConfig(beta=0.1)
    with pytest.raises(ValidationError):
        SimConfig(seed=-1)


@pytest.mark.parametrize(
    "update",
    [{"vocab_size": 8}, {"horizon": 8}],
)
def test_exploitation_scenario_needs_room(update: dict):
    with pytest.raises(SimulationConfigError):
        build_scenario(SimConfig(**update))


def with_rollout_logps(policy: ToyPolicy, group: Group) -> Group:
    trajectories = []
    for trajectory in group.trajectories:
        row = tuple(
            min(policy.token_log_prob(trajectory.tokens[:t], token), 0.0)
            for t, token in enumerate(trajectory.tokens)
        )
        trajectories.append(
            Trajectory(
                tokens=trajectory.tokens,
                reward=trajectory.reward,
                logp_new=row,
                logp_old=row,
            ),
        )
    return Group(query_id=group.query_id, trajectories=tuple(trajectories))


@pytest.mark.parametrize("objective", OBJECTIVES)
def test_finite_differences_follow_temperature(
    toy_sim_service: ToySimService,
    worked,
    objective: ObjectiveKind,
):
    config = SimConfig(objective=objective, temperature=2.0)
    policy = build_scenario(config).policy
    group = with_rollout_logps(policy, worked)

    assert (
        toy_sim_service.finite_diff_check(policy, group, objective, config)
        <= 1e-4
    )


def test_finite_differences_see_softmax_changes(
    toy_sim_service: ToySimService,
    worked,
    monkeypatch: pytest.MonkeyPatch,
):
    config = SimConfig(temperature=2.0)
    policy = build_scenario(config).policy
    group = with_rollout_logps(policy, worked)

    def untempered(self: ToyPolicy, context):
        logits = self.logits_for(context)
        return logits - np.logaddexp.reduce(logits)

    monkeypatch.setattr(ToyPolicy, "log_probs", untempered)

    assert (
        toy_sim_service.finite_diff_check(
            policy,
            group,
            ObjectiveKind.GRPO,
            config,
        )
        > 0.1
    )


def test_surrogate_differences_match_gradient(
    toy_sim_service: ToySimService,
    worked,
):
    config = SimConfig(temperature=1.5)
    policy = build_scenario(config).policy
    group = with_rollout_logps(policy, worked)
    gradient = toy_sim_service.analytic_gradient(
        policy,
        group,
        ObjectiveKind.GRPO,
        config,
    )
    context, coordinate = max(
        (
            (context, coordinate)
            for context, row in gradient.items()
            for coordinate in range(policy.vocab_size)
        ),
        key=lambda key: abs(gradient[key[0]][key[1]]),
    )
    h = 1e-4
    bump = np.zeros(policy.vocab_size)
    bump[coordinate] = h
    base = policy.logits_for(context)
    values = [
        toy_sim_service.surrogate(
            policy.with_logits(context, base + sign * bump),
            group,
            ObjectiveKind.GRPO,
            config,
        )
        for sign in (1.0, -1.0)
    ]

    assert (values[0] - values[1]) / (2 * h) == pytest.approx(
        gradient[context][coordinate],
        rel=1e-5,
    )
    assert abs(gradient[context][coordinate]) > 1e-3
