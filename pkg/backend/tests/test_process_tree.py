import numpy as np
import pytest
from entities.objective.models import ObjectiveConfig
from entities.tree.exceptions import PositionOutOfRangeError
from entities.verification.models import GenParams
from factories import (
    brute_force_process_sets,
    common_prefix_length,
    make_group,
)
from services.equivalence import EquivalenceService
from services.metrics import MetricsService
from services.objectives import ObjectiveService
from services.process_tree import ProcessTreeService
from services.rewards import RewardService
from services.step_rewards import StepRewardService

WORKED_NODES = [
    ({0, 1, 2, 3, 4, 5}, (0, 0)),
    ({0, 1}, (0, 3)),
    ({0}, (3, 6)),
    ({1}, (3, 5)),
    ({5}, (0, 2)),
    ({2, 3, 4}, (0, 4)),
    ({2}, (4, 6)),
    ({3, 4}, (4, 6)),
    ({3}, (6, 7)),
    ({4}, (6, 8)),
]


def members_of(nodes) -> set[frozenset[int]]:
    return {node.members for node in nodes}


def test_worked_tree(tree_service: ProcessTreeService, worked):
    tree = tree_service.build_process_tree(worked)

    assert [
        (set(node.members), (node.span_start, node.span_end))
        for node in tree.nodes
    ] == WORKED_NODES
    assert tree.edge_count == 9
    assert [node.id for node in tree.root.children] == [1, 4, 5]
    assert tree.node(7).parent_id == 5
    assert not tree_service.is_trivial(tree)


def test_worked_token_owners(tree_service: ProcessTreeService, worked):
    tree = tree_service.build_process_tree(worked)
    assignment = tree_service.assign_tokens(tree)

    assert assignment.owner(0, 0).members == {0, 1}
    assert assignment.owner(0, 3).members == {0}
    assert assignment.owner(4, 5).members == {3, 4}
    assert assignment.owner(3, 6).members == {3}
    np.testing.assert_array_equal(
        assignment.sizes()[4],
        [3, 3, 3, 3, 2, 2, 1, 1],
    )


def test_worked_partitions(tree_service: ProcessTreeService, worked):
    tree = tree_service.build_process_tree(worked)

    assert members_of(tree_service.partition_at(tree, 0)) == {
        frozenset({0, 1}),
        frozenset({2, 3, 4}),
        frozenset({5}),
    }
    assert members_of(tree_service.partition_at(tree, 5)) == {
        frozenset({0}),
        frozenset({2}),
        frozenset({3, 4}),
    }
    assert members_of(tree_service.partition_at(tree, 7)) == {
        frozenset({4}),
    }
    for t, nodes in enumerate(tree_service.partitions(tree)):
        assert members_of(nodes) == members_of(
            tree_service.partition_at(tree, t),
        )


@pytest.mark.parametrize("t", [-1, 8, 100])
def test_partition_out_of_range(
    tree_service: ProcessTreeService,
    worked,
    t: int,
):
    tree = tree_service.build_process_tree(worked)

    with pytest.raises(PositionOutOfRangeError):
        tree_service.partition_at(tree, t)
    with pytest.raises(IndexError):
        tree_service.partition_at(tree, t)


def test_distinct_first_tokens_are_trivial(tree_service: ProcessTreeService):
    group = make_group(
        [[1, 2, 3], [2, 2], [3], [4, 1, 1, 1], [5, 5], [6]],
        [1, 0, 1, 0, 1, 0],
    )
    tree = tree_service.build_process_tree(group)
    assignment = tree_service.assign_tokens(tree)

    assert tree_service.is_trivial(tree)
    assert len(tree.nodes) == 7
    assert tree.edge_count == 6
    assert (tree.root.span_start, tree.root.span_end) == (0, 0)
    for index, trajectory in enumerate(group.trajectories):
        for t in range(trajectory.length):
            assert assignment.owner(index, t).members == {index}


def test_duplicates_get_empty_leaves(tree_service: ProcessTreeService):
    group = make_group([[1, 2, 3], [1, 2, 3], [4]], [1, 0, 0])
    tree = tree_service.build_process_tree(group)
    pair = next(node for node in tree.nodes if node.members == {0, 1})

    assert (pair.span_start, pair.span_end) == (0, 3)
    for index in (0, 1):
        leaf = tree.terminal(index)
        assert leaf.span_start == leaf.span_end == 3
    assert not tree_service.is_trivial(tree)


def test_two_identical_trajectories(tree_service: ProcessTreeService):
    group = make_group([[1, 2], [1, 2]], [1, 0])
    tree = tree_service.build_process_tree(group)

    assert (tree.root.span_start, tree.root.span_end) == (0, 2)
    assert members_of(tree.nodes) == {
        frozenset({0, 1}),
        frozenset({0}),
        frozenset({1}),
    }
    # the root owns both tokens, so A and a differ there
    assert not tree_service.is_trivial(tree)


def test_exact_prefix(tree_service: ProcessTreeService):
    group = make_group([[1, 2], [1, 2, 3, 4], [1, 2, 5]], [0, 1, 1])
    tree = tree_service.build_process_tree(group)

    assert (tree.root.span_start, tree.root.span_end) == (0, 2)
    leaf = tree.terminal(0)
    assert (leaf.span_start, leaf.span_end) == (2, 2)
    assert tree.terminal(1).span_end == 4


def test_empty_completion(tree_service: ProcessTreeService):
    group = make_group([[], [1, 2], [1, 3]], [1, 0, 0])
    tree = tree_service.build_process_tree(group)
    assignment = tree_service.assign_tokens(tree)

    assert tree.terminal(0).span_length == 0
    assert assignment.owners[0].shape == (0,)
    assert assignment.owner(1, 0).members == {1, 2}


def random_groups(
    equivalence_service: EquivalenceService,
    count: int,
    **params,
):
    gen = GenParams(seed=11, **params)
    for index in range(count):
        yield equivalence_service.generate_random_group(gen, index)


def test_matches_brute_force_enumeration(
    tree_service: ProcessTreeService,
    equivalence_service: EquivalenceService,
):
    for group in random_groups(
        equivalence_service,
        300,
        k_range=(2, 6),
        length_range=(0, 8),
        vocab_size=3,
        fork_bias=0.7,
    ):
        tree = tree_service.build_process_tree(group)

        assert tree.member_sets() == brute_force_process_sets(group)
        assert len(tree.nodes) == len(tree.member_sets())


def test_structural_invariants(
    tree_service: ProcessTreeService,
    equivalence_service: EquivalenceService,
):
    for group in random_groups(
        equivalence_service,
        200,
        k_range=(2, 10),
        length_range=(0, 20),
        vocab_size=4,
    ):
        tree = tree_service.build_process_tree(group)
        sequences = [trajectory.tokens for trajectory in group.trajectories]
        for node in tree.nodes:
            assert node.span_start <= node.span_end
            members = [sequences[index] for index in sorted(node.members)]
            if node.is_terminal:
                assert node.span_end == len(members[0])
            else:
                assert node.span_end == common_prefix_length(members)
                assert sorted(
                    index
                    for child in node.children
                    for index in child.members
                ) == sorted(node.members)
            for child in node.children:
                assert child.span_start == node.span_end

        for index, length in enumerate(group.lengths):
            path = tree.path(index)
            assert path[0] is tree.root
            assert path[-1].members == {index}
            covered = [
                t
                for node in path
                for t in range(node.span_start, node.span_end)
            ]
            assert covered == list(range(length))
            assert tree_service.reconstruct(tree, group, index) == (
                sequences[index]
            )

        for t, nodes in enumerate(tree_service.partitions(tree)):
            members = [index for node in nodes for index in node.members]
            assert len(members) == len(set(members))
            assert set(members) == {
                index
                for index, length in enumerate(group.lengths)
                if length > t
            }


def test_permutation_invariance(
    tree_service: ProcessTreeService,
    equivalence_service: EquivalenceService,
):
    rng = np.random.default_rng(5)
    for group in random_groups(equivalence_service, 100, k_range=(2, 8)):
        order = rng.permutation(group.k).tolist()
        shuffled = group.model_copy(
            update={
                "trajectories": tuple(
                    group.trajectories[index] for index in order
                ),
            },
        )
        original = tree_service.build_process_tree(group)
        permuted = tree_service.build_process_tree(shuffled)

        relabeled = {
            frozenset(order[index] for index in members)
            for members in permuted.member_sets()
        }
        assert relabeled == original.member_sets()
        spans = {
            node.members: (node.span_start, node.span_end)
            for node in original.nodes
        }
        for node in permuted.nodes:
            key = frozenset(order[index] for index in node.members)
            assert spans[key] == (node.span_start, node.span_end)


def test_shared_root_span_is_not_trivial(tree_service: ProcessTreeService):
    group = make_group([[1, 2, 3], [1, 2, 4]], [0, 1])
    tree = tree_service.build_process_tree(group)

    assert tree.root.span_length == 2
    assert all(node.is_root or node.is_terminal for node in tree.nodes)
    assert not tree_service.is_trivial(tree)


def test_trivial_trees_keep_outcome_advantages(
    tree_service: ProcessTreeService,
    reward_service: RewardService,
    step_reward_service: StepRewardService,
    objective_service: ObjectiveService,
    metrics_service: MetricsService,
    equivalence_service: EquivalenceService,
):
    config = ObjectiveConfig(beta=0.04, assume_unit_ratio=False)
    trivial = 0
    for group in random_groups(
        equivalence_service,
        200,
        k_range=(2, 3),
        length_range=(1, 4),
        vocab_size=3,
        fork_bias=0.0,
        degenerate_rate=0.0,
    ):
        tree = tree_service.build_process_tree(group)
        if not tree_service.is_trivial(tree):
            continue
        trivial += 1
        assignment = tree_service.assign_tokens(tree)
        stats = reward_service.reward_stats(group)
        advantages = reward_service.outcome_advantages(group, stats)
        steps = step_reward_service.step_advantages(
            tree,
            assignment,
            group,
            stats,
        )
        grpo = objective_service.objective_grpo(group, advantages, config)
        lam = objective_service.objective_lambda(
            group,
            tree,
            assignment,
            advantages,
            config,
        )
        metrics = metrics_service.group_metrics(tree, group)

        for index, row in enumerate(steps.token_advantage):
            assert np.array_equal(row, np.full(row.shape, advantages[index]))
        for left, right in zip(
            grpo.per_token_terms,
            lam.per_token_terms,
            strict=True,
        ):
            assert np.array_equal(left, right)
        assert metrics.intermediate_proportion == (0.0,) * group.k
    assert trivial > 0
