import itertools
import math
import sys
from collections.abc import Iterable, Sequence
from fractions import Fraction

import numpy as np
from core.logs import logger
from entities.group.models import Group, RewardStats, Trajectory
from entities.objective.models import ObjectiveConfig
from entities.tree.models import ProcessTree
from entities.verification.models import (
    GenParams,
    GroupLayout,
    VerificationFailure,
    VerificationReport,
)
from numpy.typing import NDArray
from services.base import BaseService
from services.objectives import ObjectiveService
from services.process_tree import ProcessTreeService
from services.rewards import RewardService
from services.step_rewards import StepRewardService
from shared.enums.generation import LogpMode, RewardDist
from shared.enums.rewards import StdMode
from shared.utils.numeric import (
    TokenValues,
    abs_mass,
    flatten,
    relative_gap,
    scaled_gaps,
)

LOGP_FLOOR = 0.05
# objectives this close to zero next to their term mass are re-summed exactly
CANCELLATION_FLOOR = 1e-12


class EquivalenceService(BaseService):
    def __init__(
        self,
        reward_service: RewardService,
        tree_service: ProcessTreeService,
        step_reward_service: StepRewardService,
        objective_service: ObjectiveService,
    ) -> None:
        self.reward_service = reward_service
        self.tree_service = tree_service
        self.step_reward_service = step_reward_service
        self.objective_service = objective_service

    # generation

    def generate_random_group(self, params: GenParams, index: int) -> Group:
        rng = np.random.default_rng([params.seed, index])
        k = int(rng.integers(params.k_range[0], params.k_range[1] + 1))
        first_tokens = (
            rng.permutation(params.vocab_size)[:k].tolist()
            if params.distinct_first_tokens
            else None
        )
        sequences: list[list[int]] = []
        for position in range(k):
            low, high = params.length_range
            length = int(rng.integers(low, high + 1))
            if first_tokens is not None:
                tail = self._fresh(rng, params.vocab_size, length - 1)
                sequences.append([first_tokens[position], *tail])
                continue
            sequences.append(
                self._draw_sequence(rng, params, sequences, length),
            )
        rewards = self._draw_rewards(rng, params.reward_dist, k)
        logps = self._draw_logps(rng, params.logp_mode, sequences)
        return Group(
            query_id=f"random-{params.seed}-{index}",
            trajectories=tuple(
                Trajectory(
                    tokens=tuple(tokens),
                    reward=reward,
                    logp_new=logp[0] if logp else None,
                    logp_old=logp[1] if logp else None,
                    logp_ref=logp[2] if logp else None,
                )
                for tokens, reward, logp in zip(
                    sequences,
                    rewards,
                    logps,
                    strict=True,
                )
            ),
        )

    def _draw_sequence(
        self,
        rng: np.random.Generator,
        params: GenParams,
        previous: list[list[int]],
        length: int,
    ) -> list[int]:
        if previous:
            draw = rng.random()
            source = previous[int(rng.integers(len(previous)))]
            if draw < params.degenerate_rate:
                return list(source)
            if draw < 2 * params.degenerate_rate and source:
                shortest = max(params.length_range[0], 1)
                return source[: int(rng.integers(shortest, len(source) + 1))]
            if rng.random() < params.fork_bias and source and length:
                return self._fork(rng, params.vocab_size, source, length)
        return self._fresh(rng, params.vocab_size, length)

    def _fork(
        self,
        rng: np.random.Generator,
        vocab_size: int,
        source: list[int],
        length: int,
    ) -> list[int]:
        shared = int(rng.integers(1, min(len(source), length) + 1))
        tokens = source[:shared]
        if shared < length:
            token = int(rng.integers(vocab_size))
            if shared < len(source) and token == source[shared]:
                token = (token + 1 + int(rng.integers(vocab_size - 1))) % (
                    vocab_size
                )
            tokens.append(token)
            tokens.extend(self._fresh(rng, vocab_size, length - shared - 1))
        return tokens

    @staticmethod
    def _fresh(
        rng: np.random.Generator,
        vocab_size: int,
        length: int,
    ) -> list[int]:
        return rng.integers(vocab_size, size=max(length, 0)).tolist()

    @staticmethod
    def _draw_rewards(
        rng: np.random.Generator,
        reward_dist: RewardDist,
        k: int,
    ) -> list[float]:
        match reward_dist:
            case RewardDist.BERNOULLI:
                return rng.integers(2, size=k).astype(float).tolist()
            case RewardDist.UNIFORM:
                return rng.random(k).tolist()
            case RewardDist.CONSTANT:
                return [1.0] * k

    @staticmethod
    def _draw_logps(
        rng: np.random.Generator,
        logp_mode: LogpMode,
        sequences: list[list[int]],
    ) -> list[tuple[list[float], list[float], list[float]] | None]:
        if logp_mode is LogpMode.ABSENT:
            return [None] * len(sequences)
        # one draw per distinct prefix, so trajectories sharing a prefix
        # share their log-probabilities
        prefix_ids: dict[tuple[int, int], int] = {}
        id_rows = []
        for tokens in sequences:
            ids = []
            parent = -1
            for token in tokens:
                parent = prefix_ids.setdefault(
                    (parent, token),
                    len(prefix_ids),
                )
                ids.append(parent)
            id_rows.append(np.asarray(ids, dtype=np.intp))
        values = np.log(
            rng.uniform(LOGP_FLOOR, 1.0, size=(len(prefix_ids), 3)),
        )
        result: list[tuple[list[float], list[float], list[float]] | None] = []
        for ids in id_rows:
            new, old, ref = values[ids].T.tolist()
            result.append((new, old, ref))
        return result

    def degenerate_groups(self) -> list[Group]:
        """Fixed edge cases every default verification suite runs."""

        def group(
            query_id: str,
            sequences: Sequence[Sequence[int]],
            rewards: Sequence[float],
        ) -> Group:
            rng = np.random.default_rng(len(query_id))
            logps = self._draw_logps(
                rng,
                LogpMode.RANDOM_CONSISTENT,
                [list(tokens) for tokens in sequences],
            )
            return Group(
                query_id=query_id,
                trajectories=tuple(
                    Trajectory(
                        tokens=tuple(tokens),
                        reward=reward,
                        logp_new=logp[0],
                        logp_old=logp[1],
                        logp_ref=logp[2],
                    )
                    for tokens, reward, logp in zip(
                        sequences,
                        rewards,
                        logps,
                        strict=True,
                    )
                ),
            )

        return [
            group("duplicate-pair", [[1, 2, 3], [1, 2, 3]], [0.0, 1.0]),
            group(
                "duplicate-in-three",
                [[1, 2, 3], [1, 2, 3], [4, 5]],
                [1.0, 0.0, 0.5],
            ),
            group(
                "exact-prefix",
                [[1, 2], [1, 2, 3, 4], [1, 2, 5]],
                [0.0, 1.0, 1.0],
            ),
            group(
                "constant-rewards",
                [[1, 2, 3], [1, 2, 4], [5]],
                [0.5, 0.5, 0.5],
            ),
            group("empty-completion", [[], [1, 2], [1, 3]], [1.0, 0.0, 0.5]),
        ]

    # verification

    def layout(
        self,
        group: Group,
        *,
        std_mode: StdMode = StdMode.SAMPLE,
        epsilon: float = 1e-8,
    ) -> GroupLayout:
        """Tree, statistics and flat token indices of one group."""
        stats = self.reward_service.reward_stats(group, std_mode, epsilon)
        tree = self.tree_service.build_process_tree(group)
        assignment = self.tree_service.assign_tokens(tree)
        advantages = self.reward_service.outcome_advantages(group, stats)
        steps = self.step_reward_service.step_advantages(
            tree,
            assignment,
            group,
            stats,
        )
        lengths = np.asarray(group.lengths, dtype=np.int64)
        member = np.repeat(np.arange(group.k, dtype=np.int64), lengths)
        position = np.concatenate(
            [np.arange(length, dtype=np.int64) for length in group.lengths],
        )
        owner = np.concatenate(assignment.owners).astype(np.int64)
        span_start = np.asarray(
            [node.span_start for node in tree.nodes],
            dtype=np.int64,
        )
        span_length = np.asarray(
            [node.span_length for node in tree.nodes],
            dtype=np.int64,
        )
        smallest = np.asarray(
            [min(node.members) for node in tree.nodes],
            dtype=np.int64,
        )
        size = np.asarray(
            [node.size for node in tree.nodes],
            dtype=np.float64,
        )
        first_cell = np.cumsum(span_length) - span_length
        offsets = [0, *itertools.accumulate(group.lengths)]
        order = [
            offsets[index] + t
            for t, nodes in enumerate(self.tree_service.partitions(tree))
            for node in nodes
            for index in sorted(node.members)
        ]
        return GroupLayout(
            tree=tree,
            assignment=assignment,
            stats=stats,
            advantages=advantages,
            steps=steps,
            token_advantage=np.repeat(advantages, lengths),
            step_advantage=flatten(steps.token_advantage),
            owner_size=size[owner],
            cell=first_cell[owner] + position - span_start[owner],
            cells=int(span_length.sum()),
            representative=member == smallest[owner],
            partition_order=np.asarray(order, dtype=np.int64),
        )

    def verify_theorem1(
        self,
        group: Group,
        config: ObjectiveConfig,
        tol: float,
        *,
        std_mode: StdMode = StdMode.SAMPLE,
        epsilon: float = 1e-8,
        seed: int | None = None,
        index: int = 0,
        layout: GroupLayout | None = None,
    ) -> VerificationReport:
        """Compare L_GRPO and L_PRM relative to max(|L_GRPO|, |L_PRM|).

        When both sit at rounding level next to a large term mass, the
        pair is recomputed in exact arithmetic before it is judged.
        """
        if layout is None:
            layout = self.layout(group, std_mode=std_mode, epsilon=epsilon)
        # token-sum path: outcome advantages only, no tree
        grpo = self.objective_service.objective_grpo(
            group,
            self.reward_service.outcome_advantages(group, layout.stats),
            config,
        )
        # node-enumeration path: step rewards only, no outcome advantages
        prm_value = self.objective_service.objective_prm_grouped(
            group,
            layout.tree,
            layout.stats,
            config,
        )
        grpo_value = grpo.value
        mass = self._mean_mass(grpo.per_token_terms, group.total_tokens)
        if (
            relative_gap(grpo_value, prm_value) > tol
            and abs(grpo_value - prm_value) <= CANCELLATION_FLOOR * mass
        ):
            grpo_value, prm_value = self.exact_objectives(
                group,
                layout.tree,
                layout.stats,
                config,
            )
        recorder = _Recorder(seed, index, tol)
        recorder.compare_objectives("theorem1", grpo_value, prm_value)
        return recorder.finish(
            trivial=self.tree_service.is_trivial(layout.tree),
        )

    def exact_objectives(
        self,
        group: Group,
        tree: ProcessTree,
        stats: RewardStats,
        config: ObjectiveConfig,
    ) -> tuple[float, float]:
        """L_GRPO and L_PRM with every sum taken over exact rationals.

        Only the division by the std and the token count rounds, so equal
        objectives come out bit-identical.
        """
        ratio = self.objective_service.ratio_terms(group, config)
        kl = self.objective_service.kl_terms(group, config)
        rewards = [Fraction(reward) for reward in group.rewards.tolist()]
        mean = sum(rewards, Fraction()) / group.k
        grpo_centred = sum(
            (
                (reward - mean) * _rational_sum(row)
                for reward, row in zip(rewards, ratio, strict=True)
            ),
            Fraction(),
        )
        grpo_kl = sum((_rational_sum(row) for row in kl), Fraction())
        prm_centred = Fraction()
        prm_kl = Fraction()
        for node in tree.nodes:
            if node.span_length == 0:
                continue
            step_reward = (
                sum((rewards[index] for index in node.members), Fraction())
                / node.size
            )
            span = slice(node.span_start, node.span_end)
            for index in node.members:
                prm_centred += (step_reward - mean) * _rational_sum(
                    ratio[index][span],
                )
                prm_kl += _rational_sum(kl[index][span])
        token_count = group.total_tokens
        return (
            _rational_objective(
                grpo_centred,
                grpo_kl,
                stats,
                config.beta,
                token_count,
            ),
            _rational_objective(
                prm_centred,
                prm_kl,
                stats,
                config.beta,
                token_count,
            ),
        )

    def verify_proof_identities(
        self,
        group: Group,
        config: ObjectiveConfig,
        tol: float,
        *,
        std_mode: StdMode = StdMode.SAMPLE,
        epsilon: float = 1e-8,
        seed: int | None = None,
        index: int = 0,
        layout: GroupLayout | None = None,
    ) -> VerificationReport:
        if layout is None:
            layout = self.layout(group, std_mode=std_mode, epsilon=epsilon)
        ratio = flatten(self.objective_service.ratio_terms(group, config))
        kl = config.beta * flatten(
            self.objective_service.kl_terms(group, config),
        )
        grpo = self.objective_service.objective_grpo(
            group,
            layout.advantages,
            config,
        )
        prm = self.objective_service.objective_prm(
            group,
            layout.steps,
            config,
        )
        lam = self.objective_service.objective_lambda(
            group,
            layout.tree,
            layout.assignment,
            layout.advantages,
            config,
        )
        recorder = _Recorder(seed, index, tol)
        self._check_per_node(recorder, layout, ratio, kl)

        total = group.total_tokens
        for name, report in (("grpo", grpo), ("prm", prm), ("lambda", lam)):
            terms = flatten(report.per_token_terms)
            partition_sum = math.fsum(terms[layout.partition_order].tolist())
            recorder.compare_identities(
                f"partition_{name}",
                report.value,
                partition_sum / total if total else 0.0,
                self._mean_mass(report.per_token_terms, total),
            )

        recorder.compare_identities(
            "scaling",
            flatten(grpo.per_token_terms),
            layout.owner_size * flatten(lam.per_token_terms),
        )
        recorder.compare_identities(
            "lambda_grouped",
            lam.value,
            self.objective_service.objective_lambda_grouped(
                group,
                layout.tree,
                layout.stats,
                config,
            ),
            self._mean_mass(lam.per_token_terms, total),
        )
        return recorder.finish(
            trivial=self.tree_service.is_trivial(layout.tree),
        )

    @staticmethod
    def _check_per_node(
        recorder: "_Recorder",
        layout: GroupLayout,
        ratio: NDArray[np.float64],
        kl: NDArray[np.float64],
    ) -> None:
        """Per-set sums of PRM terms, of GRPO terms and |λ|·(P̂·Â - β·D̂)."""
        cell = layout.cell
        cells = layout.cells
        step_part = ratio * layout.step_advantage
        outcome_part = ratio * layout.token_advantage
        prm_terms = step_part - kl
        prm_sum = np.bincount(cell, weights=prm_terms, minlength=cells)
        grpo_sum = np.bincount(
            cell,
            weights=outcome_part - kl,
            minlength=cells,
        )
        picked = layout.representative
        grouped = np.bincount(
            cell[picked],
            weights=layout.owner_size[picked] * prm_terms[picked],
            minlength=cells,
        )
        scale = sum(
            np.bincount(cell, weights=np.abs(part), minlength=cells)
            for part in (outcome_part, step_part, kl)
        )
        for check, other in (
            ("per_node_grouped", grouped),
            ("per_node_grpo", grpo_sum),
        ):
            recorder.compare_identities(check, prm_sum, other, scale)

    @staticmethod
    def _mean_mass(terms: TokenValues, token_count: int) -> float:
        return abs_mass(terms) / token_count if token_count else 0.0

    def verify_suite(
        self,
        groups: Iterable[tuple[int, Group]],
        configs: Sequence[ObjectiveConfig],
        tol: float,
        identity_tol: float,
        *,
        std_mode: StdMode = StdMode.SAMPLE,
        epsilon: float = 1e-8,
        seed: int | None = None,
    ) -> VerificationReport:
        report = VerificationReport()
        for index, group in groups:
            group_report = VerificationReport(groups_checked=1)
            layout: GroupLayout | None = None
            for config in configs:
                if not config.supports(group):
                    group_report = group_report.merge(
                        VerificationReport(configs_skipped=1),
                    )
                    continue
                if layout is None:
                    layout = self.layout(
                        group,
                        std_mode=std_mode,
                        epsilon=epsilon,
                    )
                for check, check_tol in (
                    (self.verify_theorem1, tol),
                    (self.verify_proof_identities, identity_tol),
                ):
                    outcome = check(
                        group,
                        config,
                        check_tol,
                        std_mode=std_mode,
                        epsilon=epsilon,
                        seed=seed,
                        index=index,
                        layout=layout,
                    )
                    group_report = group_report.merge(
                        outcome.model_copy(
                            update={"groups_checked": 0, "trivial_count": 0},
                        ),
                    )
            if layout is not None and self.tree_service.is_trivial(
                layout.tree,
            ):
                group_report = group_report.merge(
                    VerificationReport(trivial_count=1),
                )
            for failure in group_report.failures:
                logger.warning(
                    "Verification failure",
                    query_id=group.query_id,
                    check=failure.check,
                    gap=failure.gap,
                )
            report = report.merge(group_report)
        return report


def _rational_sum(row: NDArray[np.float64]) -> Fraction:
    return sum(map(Fraction, row.tolist()), Fraction())


def _rational_objective(
    centred: Fraction,
    kl: Fraction,
    stats: RewardStats,
    beta: float,
    token_count: int,
) -> float:
    if not token_count:
        return 0.0
    advantage = 0.0 if stats.degenerate else float(centred) / stats.std
    return (advantage - beta * float(kl)) / token_count


class _Recorder:
    """Collects checks of one group; failures keep the worst gap."""

    def __init__(self, seed: int | None, index: int, tol: float) -> None:
        self.seed = seed
        self.index = index
        self.tol = tol
        self.checks = 0
        self.max_abs_gap = 0.0
        self.max_rel_gap = 0.0
        self.max_identity_gap = 0.0
        self.failures: dict[str, float] = {}

    def compare_objectives(self, check: str, lhs: float, rhs: float) -> None:
        self.checks += 1
        abs_gap = abs(lhs - rhs)
        rel_gap = relative_gap(lhs, rhs)
        if not math.isfinite(abs_gap):
            abs_gap = sys.float_info.max
        if not math.isfinite(rel_gap):
            rel_gap = sys.float_info.max
        self.max_abs_gap = max(self.max_abs_gap, abs_gap)
        self.max_rel_gap = max(self.max_rel_gap, rel_gap)
        self._judge(check, rel_gap)

    def compare_identities(
        self,
        check: str,
        lhs: NDArray[np.float64] | float,
        rhs: NDArray[np.float64] | float,
        scale: NDArray[np.float64] | float = 0.0,
    ) -> None:
        gaps = scaled_gaps(
            np.atleast_1d(np.asarray(lhs, dtype=np.float64)),
            np.atleast_1d(np.asarray(rhs, dtype=np.float64)),
            scale,
        )
        if not gaps.size:
            return
        self.checks += int(gaps.size)
        worst = float(gaps.max())
        self.max_identity_gap = max(self.max_identity_gap, worst)
        self._judge(check, worst)

    def _judge(self, check: str, gap: float) -> None:
        if gap > self.tol:
            self.failures[check] = max(self.failures.get(check, 0.0), gap)

    def finish(self, *, trivial: bool) -> VerificationReport:
        return VerificationReport(
            groups_checked=1,
            checks=self.checks,
            trivial_count=int(trivial),
            max_abs_gap=self.max_abs_gap,
            max_rel_gap=self.max_rel_gap,
            max_identity_gap=self.max_identity_gap,
            failures=[
                VerificationFailure(
                    check=check,
                    seed=self.seed,
                    group_index=self.index,
                    gap=gap,
                )
                for check, gap in sorted(self.failures.items())
            ],
        )
