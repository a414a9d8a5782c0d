import math
from collections.abc import Sequence

import numpy as np
from core.logs import logger
from entities.group.models import Group, Trajectory
from entities.objective.models import ObjectiveConfig
from entities.simulation.config import SimConfig
from entities.simulation.models import (
    Context,
    GradientTable,
    SimStep,
    ToyEnv,
    ToyPolicy,
)
from entities.simulation.scenarios import build_scenario
from entities.tree.models import ProcessNode
from services.base import BaseService
from services.objectives import ObjectiveService
from services.process_tree import ProcessTreeService
from services.rewards import RewardService
from services.step_rewards import StepRewardService
from shared.enums.objective import ObjectiveKind
from shared.utils.numeric import TokenValues

FD_STEP_RANGE = (1e-6, 1e-3)
GRADIENT_FLOOR = 1e-12

type Seed = int | Sequence[int]
# (context, token, coefficient, log ratio against the rollout policy)
type TokenTerm = tuple[Context, int, float, float]


class ToySimService(BaseService):
    """Tabular policy-gradient sandbox for GRPO and lambda-GRPO updates.

    Gradients are score-function gradients of the surrogate
    sum(c * exp(logp - logp_old)) with the per-token coefficient c held
    constant: A_i / N for GRPO, A_i / (|λ| N) for lambda-GRPO and the
    step advantage over N for the PRM form.
    """

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

    # sampling

    def rollout_group(
        self,
        policy: ToyPolicy,
        env: ToyEnv,
        k: int,
        seed: Seed,
        *,
        step: int | None = None,
    ) -> Group:
        rng = np.random.default_rng(seed)
        limit = min(policy.horizon, env.max_len)
        trajectories = []
        for _ in range(k):
            tokens: list[int] = []
            logps: list[float] = []
            while len(tokens) < limit:
                log_probs = policy.log_probs(policy.context(tuple(tokens)))
                probs = np.exp(log_probs)
                token = int(
                    rng.choice(policy.vocab_size, p=probs / probs.sum()),
                )
                tokens.append(token)
                logps.append(min(float(log_probs[token]), 0.0))
                if token == env.terminal_token:
                    break
            trajectories.append(
                Trajectory(
                    tokens=tuple(tokens),
                    reward=env.reward(tuple(tokens)),
                    logp_new=tuple(logps),
                    logp_old=tuple(logps),
                ),
            )
        label = seed if isinstance(seed, int) else "-".join(map(str, seed))
        return Group(
            query_id=f"toy-{label}",
            step=step,
            trajectories=tuple(trajectories),
        )

    def sequence_probability(
        self,
        policy: ToyPolicy,
        env: ToyEnv,
        tokens: Context,
    ) -> float:
        """Probability that a rollout ends as exactly `tokens`."""
        limit = min(policy.horizon, env.max_len)
        if not tokens or len(tokens) > limit:
            return 0.0
        if env.terminal_token is not None:
            if env.terminal_token in tokens[:-1]:
                return 0.0
            if tokens[-1] != env.terminal_token and len(tokens) != limit:
                return 0.0
        elif len(tokens) != limit:
            return 0.0
        return self.prefix_probability(policy, tokens)

    def prefix_probability(self, policy: ToyPolicy, prefix: Context) -> float:
        return math.exp(policy.sequence_log_prob(prefix))

    def expected_reward(self, policy: ToyPolicy, env: ToyEnv) -> float:
        covered = []
        weighted = []
        for tokens, reward in sorted(env.reward_table.items()):
            probability = self.sequence_probability(policy, env, tokens)
            covered.append(probability)
            weighted.append(probability * reward)
        rest = max(0.0, 1.0 - math.fsum(covered))
        return math.fsum(weighted) + env.default_reward * rest

    # gradients

    def coefficients(
        self,
        group: Group,
        objective: ObjectiveKind,
        config: SimConfig,
        owner: ProcessNode | None = None,
    ) -> TokenValues:
        stats = self.reward_service.reward_stats(
            group,
            config.std_mode,
            config.epsilon,
        )
        tree = self.tree_service.build_process_tree(group)
        assignment = self.tree_service.assign_tokens(tree)
        total = group.total_tokens or 1
        advantages = self.reward_service.outcome_advantages(group, stats)
        match objective:
            case ObjectiveKind.GRPO:
                rows = tuple(
                    np.full(length, advantage / total)
                    for length, advantage in zip(
                        group.lengths,
                        advantages.tolist(),
                        strict=True,
                    )
                )
            case ObjectiveKind.LAMBDA:
                rows = tuple(
                    advantage / (size * total)
                    for advantage, size in zip(
                        advantages.tolist(),
                        assignment.sizes(),
                        strict=True,
                    )
                )
            case ObjectiveKind.PRM:
                steps = self.step_reward_service.step_advantages(
                    tree,
                    assignment,
                    group,
                    stats,
                )
                rows = tuple(row / total for row in steps.token_advantage)
        if owner is None:
            return rows
        return tuple(
            np.where(owners == owner.id, row, 0.0)
            for row, owners in zip(rows, assignment.owners, strict=True)
        )

    def _token_terms(
        self,
        policy: ToyPolicy,
        group: Group,
        coefficients: TokenValues,
    ) -> list[TokenTerm]:
        terms = []
        for trajectory, row in zip(
            group.trajectories,
            coefficients,
            strict=True,
        ):
            old = trajectory.logp("logp_old")
            for t, token in enumerate(trajectory.tokens):
                context = policy.context(trajectory.tokens[:t])
                current = policy.token_log_prob(trajectory.tokens[:t], token)
                log_ratio = 0.0 if old is None else current - float(old[t])
                terms.append((context, token, float(row[t]), log_ratio))
        return terms

    def analytic_gradient(
        self,
        policy: ToyPolicy,
        group: Group,
        objective: ObjectiveKind,
        config: SimConfig,
        *,
        owner: ProcessNode | None = None,
    ) -> GradientTable:
        """Exact surrogate gradient for every logit row the group touches.

        With `owner` set, only tokens owned by that process set contribute.
        """
        coefficients = self.coefficients(group, objective, config, owner)
        weights: dict[Context, dict[int, list[float]]] = {}
        for context, token, coefficient, log_ratio in self._token_terms(
            policy,
            group,
            coefficients,
        ):
            weights.setdefault(context, {}).setdefault(token, []).append(
                coefficient * math.exp(log_ratio),
            )
        gradient: GradientTable = {}
        for context in sorted(weights):
            w = np.zeros(policy.vocab_size, dtype=np.float64)
            for token, values in weights[context].items():
                w[token] = math.fsum(values)
            total = math.fsum(w.tolist())
            gradient[context] = (
                w - policy.probs(context) * total
            ) / policy.temperature
        return gradient

    def surrogate(
        self,
        policy: ToyPolicy,
        group: Group,
        objective: ObjectiveKind,
        config: SimConfig,
    ) -> float:
        coefficients = self.coefficients(group, objective, config)
        return math.fsum(
            coefficient * math.exp(log_ratio)
            for _, _, coefficient, log_ratio in self._token_terms(
                policy,
                group,
                coefficients,
            )
        )

    def finite_diff_check(
        self,
        policy: ToyPolicy,
        group: Group,
        objective: ObjectiveKind,
        config: SimConfig,
        h: float = 1e-5,
    ) -> float:
        """Max relative error of central differences against the gradient.

        Each touched logit is bumped by +-h through `ToyPolicy.with_logits`
        and the surrogate terms at that context are re-evaluated from the
        perturbed log-probabilities. Differences of exponentials use expm1.
        """
        low, high = FD_STEP_RANGE
        if not low <= h <= high:
            raise ValueError(f"h must be in [{low}, {high}], got {h}")
        analytic = self.analytic_gradient(policy, group, objective, config)
        coefficients = self.coefficients(group, objective, config)
        by_context: dict[Context, list[tuple[int, float]]] = {}
        for context, token, coefficient, log_ratio in self._token_terms(
            policy,
            group,
            coefficients,
        ):
            by_context.setdefault(context, []).append(
                (token, coefficient * math.exp(log_ratio)),
            )

        worst = 0.0
        for context, row in analytic.items():
            base = policy.logits_for(context)
            base_log_probs = policy.log_probs(context)
            for coordinate in range(policy.vocab_size):
                bump = np.zeros(policy.vocab_size, dtype=np.float64)
                bump[coordinate] = h
                up = policy.with_logits(context, base + bump).log_probs(
                    context,
                )
                down = policy.with_logits(context, base - bump).log_probs(
                    context,
                )
                numeric = math.fsum(
                    weight
                    * math.exp(float(down[token] - base_log_probs[token]))
                    * math.expm1(float(up[token] - down[token]))
                    for token, weight in by_context[context]
                ) / (2 * h)
                expected = float(row[coordinate])
                error = abs(numeric - expected) / max(
                    abs(expected),
                    GRADIENT_FLOOR,
                )
                worst = max(worst, error)
        return worst

    def one_step_update(
        self,
        policy: ToyPolicy,
        group: Group,
        objective: ObjectiveKind,
        config: SimConfig,
    ) -> tuple[ToyPolicy, GradientTable]:
        gradient = self.analytic_gradient(policy, group, objective, config)
        return policy.updated(gradient, config.learn_rate), gradient

    def objective_value(
        self,
        group: Group,
        objective: ObjectiveKind,
        config: SimConfig,
    ) -> float:
        stats = self.reward_service.reward_stats(
            group,
            config.std_mode,
            config.epsilon,
        )
        objective_config = ObjectiveConfig(beta=0.0, assume_unit_ratio=True)
        advantages = self.reward_service.outcome_advantages(group, stats)
        if objective is ObjectiveKind.GRPO:
            report = self.objective_service.objective_grpo(
                group,
                advantages,
                objective_config,
            )
            return report.value
        tree = self.tree_service.build_process_tree(group)
        assignment = self.tree_service.assign_tokens(tree)
        if objective is ObjectiveKind.LAMBDA:
            report = self.objective_service.objective_lambda(
                group,
                tree,
                assignment,
                advantages,
                objective_config,
            )
            return report.value
        steps = self.step_reward_service.step_advantages(
            tree,
            assignment,
            group,
            stats,
        )
        return self.objective_service.objective_prm(
            group,
            steps,
            objective_config,
        ).value

    # experiments

    def run_experiment(self, config: SimConfig) -> list[SimStep]:
        scenario = build_scenario(config)
        policy, env = scenario.policy, scenario.env
        best = env.best_sequence()
        series = []
        for step in range(config.steps):
            group = self.rollout_group(
                policy,
                env,
                config.k,
                (config.seed, step),
                step=step,
            )
            row = SimStep(
                step=step,
                objective=config.objective,
                objective_value=self.objective_value(
                    group,
                    config.objective,
                    config,
                ),
                expected_reward=self.expected_reward(policy, env),
                best_probability=(
                    0.0
                    if best is None
                    else self.sequence_probability(policy, env, best)
                ),
                prefix_probability=self.prefix_probability(
                    policy,
                    scenario.prefix,
                ),
                trivial=self.tree_service.is_trivial(
                    self.tree_service.build_process_tree(group),
                ),
            )
            series.append(row)
            logger.debug(
                "Simulation step",
                step=step,
                expected_reward=row.expected_reward,
            )
            policy, _ = self.one_step_update(
                policy,
                group,
                config.objective,
                config,
            )
        return series
