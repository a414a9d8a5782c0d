"""Toy environments and the six-completion group they are built around.

The six sequences overlap in nested prefixes: two of them
share three tokens, three share four and two of those share two more.
"""

from collections.abc import Sequence

import numpy as np
from entities.group.models import Group, Trajectory
from entities.simulation.config import SimConfig
from entities.simulation.exceptions import SimulationConfigError
from entities.simulation.models import (
    Context,
    Scenario,
    ToyEnv,
    ToyPolicy,
)
from shared.enums.generation import SimScenario

WORKED_TOKENS: tuple[Context, ...] = (
    (5, 5, 5, 1, 1, 1),
    (5, 5, 5, 2, 2),
    (7, 7, 7, 7, 3, 3),
    (7, 7, 7, 7, 4, 4, 8),
    (7, 7, 7, 7, 4, 4, 9, 9),
    (6, 6),
)
WORKED_REWARDS: tuple[float, ...] = (0.5, 0.5, 1.0, 0.0, 0.0, 0.5)
TERMINAL_TOKEN = 0


def worked_group(
    rewards: Sequence[float] = WORKED_REWARDS,
    *,
    query_id: str = "worked",
    step: int | None = None,
) -> Group:
    return Group(
        query_id=query_id,
        step=step,
        trajectories=tuple(
            Trajectory(tokens=tokens, reward=reward)
            for tokens, reward in zip(WORKED_TOKENS, rewards, strict=True)
        ),
    )


def build_scenario(config: SimConfig) -> Scenario:
    match config.scenario:
        case SimScenario.EXPLOITATION:
            return _worked_scenario(config, WORKED_REWARDS, 0.0)
        case SimScenario.CONSTANT:
            return _worked_scenario(config, (1.0,) * 6, 1.0)
        case SimScenario.RANDOM:
            return _random_scenario(config)


def shared_prefix(env: ToyEnv) -> Context:
    """Longest prefix the best sequence shares with another rewarded one."""
    best = env.best_sequence()
    if best is None:
        return ()
    longest = 0
    for tokens in env.reward_table:
        if tokens == best:
            continue
        size = 0
        for left, right in zip(best, tokens, strict=False):
            if left != right:
                break
            size += 1
        longest = max(longest, size)
    return best[: max(longest, 1)]


def _worked_scenario(
    config: SimConfig,
    rewards: Sequence[float],
    default_reward: float,
) -> Scenario:
    longest = max(len(tokens) for tokens in WORKED_TOKENS) + 1
    if config.vocab_size <= max(max(tokens) for tokens in WORKED_TOKENS):
        raise SimulationConfigError(
            f"scenario {config.scenario} needs vocab_size >= 10",
        )
    if config.horizon < longest:
        raise SimulationConfigError(
            f"scenario {config.scenario} needs horizon >= {longest}",
        )
    sequences = [(*tokens, TERMINAL_TOKEN) for tokens in WORKED_TOKENS]
    env = ToyEnv(
        reward_table=dict(zip(sequences, rewards, strict=True)),
        max_len=config.horizon,
        terminal_token=TERMINAL_TOKEN,
        default_reward=default_reward,
    )
    policy = _biased_policy(config, sequences, {})
    return Scenario(policy=policy, env=env, prefix=shared_prefix(env))


def _random_scenario(config: SimConfig) -> Scenario:
    rng = np.random.default_rng(config.seed)
    body_high = max(config.horizon - 1, 0)
    table: dict[Context, float] = {}
    bodies: list[list[int]] = []
    for _ in range(config.k):
        length = int(rng.integers(min(1, body_high), body_high + 1))
        body = rng.integers(1, config.vocab_size, size=length).tolist()
        if bodies and length and rng.random() < 0.5:  # noqa: PLR2004
            source = bodies[int(rng.integers(len(bodies)))]
            shared = int(rng.integers(0, min(len(source), length) + 1))
            body[:shared] = source[:shared]
        bodies.append(body)
        table[(*body, TERMINAL_TOKEN)] = float(rng.random())
    base = _biased_policy(config, list(table), {})
    noise = {
        context: row + rng.normal(size=config.vocab_size)
        for context, row in sorted(base.logits.items())
    }
    policy = _biased_policy(config, [], noise)
    env = ToyEnv(
        reward_table=table,
        max_len=config.horizon,
        terminal_token=TERMINAL_TOKEN,
    )
    return Scenario(policy=policy, env=env, prefix=shared_prefix(env))


def _biased_policy(
    config: SimConfig,
    sequences: Sequence[Context],
    logits: dict[Context, np.ndarray],
) -> ToyPolicy:
    policy = ToyPolicy(
        vocab_size=config.vocab_size,
        horizon=config.horizon,
        temperature=config.temperature,
        context_order=config.context_order,
        logits=logits,
    )
    rows: dict[Context, np.ndarray] = {}
    for tokens in sequences:
        for t, token in enumerate(tokens):
            context = policy.context(tokens[:t])
            row = rows.setdefault(
                context,
                np.zeros(config.vocab_size, dtype=np.float64),
            )
            row[token] = config.bias
    if not rows:
        return policy
    return ToyPolicy(
        vocab_size=config.vocab_size,
        horizon=config.horizon,
        temperature=config.temperature,
        context_order=config.context_order,
        logits={**logits, **rows},
    )
