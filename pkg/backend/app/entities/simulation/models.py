from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from shared.enums.objective import ObjectiveKind
from shared.schemas.base import WireModel

MAX_VOCAB = 16
MAX_HORIZON = 12

type Context = tuple[int, ...]
type GradientTable = dict[Context, NDArray[np.float64]]


@dataclass(slots=True, frozen=True, eq=False)
class ToyPolicy:
    """Tabular autoregressive policy over the last `context_order` tokens."""

    vocab_size: int
    horizon: int
    logits: dict[Context, NDArray[np.float64]] = field(default_factory=dict)
    temperature: float = 1.0
    context_order: int = 4

    def __post_init__(self) -> None:
        if not 2 <= self.vocab_size <= MAX_VOCAB:  # noqa: PLR2004
            raise ValueError(f"vocab_size must be in [2, {MAX_VOCAB}]")
        if not 1 <= self.horizon <= MAX_HORIZON:
            raise ValueError(f"horizon must be in [1, {MAX_HORIZON}]")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        for context, row in self.logits.items():
            if row.shape != (self.vocab_size,) or not np.isfinite(row).all():
                raise ValueError(f"bad logits row for context {context}")

    def context(self, prefix: Context) -> Context:
        if self.context_order == 0:
            return ()
        return tuple(prefix[-self.context_order :])

    def logits_for(self, context: Context) -> NDArray[np.float64]:
        row = self.logits.get(context)
        if row is None:
            return np.zeros(self.vocab_size, dtype=np.float64)
        return row

    def log_probs(self, context: Context) -> NDArray[np.float64]:
        scaled = self.logits_for(context) / self.temperature
        return scaled - np.logaddexp.reduce(scaled)

    def probs(self, context: Context) -> NDArray[np.float64]:
        return np.exp(self.log_probs(context))

    def token_log_prob(self, prefix: Context, token: int) -> float:
        return float(self.log_probs(self.context(prefix))[token])

    def sequence_log_prob(self, tokens: Context) -> float:
        return float(
            sum(
                self.token_log_prob(tokens[:t], token)
                for t, token in enumerate(tokens)
            ),
        )

    def with_logits(
        self,
        context: Context,
        row: NDArray[np.float64],
    ) -> ToyPolicy:
        return ToyPolicy(
            vocab_size=self.vocab_size,
            horizon=self.horizon,
            logits={**self.logits, context: row},
            temperature=self.temperature,
            context_order=self.context_order,
        )

    def updated(
        self,
        gradient: GradientTable,
        learn_rate: float,
    ) -> ToyPolicy:
        """Gradient ascent step on the objective."""
        logits = dict(self.logits)
        for context, grad in gradient.items():
            logits[context] = self.logits_for(context) + learn_rate * grad
        return ToyPolicy(
            vocab_size=self.vocab_size,
            horizon=self.horizon,
            logits=logits,
            temperature=self.temperature,
            context_order=self.context_order,
        )


@dataclass(slots=True, frozen=True, eq=False)
class ToyEnv:
    reward_table: dict[Context, float]
    max_len: int
    terminal_token: int | None = None
    default_reward: float = 0.0

    def __post_init__(self) -> None:
        if self.max_len < 1:
            raise ValueError("max_len must be positive")

    def reward(self, tokens: Context) -> float:
        return self.reward_table.get(tokens, self.default_reward)

    def best_sequence(self) -> Context | None:
        if not self.reward_table:
            return None
        return max(
            sorted(self.reward_table),
            key=lambda tokens: self.reward_table[tokens],
        )


class SimStep(WireModel):
    step: int
    objective: ObjectiveKind
    objective_value: float
    expected_reward: float
    best_probability: float
    prefix_probability: float
    trivial: bool


@dataclass(slots=True, frozen=True, eq=False)
class Scenario:
    policy: ToyPolicy
    env: ToyEnv
    prefix: Context
