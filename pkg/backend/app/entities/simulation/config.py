from typing import Self

from pydantic import Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict
from shared.enums.generation import SimScenario
from shared.enums.objective import ObjectiveKind
from shared.enums.rewards import StdMode


class SimConfig(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="SIM_",
        extra="ignore",
        frozen=True,
    )

    seed: int = Field(default=0, ge=0)
    k: int = Field(default=6, ge=2)
    steps: int = Field(default=50, ge=0)
    learn_rate: float = Field(default=1.0, gt=0)
    objective: ObjectiveKind = ObjectiveKind.GRPO
    std_mode: StdMode = StdMode.SAMPLE
    epsilon: float = Field(default=1e-8, gt=0)
    beta: float = 0.0
    scenario: SimScenario = SimScenario.EXPLOITATION
    vocab_size: int = Field(default=10, ge=2, le=16)
    horizon: int = Field(default=12, ge=1, le=12)
    temperature: float = Field(default=1.0, gt=0)
    context_order: int = Field(default=4, ge=0)
    bias: float = Field(default=3.0, ge=0)

    @model_validator(mode="after")
    def check_supported(self) -> Self:
        if self.objective is ObjectiveKind.PRM:
            raise ValueError("simulation objective must be grpo or lambda")
        if self.beta != 0:
            raise ValueError("the simulator runs without a KL term (beta=0)")
        return self
