from pydantic import BaseModel, ConfigDict, Field
from shared.enums.rewards import StdMode


class BaseDTO(BaseModel):
    model_config = ConfigDict(frozen=True)


class ObjectiveOptionsDTO(BaseDTO):
    std_mode: StdMode = StdMode.SAMPLE
    beta: float = Field(default=0.04, ge=0)
    epsilon: float = Field(default=1e-8, gt=0)
    tolerance: float = Field(default=1e-9, gt=0)
    strict: bool = False
    assume_unit_ratio: bool = True
