from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict
from shared.enums.rewards import StdMode


class CoreSettings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="PRM_")

    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"
    LOG_JSON: bool = False

    STD_MODE: StdMode = StdMode.SAMPLE
    BETA: float = Field(default=0.04, ge=0, allow_inf_nan=False)
    EPSILON: float = Field(default=1e-8, gt=0)
    TOLERANCE: float = Field(default=1e-9, gt=0)
    IDENTITY_TOLERANCE: float = Field(default=1e-12, gt=0)
    STRICT: bool = False

    LABEL_TOKENS: int = Field(default=8, ge=1)


core_settings = CoreSettings()
