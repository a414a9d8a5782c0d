from pathlib import Path

from dto.base import BaseDTO, ObjectiveOptionsDTO
from shared.enums.objective import ObjectiveKind


class WeightsDTO(BaseDTO):
    options: ObjectiveOptionsDTO
    input: Path
    objective: ObjectiveKind = ObjectiveKind.GRPO
    output: Path | None = None
