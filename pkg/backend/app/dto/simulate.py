from pathlib import Path

from dto.base import BaseDTO


class SimulateDTO(BaseDTO):
    config: Path | None = None
    output: Path | None = None
