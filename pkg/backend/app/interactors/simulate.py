import csv

from core.logs import logger
from dishka import FromDishka
from dto.simulate import SimulateDTO
from entities.simulation.config import SimConfig
from entities.simulation.models import SimStep
from interactors.base import EXIT_OK, BaseInteractor, render_float
from services.toy_sim import ToySimService
from shared.utils.files import open_output

SERIES_COLUMNS = tuple(SimStep.model_fields)


class SimulateInteractor(BaseInteractor[SimulateDTO]):
    def __init__(self, toy_sim_service: FromDishka[ToySimService]):
        self.toy_sim_service = toy_sim_service

    def execute(self, dto: SimulateDTO) -> int:
        config = (
            SimConfig(_env_file=dto.config)
            if dto.config is not None
            else SimConfig()
        )
        logger.info("Simulation started", **config.model_dump(mode="json"))
        series = self.toy_sim_service.run_experiment(config)
        with open_output(dto.output) as out:
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(SERIES_COLUMNS)
            for row in series:
                writer.writerow(
                    [
                        str(row.step),
                        str(row.objective),
                        render_float(row.objective_value),
                        render_float(row.expected_reward),
                        render_float(row.best_probability),
                        render_float(row.prefix_probability),
                        str(row.trivial).lower(),
                    ],
                )
        if series:
            logger.info(
                "Simulation finished",
                steps=len(series),
                expected_reward=series[-1].expected_reward,
            )
        return EXIT_OK
