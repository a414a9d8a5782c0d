from collections.abc import Iterable, Iterator

from core.logs import logger
from dishka import FromDishka
from dto.verify import VerifyDTO
from entities.group.models import Group
from entities.objective.models import ObjectiveConfig
from entities.verification.exceptions import VerificationInputError
from entities.verification.models import VerificationReport
from interactors.base import EXIT_FAILURE, EXIT_OK, BaseInteractor
from services.equivalence import EquivalenceService
from services.group_io import GroupIOService
from shared.utils.files import open_input, open_output


class VerifyInteractor(BaseInteractor[VerifyDTO]):
    def __init__(
        self,
        group_io: FromDishka[GroupIOService],
        equivalence_service: FromDishka[EquivalenceService],
    ):
        self.group_io = group_io
        self.equivalence_service = equivalence_service

    def execute(self, dto: VerifyDTO) -> int:
        if (dto.input is None) == (dto.random is None):
            raise VerificationInputError(
                "verify needs either an input file or --random N",
            )
        configs = self.config_matrix(dto.options.beta)

        report = VerificationReport()
        if dto.input is not None:
            with open_input(dto.input) as source:
                reader = self.group_io.parse_groups(
                    source,
                    strict=dto.options.strict,
                )
                report = self._run(dto, configs, enumerate(reader), None)
        else:
            if dto.include_degenerate:
                degenerate = self.equivalence_service.degenerate_groups()
                report = self._run(dto, configs, enumerate(degenerate), None)
            report = report.merge(
                self._run(
                    dto,
                    configs,
                    self._random_groups(dto),
                    dto.params.seed,
                ),
            )

        with open_output(dto.output) as out:
            out.write(report.model_dump_json(indent=2) + "\n")
        logger.info(
            "Verification finished",
            groups=report.groups_checked,
            checks=report.checks,
            max_rel_gap=report.max_rel_gap,
            max_identity_gap=report.max_identity_gap,
            failures=len(report.failures),
        )
        return EXIT_OK if report.passed else EXIT_FAILURE

    @staticmethod
    def config_matrix(beta: float) -> list[ObjectiveConfig]:
        """beta in {0, beta} crossed with unit and computed ratios."""
        return [
            ObjectiveConfig(beta=value, assume_unit_ratio=unit)
            for value in sorted({0.0, beta})
            for unit in (True, False)
        ]

    def _run(
        self,
        dto: VerifyDTO,
        configs: list[ObjectiveConfig],
        groups: Iterable[tuple[int, Group]],
        seed: int | None,
    ) -> VerificationReport:
        return self.equivalence_service.verify_suite(
            groups,
            configs,
            dto.options.tolerance,
            dto.identity_tolerance,
            std_mode=dto.options.std_mode,
            epsilon=dto.options.epsilon,
            seed=seed,
        )

    def _random_groups(self, dto: VerifyDTO) -> Iterator[tuple[int, Group]]:
        for index in range(dto.random or 0):
            yield index, self.equivalence_service.generate_random_group(
                dto.params,
                index,
            )
