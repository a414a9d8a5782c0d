from core.logs import logger
from dishka import FromDishka
from dto.report import ReportDTO
from entities.metrics.schemas import SummaryReport
from interactors.analyze import summary_table
from interactors.base import EXIT_OK, BaseInteractor, console
from rich.table import Table
from services.metrics import MetricsService
from shared.utils.files import open_output


class ReportInteractor(BaseInteractor[ReportDTO]):
    def __init__(self, metrics_service: FromDishka[MetricsService]):
        self.metrics_service = metrics_service

    def execute(self, dto: ReportDTO) -> int:
        reports = [
            SummaryReport.model_validate_json(path.read_bytes())
            for path in dto.summaries
        ]
        merged = SummaryReport.from_summary(
            self.metrics_service.merge_summaries(
                report.summary for report in reports
            ),
            sum(report.skipped_lines for report in reports),
        )
        with open_output(dto.output) as out:
            out.write(merged.model_dump_json(indent=2) + "\n")
        logger.info(
            "Summaries merged",
            files=len(reports),
            groups=merged.groups,
        )
        console.print(summary_table(merged))
        if merged.series:
            console.print(series_table(merged))
        return EXIT_OK


def series_table(report: SummaryReport) -> Table:
    table = Table(title="Per-step series")
    for column in ("step", "groups", "trivial", "mean depth", "mean p"):
        table.add_column(column, justify="right")
    for row in report.series:
        table.add_row(
            str(row.step),
            str(row.groups),
            *(
                "-" if value is None else f"{value:.4f}"
                for value in (row.trivial_fraction, row.mean_depth, row.mean_p)
            ),
        )
    return table
