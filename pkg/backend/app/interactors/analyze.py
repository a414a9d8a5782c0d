import csv

from core.logs import logger
from dishka import FromDishka
from dto.analyze import AnalyzeDTO
from entities.group.models import Group
from entities.metrics.models import GroupMetrics, MetricsSummary
from entities.metrics.schemas import SummaryReport
from entities.objective.models import ObjectiveConfig
from interactors.base import (
    EXIT_OK,
    BaseInteractor,
    console,
    objective_config,
    render_float,
)
from rich.table import Table
from services.group_io import GroupIOService
from services.metrics import MetricsService
from services.objectives import ObjectiveService
from services.process_tree import ProcessTreeService
from services.rewards import RewardService
from shared.utils.files import open_input, open_output

CSV_COLUMNS = (
    "query_id",
    "step",
    "k",
    "trivial",
    "mean_depth",
    "max_depth",
    "mean_p",
    "objective_grpo",
    "objective_lambda",
)


class AnalyzeInteractor(BaseInteractor[AnalyzeDTO]):
    def __init__(
        self,
        group_io: FromDishka[GroupIOService],
        tree_service: FromDishka[ProcessTreeService],
        reward_service: FromDishka[RewardService],
        objective_service: FromDishka[ObjectiveService],
        metrics_service: FromDishka[MetricsService],
    ):
        self.group_io = group_io
        self.tree_service = tree_service
        self.reward_service = reward_service
        self.objective_service = objective_service
        self.metrics_service = metrics_service

    def execute(self, dto: AnalyzeDTO) -> int:
        config = objective_config(dto.options)
        summary = MetricsSummary()
        with open_input(dto.input) as source, open_output(dto.output) as out:
            reader = self.group_io.parse_groups(
                source,
                strict=dto.options.strict,
            )
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for group in reader:
                metrics, objectives = self.analyze_group(group, dto, config)
                summary = summary.merge(
                    self.metrics_service.summarize(metrics),
                )
                writer.writerow(self.csv_row(metrics, *objectives))

        report = SummaryReport.from_summary(summary, reader.skipped)
        logger.info(
            "Groups analyzed",
            groups=summary.groups,
            skipped=reader.skipped,
            trivial_fraction=summary.trivial_fraction,
        )
        if dto.summary is not None:
            with open_output(dto.summary) as out:
                out.write(report.model_dump_json(indent=2) + "\n")
        console.print(summary_table(report))
        return EXIT_OK

    def analyze_group(
        self,
        group: Group,
        dto: AnalyzeDTO,
        config: ObjectiveConfig,
    ) -> tuple[GroupMetrics, tuple[float | None, float | None]]:
        tree = self.tree_service.build_process_tree(group)
        metrics = self.metrics_service.group_metrics(tree, group)
        if metrics.zero_length:
            logger.warning(
                "Zero-length completions",
                query_id=group.query_id,
                indices=list(metrics.zero_length),
            )
        if not config.supports(group):
            return metrics, (None, None)
        stats = self.reward_service.reward_stats(
            group,
            dto.options.std_mode,
            dto.options.epsilon,
        )
        advantages = self.reward_service.outcome_advantages(group, stats)
        grpo = self.objective_service.objective_grpo(
            group,
            advantages,
            config,
        )
        lam = self.objective_service.objective_lambda(
            group,
            tree,
            self.tree_service.assign_tokens(tree),
            advantages,
            config,
        )
        return metrics, (grpo.value, lam.value)

    @staticmethod
    def csv_row(
        metrics: GroupMetrics,
        objective_grpo: float | None,
        objective_lambda: float | None,
    ) -> list[str]:
        return [
            metrics.query_id,
            "" if metrics.step is None else str(metrics.step),
            str(metrics.k),
            str(metrics.trivial).lower(),
            render_float(metrics.mean_depth),
            str(metrics.max_depth),
            render_float(metrics.mean_p),
            render_float(objective_grpo),
            render_float(objective_lambda),
        ]


def summary_table(report: SummaryReport) -> Table:
    table = Table(title="Process tree summary")
    table.add_column("statistic")
    table.add_column("value", justify="right")
    rows = [
        ("groups", report.groups),
        ("skipped lines", report.skipped_lines),
        ("trivial fraction", report.trivial_fraction),
        ("mean depth", report.mean_depth),
        ("mean p", report.mean_p),
        ("zero-length completions", report.zero_length_trajectories),
        *report.quantiles.items(),
    ]
    for name, value in rows:
        table.add_row(
            name,
            "-" if value is None else f"{value:.4g}",
        )
    return table
