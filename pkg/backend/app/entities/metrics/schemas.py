from entities.metrics.models import MetricsSummary
from pydantic import NonNegativeInt
from shared.schemas.base import WireModel


class StepSeriesRow(WireModel):
    step: int
    groups: NonNegativeInt
    trivial_fraction: float | None
    mean_depth: float | None
    mean_p: float | None


class SummaryReport(WireModel):
    """Aggregate metrics plus the statistics derived from them.

    Only `summary` is read back when reports are merged.
    """

    summary: MetricsSummary
    groups: NonNegativeInt
    trivial_fraction: float | None
    mean_depth: float | None
    mean_p: float | None
    zero_length_trajectories: NonNegativeInt
    skipped_lines: NonNegativeInt = 0
    quantiles: dict[str, float | int | None]
    series: list[StepSeriesRow] = []

    @classmethod
    def from_summary(
        cls,
        summary: MetricsSummary,
        skipped_lines: int = 0,
    ) -> "SummaryReport":
        return cls(
            summary=summary,
            groups=summary.groups,
            trivial_fraction=summary.trivial_fraction,
            mean_depth=summary.mean_depth,
            mean_p=summary.mean_p,
            zero_length_trajectories=summary.zero_length_trajectories,
            skipped_lines=skipped_lines,
            quantiles=summary.quantiles(),
            series=[
                StepSeriesRow(
                    step=step,
                    groups=item.groups,
                    trivial_fraction=item.trivial_fraction,
                    mean_depth=item.mean_depth,
                    mean_p=item.mean_p,
                )
                for step, item in summary.steps.items()
            ],
        )
