import math

from pydantic import NonNegativeInt
from shared.schemas.base import DomainModel, WireModel
from shared.utils.numeric import grow_partials

SKETCH_BINS = 100
QUANTILES = (0.5, 0.9, 0.99)


class GroupMetrics(DomainModel):
    query_id: str
    step: int | None = None
    path_depth: tuple[NonNegativeInt, ...]
    intermediate_proportion: tuple[float, ...]
    n_term: tuple[NonNegativeInt, ...]
    trivial: bool
    zero_length: tuple[NonNegativeInt, ...] = ()

    @property
    def k(self) -> int:
        return len(self.path_depth)

    @property
    def mean_depth(self) -> float:
        return math.fsum(self.path_depth) / self.k

    @property
    def max_depth(self) -> int:
        return max(self.path_depth)

    @property
    def mean_p(self) -> float:
        return math.fsum(self.intermediate_proportion) / self.k


class ProportionSketch(WireModel):
    """Mergeable histogram over [0, 1]; interior bins are 0.01 wide.

    Exact zeros and ones are counted separately, so quantiles that land on
    them are exact; any other quantile is within 0.005 of the true value.
    """

    zeros: NonNegativeInt = 0
    ones: NonNegativeInt = 0
    bins: tuple[NonNegativeInt, ...] = (0,) * SKETCH_BINS

    @property
    def count(self) -> int:
        return self.zeros + self.ones + sum(self.bins)

    def add(self, values: tuple[float, ...]) -> "ProportionSketch":
        zeros, ones, bins = self.zeros, self.ones, list(self.bins)
        for value in values:
            if value <= 0.0:
                zeros += 1
            elif value >= 1.0:
                ones += 1
            else:
                bins[min(int(value * SKETCH_BINS), SKETCH_BINS - 1)] += 1
        return ProportionSketch(zeros=zeros, ones=ones, bins=tuple(bins))

    def merge(self, other: "ProportionSketch") -> "ProportionSketch":
        return ProportionSketch(
            zeros=self.zeros + other.zeros,
            ones=self.ones + other.ones,
            bins=tuple(
                a + b for a, b in zip(self.bins, other.bins, strict=True)
            ),
        )

    def quantile(self, q: float) -> float | None:
        count = self.count
        if count == 0:
            return None
        rank = max(1, math.ceil(q * count))
        if rank <= self.zeros:
            return 0.0
        seen = self.zeros
        for position, size in enumerate(self.bins):
            seen += size
            if rank <= seen:
                return (position + 0.5) / SKETCH_BINS
        return 1.0


class StepSummary(WireModel):
    groups: NonNegativeInt = 0
    trivial_groups: NonNegativeInt = 0
    trajectories: NonNegativeInt = 0
    depth_total: NonNegativeInt = 0
    # exact running sum of intermediate proportions, see grow_partials
    p_partials: tuple[float, ...] = ()

    @property
    def trivial_fraction(self) -> float | None:
        return self.trivial_groups / self.groups if self.groups else None

    @property
    def mean_depth(self) -> float | None:
        if not self.trajectories:
            return None
        return self.depth_total / self.trajectories

    @property
    def p_total(self) -> float:
        return math.fsum(self.p_partials)

    @property
    def mean_p(self) -> float | None:
        return self.p_total / self.trajectories if self.trajectories else None

    def merge(self, other: "StepSummary") -> "StepSummary":
        return StepSummary(
            groups=self.groups + other.groups,
            trivial_groups=self.trivial_groups + other.trivial_groups,
            trajectories=self.trajectories + other.trajectories,
            depth_total=self.depth_total + other.depth_total,
            p_partials=grow_partials(self.p_partials, other.p_partials),
        )


class MetricsSummary(StepSummary):
    zero_length_trajectories: NonNegativeInt = 0
    depth_counts: dict[int, NonNegativeInt] = {}
    proportions: ProportionSketch = ProportionSketch()
    steps: dict[int, StepSummary] = {}

    def depth_quantile(self, q: float) -> int | None:
        count = sum(self.depth_counts.values())
        if count == 0:
            return None
        rank = max(1, math.ceil(q * count))
        seen = 0
        for depth in sorted(self.depth_counts):
            seen += self.depth_counts[depth]
            if rank <= seen:
                return depth
        return max(self.depth_counts)

    def quantiles(self) -> dict[str, float | int | None]:
        result: dict[str, float | int | None] = {}
        for q in QUANTILES:
            suffix = f"p{round(q * 100)}"
            result[f"depth_{suffix}"] = self.depth_quantile(q)
            result[f"proportion_{suffix}"] = self.proportions.quantile(q)
        return result

    def merge(self, other: "MetricsSummary") -> "MetricsSummary":
        base = StepSummary.merge(self, other)
        depth_counts = dict(self.depth_counts)
        for depth, count in other.depth_counts.items():
            depth_counts[depth] = depth_counts.get(depth, 0) + count
        steps = dict(self.steps)
        for step, summary in other.steps.items():
            steps[step] = (
                steps[step].merge(summary) if step in steps else summary
            )
        return MetricsSummary(
            **base.model_dump(),
            zero_length_trajectories=(
                self.zero_length_trajectories + other.zero_length_trajectories
            ),
            depth_counts=dict(sorted(depth_counts.items())),
            proportions=self.proportions.merge(other.proportions),
            steps=dict(sorted(steps.items())),
        )
