from collections.abc import Iterable

from entities.group.models import Group
from entities.metrics.models import GroupMetrics, MetricsSummary, StepSummary
from entities.tree.models import ProcessTree
from services.base import BaseService
from services.process_tree import ProcessTreeService
from shared.utils.numeric import grow_partials


class MetricsService(BaseService):
    def __init__(self, tree_service: ProcessTreeService) -> None:
        self.tree_service = tree_service

    def group_metrics(self, tree: ProcessTree, group: Group) -> GroupMetrics:
        depths, proportions, n_terms, zero_length = [], [], [], []
        for index, length in enumerate(group.lengths):
            path = tree.path(index)
            # root and terminal are not intermediate
            depths.append(len(path) - 2)
            n_term = path[-1].span_length
            n_terms.append(n_term)
            if length == 0:
                zero_length.append(index)
                proportions.append(0.0)
            else:
                proportions.append((length - n_term) / length)
        return GroupMetrics(
            query_id=group.query_id,
            step=group.step,
            path_depth=tuple(depths),
            intermediate_proportion=tuple(proportions),
            n_term=tuple(n_terms),
            trivial=self.tree_service.is_trivial(tree),
            zero_length=tuple(zero_length),
        )

    def summarize(self, metrics: GroupMetrics) -> MetricsSummary:
        """Summary of a single group; summaries merge associatively."""
        step = StepSummary(
            groups=1,
            trivial_groups=int(metrics.trivial),
            trajectories=metrics.k,
            depth_total=sum(metrics.path_depth),
            p_partials=grow_partials((), metrics.intermediate_proportion),
        )
        depth_counts: dict[int, int] = {}
        for depth in metrics.path_depth:
            depth_counts[depth] = depth_counts.get(depth, 0) + 1
        return MetricsSummary(
            **step.model_dump(),
            zero_length_trajectories=len(metrics.zero_length),
            depth_counts=dict(sorted(depth_counts.items())),
            proportions=MetricsSummary().proportions.add(
                metrics.intermediate_proportion,
            ),
            steps={} if metrics.step is None else {metrics.step: step},
        )

    def aggregate_metrics(
        self,
        stream: Iterable[GroupMetrics],
    ) -> MetricsSummary:
        summary = MetricsSummary()
        for metrics in stream:
            summary = summary.merge(self.summarize(metrics))
        return summary

    def merge_summaries(
        self,
        summaries: Iterable[MetricsSummary],
    ) -> MetricsSummary:
        merged = MetricsSummary()
        for summary in summaries:
            merged = merged.merge(summary)
        return merged
