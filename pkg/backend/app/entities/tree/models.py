from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray


@dataclass(slots=True, eq=False)
class ProcessNode:
    id: int
    members: frozenset[int]
    span_start: int
    span_end: int
    parent_id: int | None = None
    children: list[ProcessNode] = field(default_factory=list)
    step_reward_cache: float | None = None

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def span_length(self) -> int:
        return self.span_end - self.span_start

    @property
    def is_root(self) -> bool:
        return self.parent_id is None

    @property
    def is_terminal(self) -> bool:
        return len(self.members) == 1

    def covers(self, t: int) -> bool:
        return self.span_start <= t < self.span_end


@dataclass(slots=True, eq=False)
class ProcessTree:
    root: ProcessNode
    nodes: list[ProcessNode]
    lengths: tuple[int, ...]
    terminals: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.lengths)

    @property
    def max_length(self) -> int:
        return max(self.lengths, default=0)

    @property
    def edge_count(self) -> int:
        return sum(len(node.children) for node in self.nodes)

    def node(self, node_id: int) -> ProcessNode:
        return self.nodes[node_id]

    def terminal(self, index: int) -> ProcessNode:
        return self.nodes[self.terminals[index]]

    def path(self, index: int) -> list[ProcessNode]:
        """Nodes from the root down to the terminal node of `index`."""
        path = [self.terminal(index)]
        while path[-1].parent_id is not None:
            path.append(self.nodes[path[-1].parent_id])
        path.reverse()
        return path

    def member_sets(self) -> set[frozenset[int]]:
        return {node.members for node in self.nodes}


@dataclass(slots=True, frozen=True, eq=False)
class TokenAssignment:
    tree: ProcessTree
    owners: tuple[NDArray[np.int64], ...]

    def owner(self, index: int, t: int) -> ProcessNode:
        return self.tree.nodes[int(self.owners[index][t])]

    def sizes(self) -> tuple[NDArray[np.float64], ...]:
        """|λ^(i,t)| for every token."""
        size_of = np.asarray(
            [node.size for node in self.tree.nodes],
            dtype=np.float64,
        )
        return tuple(size_of[row] for row in self.owners)
