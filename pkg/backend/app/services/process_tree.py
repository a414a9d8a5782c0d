import math
from collections.abc import Sequence

import numpy as np
from core.logs import logger
from entities.group.models import Group
from entities.tree.exceptions import PositionOutOfRangeError
from entities.tree.models import ProcessNode, ProcessTree, TokenAssignment
from services.base import BaseService

type Tokens = Sequence[int]


class ProcessTreeService(BaseService):
    """Builds the tree of maximal process sets of a group.

    A node groups the trajectories that share a token prefix; its span
    [s, e) is the part of that prefix not already covered by its parent.
    Children split the members by the token at position e, members whose
    sequence ends at e becoming singleton leaves with an empty span.
    """

    def build_process_tree(self, group: Group) -> ProcessTree:
        sequences = [trajectory.tokens for trajectory in group.trajectories]
        rewards = group.rewards.tolist()
        nodes: list[ProcessNode] = []
        terminals = [0] * group.k

        stack: list[tuple[list[int], int, int | None]] = [
            (list(range(group.k)), 0, None),
        ]
        while stack:
            members, start, parent_id = stack.pop()
            end = self._common_prefix_end(sequences, members, start)
            node = ProcessNode(
                id=len(nodes),
                members=frozenset(members),
                span_start=start,
                span_end=end,
                parent_id=parent_id,
                step_reward_cache=(
                    math.fsum(rewards[index] for index in members)
                    / len(members)
                ),
            )
            nodes.append(node)
            if parent_id is not None:
                nodes[parent_id].children.append(node)
            if len(members) == 1:
                terminals[members[0]] = node.id
                continue
            children = self._split(sequences, members, end)
            stack.extend(
                (child, end, node.id) for child in reversed(children)
            )

        tree = ProcessTree(
            root=nodes[0],
            nodes=nodes,
            lengths=tuple(group.lengths),
            terminals=tuple(terminals),
        )
        logger.debug(
            "Process tree built",
            query_id=group.query_id,
            k=group.k,
            nodes=len(nodes),
        )
        return tree

    @staticmethod
    def _common_prefix_end(
        sequences: list[Tokens],
        members: list[int],
        start: int,
    ) -> int:
        if len(members) == 1:
            return len(sequences[members[0]])
        first = sequences[members[0]]
        others = [sequences[index] for index in members[1:]]
        limit = min(len(sequences[index]) for index in members)
        end = start
        while end < limit and all(
            other[end] == first[end] for other in others
        ):
            end += 1
        return end

    @staticmethod
    def _split(
        sequences: list[Tokens],
        members: list[int],
        end: int,
    ) -> list[list[int]]:
        exhausted: list[list[int]] = []
        by_token: dict[int, list[int]] = {}
        for index in members:
            if len(sequences[index]) == end:
                exhausted.append([index])
            else:
                by_token.setdefault(sequences[index][end], []).append(index)
        return [*exhausted, *(by_token[token] for token in sorted(by_token))]

    def assign_tokens(self, tree: ProcessTree) -> TokenAssignment:
        owners = []
        for index, length in enumerate(tree.lengths):
            row = np.full(length, -1, dtype=np.int64)
            for node in tree.path(index):
                row[node.span_start : node.span_end] = node.id
            owners.append(row)
        return TokenAssignment(tree=tree, owners=tuple(owners))

    def partitions(self, tree: ProcessTree) -> list[list[ProcessNode]]:
        """X_t for every position t < max length."""
        result: list[list[ProcessNode]] = [
            [] for _ in range(tree.max_length)
        ]
        for node in tree.nodes:
            for t in range(node.span_start, node.span_end):
                result[t].append(node)
        return result

    def partition_at(self, tree: ProcessTree, t: int) -> list[ProcessNode]:
        if not 0 <= t < tree.max_length:
            raise PositionOutOfRangeError(t, tree.max_length)
        return [node for node in tree.nodes if node.covers(t)]

    def is_trivial(self, tree: ProcessTree) -> bool:
        """True when every token sits in a singleton set.

        Then A = a token-wise and every p_i is zero.
        """
        if tree.root.span_length:
            return False
        return all(node.is_root or node.is_terminal for node in tree.nodes)

    def reconstruct(
        self,
        tree: ProcessTree,
        group: Group,
        index: int,
    ) -> tuple[int, ...]:
        """Rebuild g_i from span tokens read off each node's first member."""
        tokens: list[int] = []
        for node in tree.path(index):
            source = group.trajectories[min(node.members)].tokens
            tokens.extend(source[node.span_start : node.span_end])
        return tuple(tokens)
