from entities.group.models import Group
from entities.tree.exceptions import TreeDocumentError
from entities.tree.models import ProcessNode, ProcessTree
from entities.tree.schemas import TreeDocumentSchema, TreeNodeSchema
from pydantic import ValidationError
from services.base import BaseService
from shared.enums.objective import ExportFormat

ROOT_FILL = "#F8CECC"
TERMINAL_FILL = "#FFF2CC"
NODE_FILL = "#FFFFFF"


class TreeExportService(BaseService):
    def export_tree(
        self,
        tree: ProcessTree,
        group: Group,
        fmt: ExportFormat,
        label_tokens: int = 8,
    ) -> str:
        match fmt:
            case ExportFormat.DOT:
                return self._to_dot(tree, group, label_tokens)
            case ExportFormat.JSON:
                document = self.to_document(tree, group, label_tokens)
                return document.model_dump_json(indent=2)

    def to_document(
        self,
        tree: ProcessTree,
        group: Group,
        label_tokens: int = 8,
    ) -> TreeDocumentSchema:
        def convert(node: ProcessNode) -> TreeNodeSchema:
            return TreeNodeSchema(
                id=node.id,
                members=sorted(node.members),
                span=(node.span_start, node.span_end),
                terminal=node.is_terminal,
                label=self.node_label(node, group, label_tokens),
                step_reward=node.step_reward_cache,
                children=[convert(child) for child in node.children],
            )

        return TreeDocumentSchema(
            query_id=group.query_id,
            k=tree.k,
            lengths=list(tree.lengths),
            root=convert(tree.root),
        )

    @staticmethod
    def node_label(
        node: ProcessNode,
        group: Group,
        label_tokens: int,
    ) -> str:
        members = ",".join(str(index) for index in sorted(node.members))
        source = group.trajectories[min(node.members)].tokens
        span = source[node.span_start : node.span_end]
        rendered = " ".join(str(token) for token in span[:label_tokens])
        if len(span) > label_tokens:
            rendered += " ..."
        lines = [
            f"{{{members}}} [{node.span_start},{node.span_end})",
            rendered or "-",
        ]
        if node.step_reward_cache is not None:
            lines.append(f"R={node.step_reward_cache:.4f}")
        return "\n".join(lines)

    def _to_dot(
        self,
        tree: ProcessTree,
        group: Group,
        label_tokens: int,
    ) -> str:
        lines = [
            f'digraph "{_escape(group.query_id)}" {{',
            "\tnode [shape=box, style=filled, fontname=monospace];",
        ]
        for node in tree.nodes:
            if node.is_root:
                fill, extra = ROOT_FILL, ", penwidth=2"
            elif node.is_terminal:
                fill, extra = TERMINAL_FILL, ", shape=ellipse"
            else:
                fill, extra = NODE_FILL, ""
            label = _escape(self.node_label(node, group, label_tokens))
            lines.append(
                f'\t"{node.id}" [label="{label}", fillcolor="{fill}"{extra}];',
            )
        lines.extend(
            f'\t"{node.id}" -> "{child.id}";'
            for node in tree.nodes
            for child in node.children
        )
        lines.append("}")
        return "\n".join(lines) + "\n"

    def load_tree_json(self, document: str | bytes) -> ProcessTree:
        try:
            schema = TreeDocumentSchema.model_validate_json(document)
        except ValidationError as exc:
            raise TreeDocumentError(f"invalid tree document: {exc}") from exc
        return self.from_document(schema)

    def from_document(self, schema: TreeDocumentSchema) -> ProcessTree:
        if schema.k != len(schema.lengths):
            raise TreeDocumentError("k does not match the number of lengths")
        if schema.root.members != list(range(schema.k)):
            raise TreeDocumentError("root must contain every member")
        if schema.root.span[0] != 0:
            raise TreeDocumentError("root span must start at 0")

        nodes: list[ProcessNode] = []
        terminals: dict[int, int] = {}
        stack: list[tuple[TreeNodeSchema, ProcessNode | None]] = [
            (schema.root, None),
        ]
        while stack:
            item, parent = stack.pop()
            node = self._node_from_schema(item, parent, len(nodes))
            nodes.append(node)
            if parent is not None:
                parent.children.append(node)
            if node.is_terminal:
                (member,) = node.members
                if item.children or member in terminals:
                    raise TreeDocumentError(
                        f"singleton {member} must be a unique leaf",
                    )
                if node.span_end != schema.lengths[member]:
                    raise TreeDocumentError(
                        f"leaf of {member} must end at its length",
                    )
                terminals[member] = node.id
                continue
            self._check_children(item)
            stack.extend((child, node) for child in reversed(item.children))

        if sorted(terminals) != list(range(schema.k)):
            raise TreeDocumentError("every member needs a singleton leaf")
        return ProcessTree(
            root=nodes[0],
            nodes=nodes,
            lengths=tuple(schema.lengths),
            terminals=tuple(terminals[index] for index in range(schema.k)),
        )

    @staticmethod
    def _node_from_schema(
        item: TreeNodeSchema,
        parent: ProcessNode | None,
        node_id: int,
    ) -> ProcessNode:
        start, end = item.span
        if item.id != node_id:
            raise TreeDocumentError(
                f"node ids must follow preorder, got {item.id} at {node_id}",
            )
        if start > end:
            raise TreeDocumentError(f"node {item.id} has span ({start},{end})")
        if parent is not None and start != parent.span_end:
            raise TreeDocumentError(
                f"node {item.id} must start where its parent ends",
            )
        if not item.members:
            raise TreeDocumentError(f"node {item.id} has no members")
        return ProcessNode(
            id=node_id,
            members=frozenset(item.members),
            span_start=start,
            span_end=end,
            parent_id=None if parent is None else parent.id,
            step_reward_cache=item.step_reward,
        )

    @staticmethod
    def _check_children(item: TreeNodeSchema) -> None:
        members = [
            member for child in item.children for member in child.members
        ]
        if sorted(members) != sorted(item.members):
            raise TreeDocumentError(
                f"children of node {item.id} must partition its members",
            )


def _escape(text: str) -> str:
    return (
        text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    )
