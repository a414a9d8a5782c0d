from core.logs import logger
from dishka import FromDishka
from dto.tree import TreeDTO
from entities.group.exceptions import GroupNotFoundError
from interactors.base import EXIT_OK, BaseInteractor
from services.group_io import GroupIOService
from services.process_tree import ProcessTreeService
from services.tree_export import TreeExportService
from shared.utils.files import open_input, open_output


class TreeInteractor(BaseInteractor[TreeDTO]):
    def __init__(
        self,
        group_io: FromDishka[GroupIOService],
        tree_service: FromDishka[ProcessTreeService],
        export_service: FromDishka[TreeExportService],
    ):
        self.group_io = group_io
        self.tree_service = tree_service
        self.export_service = export_service

    def execute(self, dto: TreeDTO) -> int:
        with open_input(dto.input) as source:
            reader = self.group_io.parse_groups(
                source,
                strict=dto.options.strict,
            )
            group = self.group_io.find_group(
                reader,
                dto.group_id,
                dto.occurrence,
            )
        if group is None:
            raise GroupNotFoundError(dto.group_id, dto.occurrence)

        tree = self.tree_service.build_process_tree(group)
        document = self.export_service.export_tree(
            tree,
            group,
            dto.format,
            dto.label_tokens,
        )
        with open_output(dto.output) as out:
            out.write(document.rstrip("\n") + "\n")
        logger.info(
            "Tree exported",
            query_id=group.query_id,
            nodes=len(tree.nodes),
            edges=tree.edge_count,
            format=str(dto.format),
        )
        return EXIT_OK
