import argparse
import sys
import uuid
from collections.abc import Callable, Sequence

import structlog
from cli.parser import build_parser
from core.config import core_settings
from core.logs import configure_logging, logger
from di.utils import create_container
from dto.analyze import AnalyzeDTO
from dto.base import BaseDTO, ObjectiveOptionsDTO
from dto.report import ReportDTO
from dto.simulate import SimulateDTO
from dto.tree import TreeDTO
from dto.verify import VerifyDTO
from dto.weights import WeightsDTO
from entities.verification.models import GenParams
from interactors.analyze import AnalyzeInteractor
from interactors.base import EXIT_FAILURE, BaseInteractor
from interactors.report import ReportInteractor
from interactors.simulate import SimulateInteractor
from interactors.tree import TreeInteractor
from interactors.verify import VerifyInteractor
from interactors.weights import WeightsInteractor
from pydantic import ValidationError
from shared.exceptions import PrmTreeError


def _options(args: argparse.Namespace) -> ObjectiveOptionsDTO:
    return ObjectiveOptionsDTO(
        std_mode=args.std_mode,
        beta=args.beta,
        epsilon=args.epsilon,
        tolerance=args.tolerance,
        strict=args.strict,
        assume_unit_ratio=args.assume_unit_ratio,
    )


def _analyze(args: argparse.Namespace) -> AnalyzeDTO:
    return AnalyzeDTO(
        options=_options(args),
        input=args.input,
        output=args.output,
        summary=args.summary,
    )


def _tree(args: argparse.Namespace) -> TreeDTO:
    return TreeDTO(
        options=_options(args),
        input=args.input,
        group_id=args.group_id,
        occurrence=args.occurrence,
        format=args.format,
        label_tokens=args.label_tokens,
        output=args.output,
    )


def _verify(args: argparse.Namespace) -> VerifyDTO:
    return VerifyDTO(
        options=_options(args),
        input=args.input,
        random=args.random,
        params=GenParams(
            seed=args.seed,
            k_range=(args.k_min, args.k_max),
            length_range=(args.length_min, args.length_max),
            vocab_size=args.vocab,
            fork_bias=args.fork_bias,
            reward_dist=args.reward_dist,
            logp_mode=args.logp_mode,
            degenerate_rate=args.degenerate_rate,
        ),
        identity_tolerance=args.identity_tol,
        include_degenerate=args.include_degenerate,
        output=args.output,
    )


def _weights(args: argparse.Namespace) -> WeightsDTO:
    return WeightsDTO(
        options=_options(args),
        input=args.input,
        objective=args.objective,
        output=args.output,
    )


def _simulate(args: argparse.Namespace) -> SimulateDTO:
    return SimulateDTO(config=args.config, output=args.output)


def _report(args: argparse.Namespace) -> ReportDTO:
    return ReportDTO(summaries=args.summaries, output=args.output)


COMMANDS: dict[
    str,
    tuple[
        type[BaseInteractor],
        Callable[[argparse.Namespace], BaseDTO],
    ],
] = {
    "analyze": (AnalyzeInteractor, _analyze),
    "tree": (TreeInteractor, _tree),
    "verify": (VerifyInteractor, _verify),
    "weights": (WeightsInteractor, _weights),
    "simulate": (SimulateInteractor, _simulate),
    "report": (ReportInteractor, _report),
}


def cli_dispatch(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand; 0 on success, 1 on failure, 2 on bad usage."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    configure_logging(args.log_level, json_output=core_settings.LOG_JSON)
    structlog.contextvars.clear_contextvars()
    structlog.contextvars.bind_contextvars(
        run_id=str(uuid.uuid4()),
        command=args.command,
    )
    logger.info(
        "Command received",
        argv=list(sys.argv[1:] if argv is None else argv),
    )

    interactor_type, make_dto = COMMANDS[args.command]
    container = create_container()
    try:
        dto = make_dto(args)
        with container() as request_container:
            interactor = request_container.get(interactor_type)
            status = interactor.execute(dto)
    except (PrmTreeError, ValidationError, OSError) as exc:
        logger.error("Command failed", error=str(exc))  # noqa: TRY400
        status = EXIT_FAILURE
    except Exception:
        logger.exception("Unhandled exception during command processing")
        raise
    finally:
        container.close()

    structlog.contextvars.bind_contextvars(status=status)
    logger.info("Command processed")
    return status
