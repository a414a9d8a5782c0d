import argparse
from pathlib import Path

from core.config import core_settings
from entities.verification.models import GenParams
from shared.enums.generation import LogpMode, RewardDist
from shared.enums.objective import ExportFormat, ObjectiveKind
from shared.enums.rewards import StdMode

PROG = "prm-tree"


def _add_global_options(
    parser: argparse.ArgumentParser,
    *,
    with_defaults: bool,
) -> None:
    """Objective options, accepted before and after the subcommand.

    Only the top-level copy carries defaults; the subcommand copies leave
    a value given before the subcommand untouched.
    """

    def default(value: object) -> object:
        return value if with_defaults else argparse.SUPPRESS

    group = parser.add_argument_group("objective options")
    group.add_argument(
        "--std",
        dest="std_mode",
        choices=StdMode.choices(),
        default=default(core_settings.STD_MODE.value),
        help="Reward standard deviation estimator",
    )
    group.add_argument(
        "--beta",
        type=float,
        default=default(core_settings.BETA),
        help="KL penalty coefficient",
    )
    group.add_argument(
        "--eps",
        dest="epsilon",
        type=float,
        default=default(core_settings.EPSILON),
        help="Below this std all advantages are zero",
    )
    group.add_argument(
        "--tol",
        dest="tolerance",
        type=float,
        default=default(core_settings.TOLERANCE),
        help="Relative tolerance of the equivalence check",
    )
    group.add_argument(
        "--strict",
        action="store_true",
        default=default(core_settings.STRICT),
        help="Abort on the first malformed input line",
    )
    group.add_argument(
        "--with-ratio",
        dest="assume_unit_ratio",
        action="store_false",
        default=default(True),
        help="Compute importance ratios from logp and logp_old",
    )
    group.add_argument(
        "--log-level",
        default=default(core_settings.LOG_LEVEL),
        help="Log level for stderr output",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Process-set trees, step rewards and GRPO objectives",
    )
    _add_global_options(parser, with_defaults=True)
    parent = argparse.ArgumentParser(add_help=False)
    _add_global_options(parent, with_defaults=False)
    commands = parser.add_subparsers(dest="command", required=True)

    analyze = commands.add_parser(
        "analyze",
        parents=[parent],
        help="Per-group metrics CSV and an aggregate summary",
    )
    analyze.add_argument("input", type=Path, help="JSONL groups, - for stdin")
    analyze.add_argument("--output", type=Path, help="CSV path")
    analyze.add_argument("--summary", type=Path, help="Summary JSON path")

    tree = commands.add_parser(
        "tree",
        parents=[parent],
        help="Export the process tree of one group",
    )
    tree.add_argument("input", type=Path)
    tree.add_argument("--group-id", required=True)
    tree.add_argument(
        "--occurrence",
        type=int,
        default=0,
        help="Which group with this id to export",
    )
    tree.add_argument(
        "--format",
        choices=ExportFormat.choices(),
        default=ExportFormat.DOT.value,
    )
    tree.add_argument(
        "--label-tokens",
        type=int,
        default=core_settings.LABEL_TOKENS,
    )
    tree.add_argument("--output", type=Path)

    verify = commands.add_parser(
        "verify",
        parents=[parent],
        help="Check the GRPO/PRM equivalence and its identities",
    )
    source = verify.add_mutually_exclusive_group(required=True)
    source.add_argument("input", type=Path, nargs="?")
    source.add_argument("--random", type=int, metavar="N")
    defaults = GenParams()
    verify.add_argument("--seed", type=int, default=defaults.seed)
    verify.add_argument("--k-min", type=int, default=defaults.k_range[0])
    verify.add_argument("--k-max", type=int, default=defaults.k_range[1])
    verify.add_argument(
        "--length-min",
        type=int,
        default=defaults.length_range[0],
    )
    verify.add_argument(
        "--length-max",
        type=int,
        default=defaults.length_range[1],
    )
    verify.add_argument("--vocab", type=int, default=defaults.vocab_size)
    verify.add_argument(
        "--fork-bias",
        type=float,
        default=defaults.fork_bias,
    )
    verify.add_argument(
        "--reward-dist",
        choices=RewardDist.choices(),
        default=defaults.reward_dist.value,
    )
    verify.add_argument(
        "--logp-mode",
        choices=LogpMode.choices(),
        default=defaults.logp_mode.value,
    )
    verify.add_argument(
        "--degenerate-rate",
        type=float,
        default=defaults.degenerate_rate,
    )
    verify.add_argument(
        "--identity-tol",
        type=float,
        default=core_settings.IDENTITY_TOLERANCE,
    )
    verify.add_argument(
        "--no-degenerate",
        dest="include_degenerate",
        action="store_false",
        help="Skip the fixed edge-case groups",
    )
    verify.add_argument("--output", type=Path)

    weights = commands.add_parser(
        "weights",
        parents=[parent],
        help="Emit per-token advantages and lambda weights",
    )
    weights.add_argument("input", type=Path)
    weights.add_argument(
        "--objective",
        choices=[ObjectiveKind.GRPO.value, ObjectiveKind.LAMBDA.value],
        default=ObjectiveKind.GRPO.value,
    )
    weights.add_argument("--output", type=Path)

    simulate = commands.add_parser(
        "simulate",
        parents=[parent],
        help="Run the toy policy-gradient experiment",
    )
    simulate.add_argument(
        "--config",
        type=Path,
        help="KEY=VALUE file with SIM_* settings",
    )
    simulate.add_argument("--output", type=Path)

    report = commands.add_parser(
        "report",
        parents=[parent],
        help="Merge summaries written by analyze",
    )
    report.add_argument("summaries", type=Path, nargs="+")
    report.add_argument("--output", type=Path)
    return parser
