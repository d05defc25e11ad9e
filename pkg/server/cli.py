"""
Command line for the social-training experiments.

    python cli.py train --profile smoke --output-dir runs/smoke
    python cli.py boardtest runs/smoke/modified_swiss/size-4/rep-0/*.jsonl
    python cli.py league a.jsonl b.jsonl --games-per-pair 5000
    python cli.py reproduce --profile full
    python cli.py fixture

Exit codes: 0 success, 1 usage or config error, 2 runtime failure.
"""

from pathlib import Path
from typing import Optional, Sequence
import argparse
import json
import logging
import sys

from dotenv import load_dotenv
from pydantic import ValidationError

from services.evaluation import FixtureError, generate_test_boards, load_or_generate_fixture, save_fixture
from services.experiment_config import PROFILES, ExperimentConfig, load_config, profile_config
from services.experiment_runner import boardtest_snapshots, league_snapshots, train_experiment
from services.game_controller import StarterRule
from services.experiment_pipeline import reproduce
from services.reports import board_frame, render_summary, write_board_reports, write_league
from services.settings import Settings, get_settings
from services.snapshots import SnapshotFormatError

logger = logging.getLogger("socialttt.cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    """Bad arguments or config; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="socialttt", description="Social TD(lambda) training for Tic-Tac-Toe")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def experiment_flags(p: argparse.ArgumentParser, default_profile: Optional[str]) -> None:
        p.add_argument("--config", type=Path, help="JSON experiment config")
        p.add_argument("--profile", choices=sorted(PROFILES), default=default_profile)
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--output-dir", type=Path)

    train = sub.add_parser("train", help="train populations and write snapshots")
    experiment_flags(train, None)

    reproduce_cmd = sub.add_parser("reproduce", help="train, board-test, league and report")
    experiment_flags(reproduce_cmd, "full")

    boardtest = sub.add_parser("boardtest", help="score snapshots on the test boards")
    boardtest.add_argument("snapshots", nargs="*", type=Path)
    boardtest.add_argument("--fixture", type=Path)
    boardtest.add_argument("--output-dir", type=Path)
    boardtest.add_argument("--json", action="store_true", help="print JSON instead of a table")

    league = sub.add_parser("league", help="frozen-policy league between snapshots")
    league.add_argument("snapshots", nargs="*", type=Path)
    league.add_argument("--games-per-pair", type=int, default=5000)
    league.add_argument("--starter-rule", choices=[r.value for r in StarterRule], default=StarterRule.ALTERNATE.value)
    league.add_argument("--seed", type=int, default=0)
    league.add_argument("--workers", type=int)
    league.add_argument("--output-dir", type=Path)

    fixture = sub.add_parser("fixture", help="generate the test-board fixture")
    fixture.add_argument("--output", type=Path)
    return parser


def resolve_output_dir(flag: Optional[Path], config_dir: Optional[Path], settings: Settings) -> Path:
    """Flag, then SOCIALTTT_OUTPUT_DIR, then the config file, then the default."""
    if flag is not None:
        return flag
    if "output_dir" in settings.model_fields_set:
        return settings.output_dir
    return config_dir or settings.output_dir


def experiment_config(args: argparse.Namespace, settings: Settings) -> ExperimentConfig:
    """Config from --config or --profile, with --seed applied."""
    overrides = {"master_seed": args.seed}
    if "workers" in settings.model_fields_set:
        overrides["workers"] = settings.workers
    try:
        if args.config is not None:
            return load_config(args.config, **overrides)
        if args.profile is not None:
            return profile_config(args.profile, **overrides)
        return ExperimentConfig.model_validate({k: v for k, v in overrides.items() if v is not None})
    except (ValidationError, ValueError, OSError) as e:
        raise UsageError(str(e)) from e


def cmd_train(args: argparse.Namespace, settings: Settings) -> int:
    config = experiment_config(args, settings)
    root = resolve_output_dir(args.output_dir, config.output_dir, settings)
    runs = train_experiment(config, root)
    for run in runs:
        print(f"{run.regime.value:15s} size {run.size:2d} rep {run.repetition}: {len(run.snapshots)} snapshots in {run.directory}")
    return EXIT_OK


def cmd_boardtest(args: argparse.Namespace, settings: Settings) -> int:
    boards = load_or_generate_fixture(args.fixture or settings.resolved_fixture_path)
    reports = boardtest_snapshots(args.snapshots, boards)
    if args.output_dir is not None:
        write_board_reports(reports, args.output_dir)
    if args.json:
        print(json.dumps([r.model_dump(mode="json") for r in reports], indent=2))
    else:
        print(board_frame(reports).to_string(index=False))
    if not reports:
        logger.error("No snapshots given; empty board-test report")
        return EXIT_USAGE
    return EXIT_OK


def cmd_league(args: argparse.Namespace, settings: Settings) -> int:
    if len(args.snapshots) < 2:
        raise UsageError("league needs at least two snapshots")
    rule = StarterRule(args.starter_rule)
    if rule is StarterRule.ALTERNATE and args.games_per_pair % 2:
        raise UsageError("--games-per-pair must be even with alternating starters")
    if args.games_per_pair < 1:
        raise UsageError("--games-per-pair must be positive")
    matrix, report = league_snapshots(
        args.snapshots,
        games_per_pair=args.games_per_pair,
        starter_rule=rule,
        master_seed=args.seed,
        workers=args.workers or settings.workers,
    )
    if args.output_dir is not None:
        write_league(matrix, args.output_dir)
        (Path(args.output_dir) / "league.json").write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    print("Wins (row beat column)")
    print(matrix.wins_frame().to_string())
    print("\nDraws")
    print(matrix.draws_frame().to_string())
    print(f"\nstarter win rate {report.starter_advantage:.3f}  decisive starter rate {report.decisive_starter_rate:.3f}")
    if report.selfplay_differential is not None:
        print(f"social - self-play wins per pairing: {report.selfplay_differential:+.1f}")
    return EXIT_OK


def cmd_reproduce(args: argparse.Namespace, settings: Settings) -> int:
    config = experiment_config(args, settings)
    root = resolve_output_dir(args.output_dir, config.output_dir, settings)
    report = reproduce(config, root)
    print(render_summary(report))
    return EXIT_OK


def cmd_fixture(args: argparse.Namespace, settings: Settings) -> int:
    path = args.output or settings.resolved_fixture_path
    boards = generate_test_boards()
    save_fixture(boards, path)
    for index, board in enumerate(boards):
        print(f"{index}: {board.board} {board.difficulty.value:12s} -> {board.correct_actions[0]}  {board.description}")
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "boardtest": cmd_boardtest,
    "league": cmd_league,
    "reproduce": cmd_reproduce,
    "fixture": cmd_fixture,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, dispatch, and return the exit code."""
    load_dotenv()
    args = build_parser().parse_args(argv)
    try:
        settings = get_settings()
    except ValidationError as e:
        print(f"Invalid SOCIALTTT_ settings: {e}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=getattr(logging, settings.log_level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        return COMMANDS[args.command](args, settings)
    except UsageError as e:
        logger.error(str(e))
        return EXIT_USAGE
    except (OSError, SnapshotFormatError, FixtureError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_RUNTIME
    except Exception as e:
        logger.exception(f"{args.command} failed: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
