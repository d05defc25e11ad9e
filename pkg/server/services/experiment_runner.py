"""
Experiment driver shared by the CLI and the API: training runs on disk,
board tests and leagues over snapshot files.

Output layout::

    <out>/test_boards.json
    <out>/<regime>/size-<n>/rep-<r>/agent-<id>.jsonl   snapshots
    <out>/<regime>/size-<n>/rep-<r>/games.jsonl        one GameRecord per line
    <out>/<regime>/size-<n>/rep-<r>/rounds.csv         per-round summaries
    <out>/<regime>/size-<n>/rep-<r>/pools.csv          Swiss pool history
    <out>/<regime>/size-<n>/rep-<r>/training.json      run metadata
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union
import json
import logging

import pandas as pd

from .evaluation import (
    BoardTestReport,
    LevelThresholds,
    TestBoard,
    WinMatrix,
    load_or_generate_fixture,
    run_board_test,
    run_league,
)
from .experiment_config import ExperimentConfig
from .game_controller import (
    GameRecord,
    Regime,
    StarterRule,
    TrainingResult,
    run_self_play,
    tally,
    train_population,
)
from .players import Player
from .reports import LeagueReport, league_report
from .seeding import derive_seed
from .td_learning import check_value_bound
from .snapshots import load_snapshot, load_snapshots, read_label, save_snapshot

logger = logging.getLogger(__name__)

SELFPLAY_PREFIX = Regime.SELF_PLAY.value


@dataclass
class RunRecord:
    regime: Regime
    size: int
    repetition: int
    run_seed: int
    directory: Path
    snapshots: List[Path] = field(default_factory=list)


def run_directory(root: Path, regime: Regime, size: int, repetition: int) -> Path:
    """Output directory of one training cell."""
    return Path(root) / regime.value / f"size-{size}" / f"rep-{repetition}"


def snapshot_label(regime: Regime, size: int, repetition: int, agent_id: int) -> str:
    return f"{regime.value}/size-{size}/rep-{repetition}/agent-{agent_id}"


def fixture_path(root: Path) -> Path:
    return Path(root) / "test_boards.json"


def _checkpoint_fn(boards: Sequence[TestBoard]):
    def score(agents: Sequence[Player]) -> Dict[int, int]:
        return {agent.id: run_board_test(agent, boards).total_correct for agent in agents}

    return score


def _write_records(records: Sequence[GameRecord], path: Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(record.model_dump_json() + "\n")


def _write_training(result: TrainingResult, record: RunRecord, extra: Optional[Dict] = None) -> None:
    directory = record.directory
    rounds = pd.DataFrame([r.model_dump() for r in result.rounds])
    rounds.to_csv(directory / "rounds.csv", index=False, lineterminator="\n")
    if result.pool_history:
        pools = pd.DataFrame(
            [{agent_id: pool.value for agent_id, pool in assignment.items()} for assignment in result.pool_history]
        )
        pools.index.name = "round"
        pools.to_csv(directory / "pools.csv", lineterminator="\n")
    _write_records(result.records, directory / "games.jsonl")

    decisive = int(rounds["decisive"].sum()) if len(rounds) else 0
    draws = int(rounds["draws"].sum()) if len(rounds) else 0
    bounded = [check_value_bound(agent.q) for agent in result.agents]
    meta = {
        "regime": record.regime.value,
        "size": record.size,
        "repetition": record.repetition,
        "run_seed": record.run_seed,
        "games": decisive + draws,
        "decisive": decisive,
        "draws": draws,
        "episodes": {str(a.id): a.episodes_trained for a in result.agents},
        "final_pools": (
            {str(k): v.value for k, v in result.pool_history[-1].items()} if result.pool_history else None
        ),
        "checkpoints": [c.model_dump() for c in result.checkpoints],
        "max_abs_q": {str(a.id): a.q.max_abs() for a in result.agents},
        "within_value_bound": all(bounded),
        "tally": {str(k): v for k, v in tally(result.records).items()},
        "snapshots": [p.name for p in record.snapshots],
    }
    meta.update(extra or {})
    (directory / "training.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_run(directory: Path, regime: Regime, size: int, repetition: int, run_seed: int) -> RunRecord:
    meta = json.loads((directory / "training.json").read_text(encoding="utf-8"))
    return RunRecord(
        regime=regime,
        size=size,
        repetition=repetition,
        run_seed=run_seed,
        directory=directory,
        snapshots=[directory / name for name in meta["snapshots"]],
    )


def train_selfplay_benchmark(
    config: ExperimentConfig, size: int, repetition: int, root: Path, boards: Sequence[TestBoard]
) -> RunRecord:
    """Train ``selfplay_candidates`` self-play agents and keep the best board-test scorer."""
    directory = run_directory(root, Regime.SELF_PLAY, size, repetition)
    run_seed = config.run_seed(Regime.SELF_PLAY, size, repetition)
    if (directory / "training.json").exists():
        logger.info(f"Reusing self-play benchmark in {directory}")
        return _load_run(directory, Regime.SELF_PLAY, size, repetition, run_seed)

    directory.mkdir(parents=True, exist_ok=True)
    pop = config.population_config(Regime.SELF_PLAY, size, repetition)
    checkpoint = _checkpoint_fn(boards) if config.checkpoint_every else None

    best: Optional[Tuple[int, int, TrainingResult]] = None
    candidate_scores = []
    for candidate in range(config.selfplay_candidates):
        result = run_self_play(pop, checkpoint_fn=checkpoint, candidate=candidate)
        score = run_board_test(result.agents[0], boards).total_correct
        candidate_scores.append(score)
        if best is None or score > best[0]:
            best = (score, candidate, result)
    score, candidate, result = best
    logger.info(f"Self-play size {size} rep {repetition}: kept candidate {candidate} ({score}/10)")

    record = RunRecord(Regime.SELF_PLAY, size, repetition, run_seed, directory)
    agent = result.agents[0]
    path = directory / f"agent-{agent.id}.jsonl"
    save_snapshot(agent, path, label=snapshot_label(Regime.SELF_PLAY, size, repetition, agent.id))
    record.snapshots.append(path)
    _write_training(result, record, {"candidate_scores": candidate_scores, "kept_candidate": candidate})
    return record


def train_social(
    config: ExperimentConfig,
    regime: Regime,
    size: int,
    repetition: int,
    root: Path,
    boards: Sequence[TestBoard],
) -> RunRecord:
    """Train one social cell, or reuse it when training.json already exists."""
    directory = run_directory(root, regime, size, repetition)
    run_seed = config.run_seed(regime, size, repetition)
    if (directory / "training.json").exists():
        logger.info(f"Reusing finished run in {directory}")
        return _load_run(directory, regime, size, repetition, run_seed)

    directory.mkdir(parents=True, exist_ok=True)
    pop = config.population_config(regime, size, repetition)
    checkpoint = _checkpoint_fn(boards) if config.checkpoint_every else None
    logger.info(f"Training {regime.value} size {size} rep {repetition} (seed {run_seed})")
    result = train_population(pop, checkpoint_fn=checkpoint)

    record = RunRecord(regime, size, repetition, run_seed, directory)
    for agent in result.agents:
        path = directory / f"agent-{agent.id}.jsonl"
        save_snapshot(agent, path, label=snapshot_label(regime, size, repetition, agent.id))
        record.snapshots.append(path)
    _write_training(result, record)
    return record


def train_experiment(config: ExperimentConfig, root: Path) -> List[RunRecord]:
    """Every (regime, size, repetition) cell, plus the self-play benchmark per cell."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    boards = load_or_generate_fixture(fixture_path(root))

    runs: List[RunRecord] = []
    benchmarks: Dict[Tuple[int, int], RunRecord] = {}
    for regime in config.regimes:
        for size in config.population_sizes:
            for repetition in range(config.repetitions):
                if regime is Regime.SELF_PLAY:
                    record = train_selfplay_benchmark(config, size, repetition, root, boards)
                    benchmarks[(size, repetition)] = record
                else:
                    record = train_social(config, regime, size, repetition, root, boards)
                    if config.selfplay_benchmark and (size, repetition) not in benchmarks:
                        benchmarks[(size, repetition)] = train_selfplay_benchmark(
                            config, size, repetition, root, boards
                        )
                runs.append(record)

    for record in benchmarks.values():
        if record not in runs:
            runs.append(record)
    logger.info(f"Training finished: {len(runs)} runs under {root}")
    return runs


def boardtest_snapshots(
    paths: Sequence[Union[str, Path]],
    boards: Sequence[TestBoard],
    thresholds: Optional[LevelThresholds] = None,
) -> List[BoardTestReport]:
    """Board-test each snapshot file under its header label."""
    reports = []
    for path in paths:
        player = load_snapshot(path)
        reports.append(run_board_test(player, boards, thresholds=thresholds, label=read_label(path)))
    return reports


def selfplay_index(labels: Sequence[str]) -> Optional[int]:
    """Index of the first self-play label, if any."""
    for index, label in enumerate(labels):
        if label.startswith(SELFPLAY_PREFIX):
            return index
    return None


def league_snapshots(
    paths: Sequence[Union[str, Path]],
    games_per_pair: int = 5000,
    starter_rule: StarterRule = StarterRule.ALTERNATE,
    master_seed: int = 0,
    workers: int = 1,
    size: int = 0,
    repetition: int = 0,
) -> Tuple[WinMatrix, LeagueReport]:
    """League over snapshot files, with its report."""
    if len(paths) < 2:
        raise ValueError("A league needs at least two snapshots")
    players = load_snapshots(paths)
    labels = [read_label(p) for p in paths]
    matrix = run_league(
        players,
        games_per_pair=games_per_pair,
        starter_rule=starter_rule,
        master_seed=master_seed,
        labels=labels,
        workers=workers,
    )
    return matrix, league_report(matrix, size=size, repetition=repetition, selfplay_index=selfplay_index(labels))


def best_agents(reports: Sequence[BoardTestReport], paths: Sequence[Path], count: int) -> List[Path]:
    """Top ``count`` snapshots by board score; ties keep agent order."""
    ranked = sorted(range(len(reports)), key=lambda i: (-reports[i].total_correct, i))
    return [paths[i] for i in sorted(ranked[:count])]


def league_seed(config: ExperimentConfig, size: int, repetition: int) -> int:
    """Seed of the league for one (size, repetition) cell."""
    return derive_seed(config.master_seed, "league", size, repetition)

