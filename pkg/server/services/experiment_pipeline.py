"""
End-to-end reproduction pipeline implemented with LangGraph.

The graph runs:
- prepare_fixture -> train -> board_test -> league -> report

Training runs and leagues are cached on disk per cell, so an interrupted
pipeline resumes where it stopped. Wall-clock timings go to timing.json,
never into report.json, so reports are byte-identical across reruns.
"""

from pathlib import Path
from typing import Dict, List, Tuple, TypedDict
import json
import logging
import time

from langgraph.graph import END, StateGraph

from .evaluation import TestBoard, load_or_generate_fixture
from .experiment_config import ExperimentConfig
from .experiment_runner import (
    RunRecord,
    best_agents,
    boardtest_snapshots,
    fixture_path,
    league_seed,
    league_snapshots,
    train_experiment,
)
from .game_controller import Regime, StarterRule
from .reports import (
    CellReport,
    ComparisonRow,
    LeagueReport,
    RunReport,
    summarize_cell,
    write_board_reports,
    write_league,
    write_run_report,
)

logger = logging.getLogger(__name__)


class PipelineState(TypedDict, total=False):
    config: ExperimentConfig
    root: Path
    boards: List[TestBoard]
    runs: List[RunRecord]
    cells: List[CellReport]
    leagues: List[LeagueReport]
    report: RunReport
    report_paths: Dict[str, Path]
    timings: Dict[str, float]


def _timed(name: str, state: PipelineState, started: float) -> Dict[str, float]:
    timings = dict(state.get("timings", {}))
    timings[name] = round(time.perf_counter() - started, 3)
    return timings


class ExperimentPipeline:
    """Train every regime, board-test everything, league the best Swiss
    agents against the self-play benchmark, and write the comparison."""

    def __init__(self):
        graph = StateGraph(PipelineState)

        graph.add_node("prepare_fixture", self._node_prepare)
        graph.add_node("train", self._node_train)
        graph.add_node("board_test", self._node_board_test)
        graph.add_node("league", self._node_league)
        graph.add_node("report", self._node_report)

        graph.set_entry_point("prepare_fixture")
        graph.add_edge("prepare_fixture", "train")
        graph.add_edge("train", "board_test")
        graph.add_edge("board_test", "league")
        graph.add_edge("league", "report")
        graph.add_edge("report", END)

        self._compiled = graph.compile()

    def run(self, config: ExperimentConfig, root: Path) -> PipelineState:
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        state = self._compiled.invoke({"config": config, "root": root, "timings": {}})
        (root / "timing.json").write_text(json.dumps(state["timings"], indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return state

    # Graph nodes
    def _node_prepare(self, state: PipelineState) -> PipelineState:
        started = time.perf_counter()
        boards = load_or_generate_fixture(fixture_path(state["root"]))
        return {**state, "boards": boards, "timings": _timed("prepare_fixture", state, started)}

    def _node_train(self, state: PipelineState) -> PipelineState:
        started = time.perf_counter()
        runs = train_experiment(state["config"], state["root"])
        return {**state, "runs": runs, "timings": _timed("train", state, started)}

    def _node_board_test(self, state: PipelineState) -> PipelineState:
        started = time.perf_counter()
        config = state["config"]
        boards = state["boards"]

        scored: Dict[Tuple[str, int, int], Tuple[RunRecord, list]] = {}
        for run in state["runs"]:
            reports = boardtest_snapshots(run.snapshots, boards, thresholds=config.level_thresholds)
            write_board_reports(reports, run.directory)
            scored[(run.regime.value, run.size, run.repetition)] = (run, reports)

        cells = []
        for regime in config.regimes:
            for size in config.population_sizes:
                for repetition in range(config.repetitions):
                    run, reports = scored[(regime.value, size, repetition)]
                    benchmark = scored.get((Regime.SELF_PLAY.value, size, repetition))
                    meta = json.loads((run.directory / "training.json").read_text(encoding="utf-8"))
                    cells.append(
                        summarize_cell(
                            regime.value,
                            size,
                            repetition,
                            run.run_seed,
                            reports,
                            selfplay_score=benchmark[1][0].total_correct if benchmark else None,
                            games=meta["games"],
                            decisive=meta["decisive"],
                            draws=meta["draws"],
                            checkpoints=meta.get("checkpoints", []),
                        )
                    )
        return {**state, "cells": cells, "timings": _timed("board_test", state, started)}

    def _node_league(self, state: PipelineState) -> PipelineState:
        started = time.perf_counter()
        config = state["config"]
        root = state["root"]
        if Regime.MODIFIED_SWISS not in config.regimes:
            return {**state, "leagues": [], "timings": _timed("league", state, started)}

        by_key = {(r.regime, r.size, r.repetition): r for r in state["runs"]}
        cells = {(c.regime, c.size, c.repetition): c for c in state["cells"]}
        leagues = []
        for size in config.population_sizes:
            for repetition in range(config.repetitions):
                swiss = by_key.get((Regime.MODIFIED_SWISS, size, repetition))
                benchmark = by_key.get((Regime.SELF_PLAY, size, repetition))
                if swiss is None or benchmark is None:
                    continue
                directory = root / "leagues" / f"size-{size}" / f"rep-{repetition}"
                cached = directory / "league.json"
                if cached.exists():
                    leagues.append(LeagueReport.model_validate_json(cached.read_text(encoding="utf-8")))
                    continue

                reports = cells[(Regime.MODIFIED_SWISS.value, size, repetition)].board_reports
                social = best_agents(reports, swiss.snapshots, config.league_social_agents)
                matrix, report = league_snapshots(
                    benchmark.snapshots + social,
                    games_per_pair=config.league_games_per_pair,
                    starter_rule=StarterRule.ALTERNATE,
                    master_seed=league_seed(config, size, repetition),
                    workers=config.workers,
                    size=size,
                    repetition=repetition,
                )
                write_league(matrix, directory)
                cached.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
                leagues.append(report)
        return {**state, "leagues": leagues, "timings": _timed("league", state, started)}

    def _node_report(self, state: PipelineState) -> PipelineState:
        started = time.perf_counter()
        config = state["config"]
        comparison = [
            ComparisonRow(
                regime=cell.regime,
                size=cell.size,
                repetition=cell.repetition,
                best_social_score=cell.best_score,
                selfplay_score=cell.selfplay_score,
                strictly_better=cell.best_score > cell.selfplay_score,
            )
            for cell in state["cells"]
            if cell.regime != Regime.SELF_PLAY.value and cell.selfplay_score is not None
        ]
        report = RunReport(
            config=config.model_dump(mode="json", by_alias=True, exclude={"output_dir"}),
            cells=state["cells"],
            leagues=state["leagues"],
            comparison=comparison,
        )
        paths = write_run_report(report, state["root"] / "report")
        return {**state, "report": report, "report_paths": paths, "timings": _timed("report", state, started)}


def reproduce(config: ExperimentConfig, root: Path) -> RunReport:
    """Run the whole pipeline and return the run report."""
    return ExperimentPipeline().run(config, root)["report"]
