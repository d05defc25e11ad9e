import itertools
import json
import shutil
from pathlib import Path

import pytest
from pydantic import ValidationError

from services.experiment_config import PROFILES, ExperimentConfig, load_config, profile_config
from services.experiment_runner import (
    best_agents,
    boardtest_snapshots,
    league_snapshots,
    selfplay_index,
    train_experiment,
)
from services.evaluation import SkillLevel, generate_test_boards
from services.game_controller import Regime, make_population
from services.experiment_pipeline import ExperimentPipeline, reproduce
from services.players import OraclePlayer
from services.reports import RunReport, render_summary
from services.seeding import derive_seed
from services.snapshots import load_snapshot, save_snapshot

ALL_REGIMES = ["self_play", "round_robin", "modified_swiss"]


def tiny_config(**overrides):
    data = {
        "name": "tiny",
        "regimes": ALL_REGIMES,
        "population_sizes": [4],
        "episodes_per_agent": 30,
        "repetitions": 1,
        "master_seed": 7,
        "league_games_per_pair": 20,
    }
    data.update(overrides)
    return ExperimentConfig.model_validate(data)


def tree(root):
    return {
        path.relative_to(root).as_posix(): path.read_bytes()
        for path in sorted(root.rglob("*"))
        if path.is_file() and path.name != "timing.json"
    }


# --- configuration ---

def test_single_regime_key_is_accepted():
    config = ExperimentConfig.model_validate({"regime": "round_robin", "population_sizes": [3]})
    assert config.regimes == [Regime.ROUND_ROBIN]


def test_invalid_configs_rejected():
    with pytest.raises(ValidationError):
        ExperimentConfig(regimes=[Regime.MODIFIED_SWISS], population_sizes=[5])
    with pytest.raises(ValidationError):
        ExperimentConfig(repetitions=0)
    with pytest.raises(ValidationError):
        ExperimentConfig(population_sizes=[])
    with pytest.raises(ValidationError):
        ExperimentConfig(league_games_per_pair=41)
    with pytest.raises(ValueError):
        profile_config("huge")


def test_full_profile_shape():
    config = profile_config("full")
    assert config.regimes == [Regime.SELF_PLAY, Regime.ROUND_ROBIN, Regime.MODIFIED_SWISS]
    assert config.population_sizes == [4, 6, 8]
    assert config.repetitions == 5
    assert config.episodes_per_agent == 50000
    cells = list(itertools.product(config.regimes, config.population_sizes, range(config.repetitions)))
    assert len(cells) == 45
    seeds = {config.run_seed(*cell) for cell in cells}
    assert len(seeds) == 45


def test_profile_overrides():
    config = profile_config("smoke", master_seed=99, workers=None)
    assert config.master_seed == 99
    assert config.population_sizes == PROFILES["smoke"]["population_sizes"]


def test_config_file_round_trip(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(tiny_config().model_dump_json(by_alias=True))
    loaded = load_config(path, master_seed=11)
    assert loaded.master_seed == 11
    assert loaded.identity_ranges == tiny_config().identity_ranges


def test_committed_configs_parse():
    root = Path(__file__).resolve().parent.parent / "configs"
    protocol = load_config(root / "full_protocol.json")
    smoke = load_config(root / "smoke.json")
    assert protocol.population_sizes == [4, 6, 8] and protocol.repetitions == 5
    assert smoke.episodes_per_agent == 10000 and smoke.repetitions == 2


def test_child_seeds_do_not_collide():
    config = profile_config("full")
    agent_seeds = set()
    for regime, size, rep in itertools.product(config.regimes, [4, 6, 8, 16, 32], range(5)):
        pop = config.population_config(regime, size, rep)
        if regime is Regime.SELF_PLAY:
            continue
        agent_seeds.update(a.identity.seed for a in make_population(pop))
    assert len(agent_seeds) == 2 * 5 * (4 + 6 + 8 + 16 + 32)
    assert derive_seed(1, "a", 2) != derive_seed(1, "a2")


# --- driver ---

def test_train_writes_snapshots_and_benchmark(tmp_path):
    config = tiny_config(regimes=["modified_swiss"])
    runs = train_experiment(config, tmp_path)
    regimes = sorted(r.regime.value for r in runs)
    assert regimes == ["modified_swiss", "self_play"]
    swiss = next(r for r in runs if r.regime is Regime.MODIFIED_SWISS)
    assert len(swiss.snapshots) == 4
    meta = json.loads((swiss.directory / "training.json").read_text())
    assert meta["games"] == 30 * 2
    assert set(meta["episodes"].values()) == {30}
    assert (swiss.directory / "pools.csv").exists()
    assert len((swiss.directory / "games.jsonl").read_text().splitlines()) == 60
    assert meta["within_value_bound"] is True
    assert set(meta["max_abs_q"]) == {"0", "1", "2", "3"}
    for path in swiss.snapshots:
        agent = load_snapshot(path)
        assert meta["max_abs_q"][str(agent.id)] == agent.q.max_abs()
        assert 0.0 < agent.q.max_abs() <= 2.0
    assert all(sum(counts.values()) == 30 for counts in meta["tally"].values())
    assert sum(counts["wins"] for counts in meta["tally"].values()) == meta["decisive"]
    assert (tmp_path / "test_boards.json").exists()


def test_train_is_byte_identical(tmp_path):
    config = tiny_config(regimes=["round_robin"])
    train_experiment(config, tmp_path / "a")
    train_experiment(config, tmp_path / "b")
    assert tree(tmp_path / "a") == tree(tmp_path / "b")


def test_selfplay_candidates_keep_best(tmp_path):
    config = tiny_config(regimes=["self_play"], selfplay_candidates=3)
    (run,) = train_experiment(config, tmp_path)
    meta = json.loads((run.directory / "training.json").read_text())
    assert len(meta["candidate_scores"]) == 3
    assert meta["candidate_scores"][meta["kept_candidate"]] == max(meta["candidate_scores"])
    assert len(run.snapshots) == 1


def test_boardtest_and_league_over_snapshots(tmp_path):
    boards = generate_test_boards()
    oracle_a = save_snapshot(OraclePlayer(id=0), tmp_path / "oracle-a.jsonl", label="oracle-a")
    oracle_b = save_snapshot(OraclePlayer(id=0, seed=5), tmp_path / "oracle-b.jsonl", label="oracle-b")
    reports = boardtest_snapshots([oracle_a, oracle_b], boards)
    assert [r.total_correct for r in reports] == [10, 10]
    assert reports[0].level is SkillLevel.ADVANCED
    assert boardtest_snapshots([], boards) == []

    matrix, report = league_snapshots([oracle_a, oracle_b], games_per_pair=50)
    assert matrix.wins.sum() == 0 and report.draws[0][1] == 50
    assert report.labels == ["oracle-a", "oracle-b"]
    assert report.selfplay_differential is None
    with pytest.raises(ValueError):
        league_snapshots([oracle_a], games_per_pair=50)


def test_helpers():
    assert selfplay_index(["modified_swiss/size-4/rep-0/agent-1", "self_play/size-4/rep-0/agent-0"]) == 1
    assert selfplay_index(["a", "b"]) is None


def test_best_agents_ties_keep_order(tmp_path):
    boards = generate_test_boards()
    paths = [save_snapshot(OraclePlayer(id=i), tmp_path / f"o{i}.jsonl") for i in range(3)]
    reports = boardtest_snapshots(paths, boards)
    assert best_agents(reports, paths, 2) == paths[:2]


# --- end to end ---

@pytest.fixture(scope="module")
def reproduced(tmp_path_factory):
    root = tmp_path_factory.mktemp("reproduce")
    config = tiny_config()
    report = reproduce(config, root / "first")
    return config, root, report


def test_report_sections(reproduced):
    config, root, report = reproduced
    assert [c.regime for c in report.cells] == ALL_REGIMES
    assert len(report.comparison) == 2
    selfplay = next(c for c in report.cells if c.regime == "self_play")
    for row in report.comparison:
        assert row.selfplay_score == selfplay.best_score
        assert row.strictly_better == (row.best_social_score > row.selfplay_score)
    (league,) = report.leagues
    assert len(league.labels) == 1 + config.league_social_agents
    assert league.labels[0].startswith("self_play/")
    assert league.selfplay_differential is not None
    for cell in report.cells:
        assert cell.games > 0 and cell.decisive + cell.draws == cell.games

    first = root / "first"
    assert (first / "report" / "report.json").exists()
    assert "Social vs self-play" in (first / "report" / "summary.txt").read_text()
    timing = json.loads((first / "timing.json").read_text())
    assert set(timing) == {"prepare_fixture", "train", "board_test", "league", "report"}
    assert RunReport.model_validate_json((first / "report" / "report.json").read_text()) == report


def test_reproduce_is_byte_identical(reproduced):
    config, root, _ = reproduced
    reproduce(config, root / "second")
    assert tree(root / "first") == tree(root / "second")


def test_reproduce_resumes_from_stage_files(reproduced, tmp_path):
    config, root, report = reproduced
    resumed = tmp_path / "resumed"
    shutil.copytree(root / "first", resumed)
    shutil.rmtree(resumed / "report")
    shutil.rmtree(resumed / "leagues")
    state = ExperimentPipeline().run(config, resumed)
    assert state["report"] == report
    assert (resumed / "report" / "report.json").read_bytes() == (root / "first" / "report" / "report.json").read_bytes()


def test_summary_renders_every_cell(reproduced):
    _, _, report = reproduced
    text = render_summary(report)
    for regime in ALL_REGIMES:
        assert regime in text
    assert "League play" in text
