import json

import pytest

import cli
from services.players import OraclePlayer
from services.settings import get_settings
from services.snapshots import save_snapshot


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    for name in ("SOCIALTTT_OUTPUT_DIR", "SOCIALTTT_FIXTURE_PATH", "SOCIALTTT_WORKERS"):
        monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def oracle_snapshots(tmp_path):
    return [
        str(save_snapshot(OraclePlayer(id=0, seed=s), tmp_path / f"oracle-{s}.jsonl", label=f"oracle-{s}"))
        for s in (1, 2)
    ]


def write_config(tmp_path, **overrides):
    data = {
        "name": "cli",
        "regimes": ["self_play", "modified_swiss"],
        "population_sizes": [2],
        "episodes_per_agent": 20,
        "repetitions": 1,
        "master_seed": 3,
        "league_games_per_pair": 10,
        "league_social_agents": 2,
    }
    data.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return path


def test_fixture_command(tmp_path, capsys):
    target = tmp_path / "boards.json"
    assert cli.main(["fixture", "--output", str(target)]) == cli.EXIT_OK
    assert len(json.loads(target.read_text())["boards"]) == 10
    assert "easy" in capsys.readouterr().out


def test_boardtest_oracle_scores_ten(tmp_path, oracle_snapshots, capsys):
    out = tmp_path / "bt"
    code = cli.main(["boardtest", *oracle_snapshots, "--fixture", str(tmp_path / "f.json"), "--output-dir", str(out), "--json"])
    assert code == cli.EXIT_OK
    reports = json.loads(capsys.readouterr().out)
    assert [r["total_correct"] for r in reports] == [10, 10]
    assert (out / "boardtest.csv").exists()
    assert (tmp_path / "f.json").exists()


def test_boardtest_without_snapshots_fails(tmp_path):
    assert cli.main(["boardtest", "--fixture", str(tmp_path / "f.json")]) != cli.EXIT_OK


def test_boardtest_missing_snapshot_is_runtime_error(tmp_path):
    code = cli.main(["boardtest", str(tmp_path / "missing.jsonl"), "--fixture", str(tmp_path / "f.json")])
    assert code == cli.EXIT_RUNTIME


def test_boardtest_corrupt_snapshot_is_runtime_error(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"format_version": 1, "kind": "td"}\n')
    code = cli.main(["boardtest", str(bad), "--fixture", str(tmp_path / "f.json")])
    assert code == cli.EXIT_RUNTIME


def test_league_of_oracles(tmp_path, oracle_snapshots, capsys):
    out = tmp_path / "league"
    code = cli.main(["league", *oracle_snapshots, "--games-per-pair", "20", "--output-dir", str(out)])
    assert code == cli.EXIT_OK
    report = json.loads((out / "league.json").read_text())
    assert report["draws"][0][1] == 20
    assert sum(map(sum, report["wins"])) == 0
    assert (out / "league_wins.txt").exists()
    assert "starter win rate" in capsys.readouterr().out


def test_league_usage_errors(oracle_snapshots):
    assert cli.main(["league", oracle_snapshots[0]]) == cli.EXIT_USAGE
    assert cli.main(["league", *oracle_snapshots, "--games-per-pair", "7"]) == cli.EXIT_USAGE


def test_bad_arguments_exit_with_usage_code():
    with pytest.raises(SystemExit) as exc:
        cli.main(["league", "--games-per-pair", "many"])
    assert exc.value.code == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        cli.main(["dance"])
    assert exc.value.code == cli.EXIT_USAGE


def test_invalid_config_rejected_before_work(tmp_path):
    config = write_config(tmp_path, population_sizes=[3])
    out = tmp_path / "runs"
    assert cli.main(["train", "--config", str(config), "--output-dir", str(out)]) == cli.EXIT_USAGE
    assert not out.exists()
    assert cli.main(["train", "--config", str(tmp_path / "nope.json")]) == cli.EXIT_USAGE


def test_train_writes_snapshots(tmp_path):
    config = write_config(tmp_path)
    out = tmp_path / "runs"
    assert cli.main(["train", "--config", str(config), "--output-dir", str(out)]) == cli.EXIT_OK
    assert len(list((out / "modified_swiss" / "size-2" / "rep-0").glob("agent-*.jsonl"))) == 2
    assert len(list((out / "self_play" / "size-2" / "rep-0").glob("agent-*.jsonl"))) == 1


def test_output_dir_from_environment(tmp_path, monkeypatch):
    config = write_config(tmp_path, regimes=["self_play"])
    monkeypatch.setenv("SOCIALTTT_OUTPUT_DIR", str(tmp_path / "from-env"))
    get_settings.cache_clear()
    assert cli.main(["train", "--config", str(config)]) == cli.EXIT_OK
    assert (tmp_path / "from-env" / "self_play" / "size-2" / "rep-0" / "training.json").exists()


def test_seed_flag_changes_results(tmp_path):
    config = write_config(tmp_path, regimes=["self_play"])
    cli.main(["train", "--config", str(config), "--output-dir", str(tmp_path / "a")])
    cli.main(["train", "--config", str(config), "--output-dir", str(tmp_path / "b"), "--seed", "4"])
    path = "self_play/size-2/rep-0/agent-0.jsonl"
    assert (tmp_path / "a" / path).read_text() != (tmp_path / "b" / path).read_text()


def test_reproduce_twice_is_identical(tmp_path, capsys):
    config = write_config(tmp_path)
    for name in ("a", "b"):
        assert cli.main(["reproduce", "--config", str(config), "--output-dir", str(tmp_path / name)]) == cli.EXIT_OK
    assert "Social training report" in capsys.readouterr().out
    first = (tmp_path / "a" / "report" / "report.json").read_bytes()
    assert first == (tmp_path / "b" / "report" / "report.json").read_bytes()
