import json

import pytest

from services.evaluation import generate_test_boards, run_board_test
from services.game_controller import PopulationConfig, Regime, train_population
from services.players import OraclePlayer, RandomPlayer, TDAgent
from services.snapshots import (
    SNAPSHOT_VERSION,
    SnapshotFormatError,
    SnapshotHeader,
    load_snapshot,
    load_snapshots,
    parse_snapshot,
    read_label,
    save_snapshot,
    serialize_snapshot,
    snapshot_digest,
)
from services.td_learning import AgentIdentity, Hyperparameters


@pytest.fixture(scope="module")
def agent():
    config = PopulationConfig(size=2, regime=Regime.ROUND_ROBIN, episodes_per_agent=200, master_seed=3)
    return train_population(config).agents[0]


def test_round_trip_is_lossless(tmp_path, agent):
    path = save_snapshot(agent, tmp_path / "a.jsonl", label="round_robin/size-2/rep-0/agent-0")
    loaded = load_snapshot(path)
    assert isinstance(loaded, TDAgent)
    assert loaded.identity == agent.identity
    assert loaded.episodes_trained == agent.episodes_trained
    assert loaded.q == agent.q
    assert serialize_snapshot(loaded, "round_robin/size-2/rep-0/agent-0") == path.read_text()
    assert snapshot_digest(loaded) == snapshot_digest(agent)


def test_round_trip_preserves_greedy_behaviour(tmp_path, agent):
    boards = generate_test_boards()
    loaded = load_snapshot(save_snapshot(agent, tmp_path / "a.jsonl"))
    assert run_board_test(loaded, boards).results == run_board_test(agent, boards).results


def test_full_precision_values(tmp_path):
    player = TDAgent(_identity())
    player.q.set(5, 4, 0.1 + 0.2)
    player.q.set(0, 0, -1e-17)
    loaded = load_snapshot(save_snapshot(player, tmp_path / "p.jsonl"))
    assert loaded.q.get(5, 4) == 0.1 + 0.2
    assert loaded.q.get(0, 0) == -1e-17


def _identity():
    return AgentIdentity(id=7, params=Hyperparameters(alpha=0.25, gamma=0.97, lambda_=0.95), seed=2**64 - 1)


def test_file_layout(tmp_path, agent):
    lines = save_snapshot(agent, tmp_path / "a.jsonl", label="x").read_text().splitlines()
    header = json.loads(lines[0])
    assert header["format_version"] == SNAPSHOT_VERSION
    assert header["kind"] == "td"
    assert header["identity"]["params"]["lambda"] == agent.identity.params.lambda_
    assert header["entries"] == len(lines) - 1
    triples = [tuple(json.loads(line)[:2]) for line in lines[1:]]
    assert triples == sorted(triples)


@pytest.mark.parametrize("player", [OraclePlayer(id=4, seed=9), RandomPlayer(id=2, seed=5)])
def test_pseudo_players_round_trip(tmp_path, player):
    loaded = load_snapshot(save_snapshot(player, tmp_path / "p.jsonl"))
    assert type(loaded) is type(player)
    assert loaded.id == player.id and loaded.seed == player.seed


def test_labels(tmp_path, agent):
    labelled = save_snapshot(agent, tmp_path / "a.jsonl", label="modified_swiss/size-4/rep-1/agent-0")
    plain = save_snapshot(agent, tmp_path / "agent-0.jsonl")
    assert read_label(labelled) == "modified_swiss/size-4/rep-1/agent-0"
    assert read_label(plain) == "agent-0"
    assert len(load_snapshots([labelled, plain])) == 2


def test_unknown_version_rejected():
    header = SnapshotHeader(format_version=SNAPSHOT_VERSION + 1, kind="random").model_dump_json()
    with pytest.raises(SnapshotFormatError):
        parse_snapshot(header + "\n")


@pytest.mark.parametrize(
    "body",
    [
        "",
        "not json\n",
        SnapshotHeader(kind="td").model_dump_json() + "\n",
    ],
)
def test_malformed_snapshots_rejected(body):
    with pytest.raises(SnapshotFormatError):
        parse_snapshot(body)


def test_entry_count_and_bad_rows_rejected(agent):
    text = serialize_snapshot(agent)
    lines = text.splitlines()
    with pytest.raises(SnapshotFormatError):
        parse_snapshot("\n".join(lines[:-1]) + "\n")
    with pytest.raises(SnapshotFormatError):
        parse_snapshot("\n".join(lines[:-1] + ["[1, 2]"]) + "\n")


def test_missing_file_raises(tmp_path):
    with pytest.raises(OSError):
        load_snapshot(tmp_path / "nope.jsonl")
