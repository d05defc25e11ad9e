"""
API tests against the FastAPI app through TestClient; no running server needed.
"""
import inspect

import pytest
from fastapi.testclient import TestClient

from services.players import OraclePlayer
from services.settings import get_settings
from services.snapshots import save_snapshot


@pytest.fixture
def client(tmp_path, monkeypatch):
    monkeypatch.setenv("SOCIALTTT_OUTPUT_DIR", str(tmp_path / "runs"))
    monkeypatch.setenv("SOCIALTTT_FIXTURE_PATH", str(tmp_path / "boards.json"))
    get_settings.cache_clear()
    import main

    yield TestClient(main.app)
    get_settings.cache_clear()


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"
    assert client.get("/").json()["message"] == "Social Tic-Tac-Toe Trainer API"


def test_boards(client, tmp_path):
    data = client.get("/api/boards").json()
    assert data["count"] == 10
    assert [b["difficulty"] for b in data["boards"]].count("hard") == 3
    assert (tmp_path / "boards.json").exists()


def test_state_lookup(client):
    data = client.get("/api/state/0").json()
    assert data["board"] == "........."
    assert data["to_move"] == "X"
    assert data["legal_actions"] == list(range(9))
    assert set(data["action_values"].values()) == {0}


def test_invalid_state_rejected(client):
    assert client.get(f"/api/state/{3 ** 10}").status_code == 400
    assert client.get("/api/state/-1").status_code == 400


def test_train_small_population(client, tmp_path):
    response = client.post(
        "/api/train",
        json={"regime": "modified_swiss", "size": 4, "episodes_per_agent": 20, "master_seed": 5, "save_snapshots": True},
    )
    assert response.status_code == 200
    data = response.json()
    assert set(data["episodes"].values()) == {20}
    assert len(data["board_reports"]) == 4
    assert len(data["snapshots"]) == 4

    board = client.post("/api/boardtest", json={"snapshots": data["snapshots"][:2]})
    assert board.status_code == 200
    assert len(board.json()) == 2

    league = client.post("/api/league", json={"snapshots": data["snapshots"], "games_per_pair": 10})
    assert league.status_code == 200
    assert len(league.json()["labels"]) == 4


def test_train_rejects_bad_population(client):
    assert client.post("/api/train", json={"regime": "modified_swiss", "size": 5}).status_code == 400
    assert client.post("/api/train", json={"episodes_per_agent": 10 ** 6}).status_code == 422


def test_train_is_reproducible(client):
    body = {"regime": "round_robin", "size": 3, "episodes_per_agent": 10, "master_seed": 9}
    first = client.post("/api/train", json=body).json()
    second = client.post("/api/train", json=body).json()
    assert first == second


def test_snapshot_endpoints_validate_input(client, tmp_path):
    assert client.post("/api/boardtest", json={"snapshots": []}).status_code == 400
    assert client.post("/api/boardtest", json={"snapshots": ["missing.jsonl"]}).status_code == 404

    oracle = save_snapshot(OraclePlayer(id=0), tmp_path / "runs" / "oracle.jsonl")
    assert client.post("/api/league", json={"snapshots": [str(oracle)]}).status_code == 400
    odd = client.post("/api/league", json={"snapshots": ["oracle.jsonl", str(oracle)], "games_per_pair": 3})
    assert odd.status_code == 400

    bad = tmp_path / "runs" / "bad.jsonl"
    bad.write_text("not a snapshot\n")
    assert client.post("/api/boardtest", json={"snapshots": ["bad.jsonl"]}).status_code == 400

    draws = client.post("/api/league", json={"snapshots": ["oracle.jsonl", str(oracle)], "games_per_pair": 4})
    assert draws.json()["draws"][0][1] == 4


def test_cpu_bound_routes_run_in_threadpool():
    import api

    for route in (api.train, api.boardtest, api.league):
        assert not inspect.iscoroutinefunction(route)
