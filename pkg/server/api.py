from fastapi import APIRouter, HTTPException
from pathlib import Path
from typing import Dict, List, Optional
import logging

from pydantic import BaseModel, Field, ValidationError

from services.evaluation import BoardTestReport, FixtureError, TestBoard, load_or_generate_fixture, run_board_test
from services.experiment_runner import boardtest_snapshots, league_snapshots
from services.game_controller import PopulationConfig, Regime, RoundSummary, StarterRule, train_population
from services.reports import LeagueReport
from services.settings import get_settings
from services.snapshots import SnapshotFormatError, save_snapshot
from services.tictactoe import InvalidStateError, decode, default_oracle, legal_actions, outcome

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/api", tags=["Training"])

# Request-sized training only; full experiments go through the CLI.
MAX_API_EPISODES = 20000


class TrainRequest(BaseModel):
    regime: Regime = Regime.MODIFIED_SWISS
    size: int = Field(default=4, ge=2, le=32)
    episodes_per_agent: int = Field(default=2000, ge=0, le=MAX_API_EPISODES)
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    starter_rule: StarterRule = StarterRule.RANDOM
    save_snapshots: bool = False


class TrainResponse(BaseModel):
    regime: Regime
    master_seed: int
    episodes: Dict[int, int]
    rounds: List[RoundSummary]
    board_reports: List[BoardTestReport]
    snapshots: List[str] = Field(default_factory=list)


class SnapshotRequest(BaseModel):
    snapshots: List[str]


class LeagueRequest(SnapshotRequest):
    games_per_pair: int = Field(default=5000, ge=1)
    starter_rule: StarterRule = StarterRule.ALTERNATE
    master_seed: int = Field(default=0, ge=0)


def _boards() -> List[TestBoard]:
    try:
        return load_or_generate_fixture(get_settings().resolved_fixture_path)
    except FixtureError as e:
        raise HTTPException(status_code=500, detail=f"Board fixture is invalid: {str(e)}")


def _resolve(paths: List[str]) -> List[Path]:
    root = get_settings().output_dir
    resolved = []
    for raw in paths:
        path = Path(raw)
        if not path.is_absolute():
            path = root / path
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"Snapshot not found: {raw}")
        resolved.append(path)
    return resolved


@router.get("/boards")
async def get_boards():
    boards = _boards()
    return {"count": len(boards), "boards": [b.model_dump(mode="json") for b in boards]}


@router.get("/state/{key}")
async def get_state(key: int):
    try:
        state = decode(key)
    except InvalidStateError as e:
        raise HTTPException(status_code=400, detail=str(e))

    result = outcome(state)
    info = {
        "key": key,
        "board": state.to_string(),
        "to_move": state.to_move.symbol,
        "outcome": str(result),
        "legal_actions": [],
        "action_values": {},
    }
    if not result.is_terminal:
        info["legal_actions"] = legal_actions(state)
        info["action_values"] = default_oracle().action_values(state)
    return info


@router.post("/train", response_model=TrainResponse)
def train(request: TrainRequest):
    """Train a small population and board-test every agent."""
    try:
        config = PopulationConfig(
            size=request.size,
            regime=request.regime,
            episodes_per_agent=request.episodes_per_agent,
            master_seed=request.master_seed,
            starter_rule=request.starter_rule,
        )
    except ValidationError as e:
        raise HTTPException(status_code=400, detail=str(e))

    result = train_population(config)
    boards = _boards()
    response = TrainResponse(
        regime=request.regime,
        master_seed=request.master_seed,
        episodes={a.id: a.episodes_trained for a in result.agents},
        rounds=result.rounds,
        board_reports=[run_board_test(a, boards) for a in result.agents],
    )
    if request.save_snapshots:
        directory = get_settings().output_dir / "api" / request.regime.value / f"seed-{request.master_seed}"
        for agent in result.agents:
            path = save_snapshot(agent, directory / f"agent-{agent.id}.jsonl", label=f"api/{request.regime.value}/agent-{agent.id}")
            response.snapshots.append(str(path))
    logger.info(f"API training {request.regime.value} size {request.size}: {len(result.records)} games")
    return response


@router.post("/boardtest", response_model=List[BoardTestReport])
def boardtest(request: SnapshotRequest):
    """Board-test snapshot files."""
    if not request.snapshots:
        raise HTTPException(status_code=400, detail="No snapshots given")
    paths = _resolve(request.snapshots)
    try:
        return boardtest_snapshots(paths, _boards())
    except SnapshotFormatError as e:
        raise HTTPException(status_code=400, detail=str(e))


@router.post("/league", response_model=LeagueReport)
def league(request: LeagueRequest):
    """League between snapshot files."""
    if len(request.snapshots) < 2:
        raise HTTPException(status_code=400, detail="A league needs at least two snapshots")
    paths = _resolve(request.snapshots)
    try:
        _, report = league_snapshots(
            paths,
            games_per_pair=request.games_per_pair,
            starter_rule=request.starter_rule,
            master_seed=request.master_seed,
            workers=get_settings().workers,
        )
    except (SnapshotFormatError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    return report
