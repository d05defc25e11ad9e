"""
Evaluation protocols: the 10-board move-quality test and the all-pairs league.

All evaluation uses frozen policies (greedy, no learning, no exploration) and
never touches an agent's table or generator.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple
import hashlib
import json
import logging

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator

from .game_controller import GameRecord, StarterRule, play_training_game
from .players import Player
from .seeding import child_rng, make_rng, derive_seed
from .td_learning import Transition
from .tictactoe import (
    GameState,
    Mark,
    MinimaxOracle,
    apply_move,
    default_oracle,
    encode,
    legal_actions,
    outcome,
    reachable_states,
)

logger = logging.getLogger(__name__)

FIXTURE_VERSION = 1
COMMITTED_FIXTURE = Path(__file__).resolve().parents[2] / "configs" / "test_boards.json"
TIER_COUNTS = (5, 2, 3)
MIN_CHOICES = 3


class Difficulty(str, Enum):
    EASY = "easy"
    INTERMEDIATE = "intermediate"
    HARD = "hard"


class SkillLevel(str, Enum):
    BEGINNER = "beginner"
    INTERMEDIATE = "intermediate"
    ADVANCED = "advanced"


class FixtureError(ValueError):
    """Test-board fixture that is missing, malformed or disagrees with the oracle."""


class TestBoard(BaseModel):
    __test__ = False

    board: str = Field(min_length=9, max_length=9)
    to_move: Mark = Mark.CROSS
    correct_actions: List[int]
    difficulty: Difficulty
    description: str = ""

    @property
    def state(self) -> GameState:
        return GameState.from_string(self.board, self.to_move)

    @property
    def key(self) -> int:
        return encode(self.state)


class BoardFixture(BaseModel):
    format_version: int = FIXTURE_VERSION
    boards: List[TestBoard]


class LevelThresholds(BaseModel):
    intermediate_min: int = Field(default=5, ge=0, le=10)
    advanced_min: int = Field(default=8, ge=0, le=10)

    @model_validator(mode="after")
    def _check_order(self) -> "LevelThresholds":
        if self.intermediate_min > self.advanced_min:
            raise ValueError("intermediate_min cannot exceed advanced_min")
        return self


class BoardResult(BaseModel):
    board_index: int
    difficulty: Difficulty
    chosen: int
    correct: bool


class BoardTestReport(BaseModel):
    agent_id: int
    label: str = ""
    total_correct: int = Field(ge=0, le=10)
    by_difficulty: Dict[Difficulty, int]
    level: SkillLevel
    results: List[BoardResult] = Field(default_factory=list)


def _classify_board(state: GameState, oracle: MinimaxOracle) -> Optional[Tuple[Difficulty, int]]:
    evaluation = oracle.evaluate(state)
    if len(evaluation.best_actions) != 1:
        return None
    (action,) = evaluation.best_actions
    if evaluation.value == 1:
        if outcome(apply_move(state, action)).kind == "win":
            return Difficulty.EASY, action
        return Difficulty.HARD, action
    if evaluation.value == 0:
        # unique best at value 0: every other move loses
        return Difficulty.INTERMEDIATE, action
    return None


def _describe(difficulty: Difficulty, action: int) -> str:
    verbs = {
        Difficulty.EASY: "wins immediately",
        Difficulty.INTERMEDIATE: "is the only move that avoids losing",
        Difficulty.HARD: "forces a win on a later move",
    }
    return f"Cross to play ({difficulty.value}): cell {action} {verbs[difficulty]}"


def generate_test_boards(
    oracle: Optional[MinimaxOracle] = None,
    counts: Tuple[int, int, int] = TIER_COUNTS,
) -> List[TestBoard]:
    """First qualifying Cross-to-move positions per tier, in state-key order."""
    oracle = oracle or default_oracle()
    wanted = dict(zip((Difficulty.EASY, Difficulty.INTERMEDIATE, Difficulty.HARD), counts))
    found: Dict[Difficulty, List[TestBoard]] = {tier: [] for tier in wanted}

    for state in reachable_states((Mark.CROSS,)):
        if state.to_move is not Mark.CROSS or outcome(state).is_terminal:
            continue
        if len(legal_actions(state)) < MIN_CHOICES:
            continue
        classified = _classify_board(state, oracle)
        if classified is None:
            continue
        tier, action = classified
        if len(found[tier]) < wanted[tier]:
            found[tier].append(
                TestBoard(
                    board=state.to_string(),
                    to_move=state.to_move,
                    correct_actions=[action],
                    difficulty=tier,
                    description=_describe(tier, action),
                )
            )
        if all(len(found[t]) == wanted[t] for t in wanted):
            break

    for tier, boards in found.items():
        if len(boards) < wanted[tier]:
            raise FixtureError(f"Only {len(boards)} {tier.value} boards qualify, need {wanted[tier]}")

    return [board for tier in wanted for board in found[tier]]


def check_boards(boards: Sequence[TestBoard], oracle: Optional[MinimaxOracle] = None) -> None:
    """Raise FixtureError unless every board has a single oracle-confirmed answer."""
    oracle = oracle or default_oracle()
    for index, board in enumerate(boards):
        try:
            state = board.state
        except ValueError as e:
            raise FixtureError(f"Board {index} is invalid: {e}") from e
        classified = _classify_board(state, oracle)
        if classified is None or classified != (board.difficulty, board.correct_actions[0]):
            raise FixtureError(f"Board {index} ({board.board}) disagrees with the minimax oracle")


def fixture_digest(boards: Sequence[TestBoard]) -> str:
    """SHA-256 of the canonical JSON form of the boards."""
    payload = json.dumps([b.model_dump(mode="json") for b in boards], sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def save_fixture(boards: Sequence[TestBoard], path: Path) -> Path:
    """Write the boards as a versioned JSON fixture."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(BoardFixture(boards=list(boards)).model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(f"Wrote {len(boards)} test boards to {path}")
    return path


def load_fixture(path: Path, oracle: Optional[MinimaxOracle] = None) -> List[TestBoard]:
    """Read a fixture and check every board against the oracle."""
    path = Path(path)
    try:
        fixture = BoardFixture.model_validate_json(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except ValueError as e:
        raise FixtureError(f"Cannot parse board fixture {path}: {e}") from e
    if fixture.format_version != FIXTURE_VERSION:
        raise FixtureError(f"{path}: unsupported fixture version {fixture.format_version}")
    check_boards(fixture.boards, oracle)
    return fixture.boards


def load_or_generate_fixture(path: Optional[Path], oracle: Optional[MinimaxOracle] = None) -> List[TestBoard]:
    """Load ``path``, else the committed fixture, else generate; a missing ``path`` is written."""
    if path is not None and Path(path).exists():
        return load_fixture(path, oracle)
    if COMMITTED_FIXTURE.exists():
        boards = load_fixture(COMMITTED_FIXTURE, oracle)
    else:
        logger.warning(f"Committed fixture {COMMITTED_FIXTURE} not found, generating the boards")
        boards = generate_test_boards(oracle)
    if path is not None:
        save_fixture(boards, path)
    return boards


def classify_level(total_correct: int, thresholds: Optional[LevelThresholds] = None) -> SkillLevel:
    """Map a 0-10 board-test score to a skill level."""
    if not 0 <= total_correct <= 10:
        raise ValueError(f"Board-test score must lie in 0-10, got {total_correct}")
    thresholds = thresholds or LevelThresholds()
    if total_correct >= thresholds.advanced_min:
        return SkillLevel.ADVANCED
    if total_correct >= thresholds.intermediate_min:
        return SkillLevel.INTERMEDIATE
    return SkillLevel.BEGINNER


def run_board_test(
    player: Player,
    boards: Sequence[TestBoard],
    rng: Optional[np.random.Generator] = None,
    thresholds: Optional[LevelThresholds] = None,
    label: str = "",
) -> BoardTestReport:
    """One greedy try per board. Tie-breaks draw from ``rng`` (a fixed
    per-agent stream by default), never from the agent's training stream."""
    if rng is None:
        rng = make_rng(derive_seed(0, "boardtest", player.id))

    results = []
    by_difficulty = {tier: 0 for tier in Difficulty}
    for index, board in enumerate(boards):
        state = board.state
        chosen = player.choose_action(state, legal_actions(state), explore=False, rng=rng)
        correct = chosen in board.correct_actions
        if correct:
            by_difficulty[board.difficulty] += 1
        results.append(BoardResult(board_index=index, difficulty=board.difficulty, chosen=chosen, correct=correct))

    total = sum(by_difficulty.values())
    return BoardTestReport(
        agent_id=player.id,
        label=label,
        total_correct=total,
        by_difficulty=by_difficulty,
        level=classify_level(total, thresholds),
        results=results,
    )


def expected_random_score(boards: Sequence[TestBoard]) -> float:
    """Expected score of a uniformly random mover."""
    return sum(len(b.correct_actions) / len(legal_actions(b.state)) for b in boards)


class _Seat:
    """League-local identity around a frozen player."""

    def __init__(self, index: int, player: Player):
        self.id = index
        self.player = player
        self.episodes_trained = player.episodes_trained

    def begin_episode(self) -> None:
        pass

    def choose_action(self, state, legal, explore=False, rng=None) -> int:
        return self.player.choose_action(state, legal, False, rng)

    def observe(self, mark: Mark, transition: Transition) -> None:
        pass

    def finish_episode(self) -> None:
        pass


@dataclass
class WinMatrix:
    """wins[i][j]: games row agent i won against column agent j."""

    agents: List[int]
    labels: List[str]
    games_per_pair: int
    wins: np.ndarray
    draws: np.ndarray
    starter_wins: np.ndarray
    starter_games: np.ndarray
    records: List[GameRecord] = field(default_factory=list, repr=False)

    @classmethod
    def empty(cls, agents: List[int], labels: List[str], games_per_pair: int) -> "WinMatrix":
        n = len(agents)
        return cls(
            agents=agents,
            labels=labels,
            games_per_pair=games_per_pair,
            wins=np.zeros((n, n), dtype=np.int64),
            draws=np.zeros((n, n), dtype=np.int64),
            starter_wins=np.zeros(n, dtype=np.int64),
            starter_games=np.zeros(n, dtype=np.int64),
        )

    def accounting_errors(self) -> List[str]:
        """Messages for every broken accounting rule."""
        errors = []
        n = len(self.agents)
        if np.any(np.diag(self.wins)) or np.any(np.diag(self.draws)):
            errors.append("diagonal must be zero")
        if not np.array_equal(self.draws, self.draws.T):
            errors.append("draw matrix must be symmetric")
        for i in range(n):
            for j in range(i + 1, n):
                total = self.wins[i, j] + self.wins[j, i] + self.draws[i, j]
                if total != self.games_per_pair:
                    errors.append(f"pair ({self.labels[i]}, {self.labels[j]}) sums to {total}")
        return errors

    def validate(self) -> "WinMatrix":
        errors = self.accounting_errors()
        if errors:
            raise ValueError("WinMatrix accounting failed: " + "; ".join(errors))
        return self

    def wins_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.wins, index=self.labels, columns=self.labels)

    def draws_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.draws, index=self.labels, columns=self.labels)

    def starter_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"starter_wins": self.starter_wins, "starter_games": self.starter_games},
            index=self.labels,
        )

    def to_dict(self) -> Dict:
        return {
            "agents": self.agents,
            "labels": self.labels,
            "games_per_pair": self.games_per_pair,
            "wins": self.wins.tolist(),
            "draws": self.draws.tolist(),
            "starter_wins": self.starter_wins.tolist(),
            "starter_games": self.starter_games.tolist(),
        }


def _play_pair(
    i: int, j: int, seats: List[_Seat], games: int, rule: StarterRule, master_seed: int
) -> List[GameRecord]:
    a, b = seats[i], seats[j]
    records = []
    for game in range(games):
        rng = child_rng(master_seed, "league", i, j, game)
        if rule is StarterRule.ALTERNATE:
            starter = a.id if game % 2 == 0 else b.id
        else:
            starter = a.id if rng.integers(2) == 0 else b.id
        records.append(play_training_game(a, b, starter, learn=False, explore=False, round=game, rng=rng))
    return records


def run_league(
    players: Sequence[Player],
    games_per_pair: int = 5000,
    starter_rule: StarterRule = StarterRule.ALTERNATE,
    master_seed: int = 0,
    labels: Optional[Sequence[str]] = None,
    workers: int = 1,
    keep_records: bool = False,
) -> WinMatrix:
    """Every unordered pair plays ``games_per_pair`` frozen games.

    Each game draws from its own stream derived from (master_seed, pair,
    game index), so the matrix does not depend on execution order.
    """
    if len(players) < 2:
        raise ValueError("A league needs at least two players")
    if games_per_pair < 1:
        raise ValueError("games_per_pair must be positive")
    if starter_rule is StarterRule.ALTERNATE and games_per_pair % 2:
        raise ValueError("Alternating starters need an even games_per_pair")

    seats = [_Seat(index, player) for index, player in enumerate(players)]
    labels = list(labels) if labels is not None else [f"A{p.id}" for p in players]
    matrix = WinMatrix.empty([p.id for p in players], labels, games_per_pair)
    pairs = [(i, j) for i in range(len(seats)) for j in range(i + 1, len(seats))]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [
                executor.submit(_play_pair, i, j, seats, games_per_pair, starter_rule, master_seed)
                for i, j in pairs
            ]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [_play_pair(i, j, seats, games_per_pair, starter_rule, master_seed) for i, j in pairs]

    for (i, j), records in zip(pairs, outcomes):
        for record in records:
            matrix.starter_games[record.starter] += 1
            winner = record.winner
            if winner is None:
                matrix.draws[i, j] += 1
                matrix.draws[j, i] += 1
                continue
            loser = j if winner == i else i
            matrix.wins[winner, loser] += 1
            if winner == record.starter:
                matrix.starter_wins[winner] += 1
        if keep_records:
            matrix.records.extend(records)

    logger.info(
        f"League of {len(players)} players, {games_per_pair} games per pair: "
        f"{int(matrix.wins.sum())} decisive, {int(matrix.draws.sum()) // 2} drawn"
    )
    return matrix.validate()


def starter_advantage(matrix: WinMatrix) -> float:
    """Wins as starter divided by games as starter, over all agents."""
    games = int(matrix.starter_games.sum())
    if games == 0:
        return 0.0
    return float(matrix.starter_wins.sum()) / games


def decisive_starter_rate(matrix: WinMatrix) -> float:
    """Share of decisive games won by the player who moved first."""
    decisive = int(matrix.wins.sum())
    if decisive == 0:
        return 0.0
    return float(matrix.starter_wins.sum()) / decisive


def selfplay_differential(matrix: WinMatrix, selfplay_index: int) -> float:
    """Mean over social opponents of (social wins - self-play wins)."""
    others = [k for k in range(len(matrix.agents)) if k != selfplay_index]
    if not others:
        return 0.0
    diffs = [int(matrix.wins[k, selfplay_index]) - int(matrix.wins[selfplay_index, k]) for k in others]
    return float(np.mean(diffs))
