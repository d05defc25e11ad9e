"""
Tic-Tac-Toe rules, state encoding and the minimax oracle.

Cells are indexed row-major 0-8 from the top-left corner. Marks are roles:
Cross is whichever player moves first in a given game.
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple
from collections import deque
import logging
import threading

logger = logging.getLogger(__name__)

BOARD_CELLS = 9
TO_MOVE_OFFSET = 3**BOARD_CELLS
KEY_SPACE = 2 * TO_MOVE_OFFSET

LINES: Tuple[Tuple[int, int, int], ...] = (
    (0, 1, 2),
    (3, 4, 5),
    (6, 7, 8),
    (0, 3, 6),
    (1, 4, 7),
    (2, 5, 8),
    (0, 4, 8),
    (2, 4, 6),
)

# The 8 board symmetries as cell permutations: new_cells[i] = cells[perm[i]]
SYMMETRIES: Tuple[Tuple[int, ...], ...] = (
    (0, 1, 2, 3, 4, 5, 6, 7, 8),
    (6, 3, 0, 7, 4, 1, 8, 5, 2),
    (8, 7, 6, 5, 4, 3, 2, 1, 0),
    (2, 5, 8, 1, 4, 7, 0, 3, 6),
    (2, 1, 0, 5, 4, 3, 8, 7, 6),
    (6, 7, 8, 3, 4, 5, 0, 1, 2),
    (0, 3, 6, 1, 4, 7, 2, 5, 8),
    (8, 5, 2, 7, 4, 1, 6, 3, 0),
)


class Mark(IntEnum):
    EMPTY = 0
    CROSS = 1
    NOUGHT = 2

    @property
    def opponent(self) -> "Mark":
        if self is Mark.EMPTY:
            raise ValueError("EMPTY has no opponent")
        return Mark.NOUGHT if self is Mark.CROSS else Mark.CROSS

    @property
    def symbol(self) -> str:
        return ".XO"[self]


class InvalidStateError(ValueError):
    """Board contents that no legal game can produce."""


class IllegalMoveError(ValueError):
    """Move onto an occupied or out-of-range cell."""


class TerminalStateError(ValueError):
    """Operation that needs an ongoing game was given a finished one."""


@dataclass(frozen=True)
class Outcome:
    """Game result: ``kind`` is 'ongoing', 'win' or 'draw'."""

    kind: str
    winner: Mark = Mark.EMPTY

    @property
    def is_terminal(self) -> bool:
        return self.kind != "ongoing"

    def __str__(self) -> str:
        if self.kind == "win":
            return f"win({self.winner.name.lower()})"
        return self.kind


ONGOING = Outcome("ongoing")
DRAW = Outcome("draw")
CROSS_WINS = Outcome("win", Mark.CROSS)
NOUGHT_WINS = Outcome("win", Mark.NOUGHT)


def win_for(mark: Mark) -> Outcome:
    return CROSS_WINS if mark is Mark.CROSS else NOUGHT_WINS


@dataclass(frozen=True)
class GameState:
    cells: Tuple[Mark, ...]
    to_move: Mark = Mark.CROSS

    @classmethod
    def empty(cls, to_move: Mark = Mark.CROSS) -> "GameState":
        return cls(cells=(Mark.EMPTY,) * BOARD_CELLS, to_move=to_move)

    @classmethod
    def from_string(cls, board: str, to_move: Mark = Mark.CROSS) -> "GameState":
        """Parse a 9-character board such as ``'XX.OO....'`` and validate it."""
        board = board.replace("\n", "").replace(" ", "").replace("/", "")
        if len(board) != BOARD_CELLS:
            raise InvalidStateError(f"Board string needs 9 cells, got {len(board)}")
        lookup = {".": Mark.EMPTY, "-": Mark.EMPTY, "X": Mark.CROSS, "O": Mark.NOUGHT}
        try:
            cells = tuple(lookup[ch.upper()] for ch in board)
        except KeyError as e:
            raise InvalidStateError(f"Unknown cell symbol {e}") from None
        state = cls(cells=cells, to_move=to_move)
        validate(state)
        return state

    def to_string(self) -> str:
        return "".join(cell.symbol for cell in self.cells)

    def render(self) -> str:
        rows = [self.to_string()[i : i + 3] for i in (0, 3, 6)]
        return "\n".join(rows) + f"\n{self.to_move.symbol} to move"


def _line_winners(cells: Sequence[Mark]) -> set:
    winners = set()
    for a, b, c in LINES:
        mark = cells[a]
        if mark is not Mark.EMPTY and mark == cells[b] == cells[c]:
            winners.add(mark)
    return winners


def validate(state: GameState) -> None:
    """Raise InvalidStateError unless the state can occur in a legal game."""
    if len(state.cells) != BOARD_CELLS:
        raise InvalidStateError(f"Expected 9 cells, got {len(state.cells)}")
    if state.to_move is Mark.EMPTY:
        raise InvalidStateError("to_move cannot be EMPTY")

    crosses = state.cells.count(Mark.CROSS)
    noughts = state.cells.count(Mark.NOUGHT)
    diff = crosses - noughts
    if diff not in (-1, 0, 1):
        raise InvalidStateError(f"Piece counts {crosses}/{noughts} cannot alternate")
    if diff == 1 and state.to_move is not Mark.NOUGHT:
        raise InvalidStateError("Cross has moved more often, Nought must be to move")
    if diff == -1 and state.to_move is not Mark.CROSS:
        raise InvalidStateError("Nought has moved more often, Cross must be to move")

    winners = _line_winners(state.cells)
    if len(winners) > 1:
        raise InvalidStateError("Both marks hold a completed line")
    if winners and state.to_move in winners:
        raise InvalidStateError("The side that just completed a line cannot be to move")


def outcome(state: GameState) -> Outcome:
    """Terminal verdict of a state."""
    cells = state.cells
    for a, b, c in LINES:
        mark = cells[a]
        if mark is not Mark.EMPTY and mark == cells[b] == cells[c]:
            return win_for(mark)
    if Mark.EMPTY not in cells:
        return DRAW
    return ONGOING


def legal_actions(state: GameState) -> List[int]:
    """Empty-cell indices in ascending order."""
    if outcome(state).is_terminal:
        raise TerminalStateError("No legal actions in a finished game")
    return [i for i, cell in enumerate(state.cells) if cell is Mark.EMPTY]


def apply_move(state: GameState, action: int) -> GameState:
    """State after the mover takes action."""
    if not 0 <= action < BOARD_CELLS:
        raise IllegalMoveError(f"Cell {action} is off the board")
    if outcome(state).is_terminal:
        raise TerminalStateError(f"Cannot play cell {action}: the game is over")
    if state.cells[action] is not Mark.EMPTY:
        raise IllegalMoveError(f"Cell {action} is already occupied")
    cells = list(state.cells)
    cells[action] = state.to_move
    return GameState(cells=tuple(cells), to_move=state.to_move.opponent)


def reward(result: Outcome, perspective: Mark) -> float:
    """Final reward for one mark: 1 for a win, -1 for a loss, else 0."""
    if result.kind != "win":
        return 0.0
    return 1.0 if result.winner is perspective else -1.0


def encode(state: GameState) -> int:
    """Base-3 key with cell 0 least significant; Nought to move adds 3**9."""
    key = 0
    for i in range(BOARD_CELLS - 1, -1, -1):
        key = key * 3 + int(state.cells[i])
    if state.to_move is Mark.NOUGHT:
        key += TO_MOVE_OFFSET
    return key


def decode(key: int) -> GameState:
    """Inverse of encode; rejects keys outside the key space or of impossible boards."""
    if not 0 <= key < KEY_SPACE:
        raise InvalidStateError(f"State key {key} is outside [0, {KEY_SPACE})")
    to_move = Mark.NOUGHT if key >= TO_MOVE_OFFSET else Mark.CROSS
    rest = key % TO_MOVE_OFFSET
    cells = []
    for _ in range(BOARD_CELLS):
        rest, trit = divmod(rest, 3)
        cells.append(Mark(trit))
    state = GameState(cells=tuple(cells), to_move=to_move)
    validate(state)
    return state


def transform(state: GameState, permutation: Sequence[int]) -> GameState:
    """Relabel cells by a symmetry permutation."""
    return GameState(
        cells=tuple(state.cells[i] for i in permutation), to_move=state.to_move
    )


def reachable_states(starters: Sequence[Mark] = (Mark.CROSS, Mark.NOUGHT)) -> List[GameState]:
    """Breadth-first enumeration of every state reachable from the empty board,
    terminal states included, sorted by state key."""
    seen: Dict[int, GameState] = {}
    queue = deque()
    for starter in starters:
        start = GameState.empty(starter)
        seen[encode(start)] = start
        queue.append(start)

    while queue:
        state = queue.popleft()
        if outcome(state).is_terminal:
            continue
        for action in legal_actions(state):
            child = apply_move(state, action)
            key = encode(child)
            if key not in seen:
                seen[key] = child
                queue.append(child)

    return [seen[key] for key in sorted(seen)]


def iter_playout(actions: Sequence[int], starter: Mark = Mark.CROSS) -> Iterator[GameState]:
    """Yield successive states while playing the given cells in order."""
    state = GameState.empty(starter)
    yield state
    for action in actions:
        state = apply_move(state, action)
        yield state


@dataclass(frozen=True)
class Evaluation:
    value: int
    best_actions: FrozenSet[int]


class MinimaxOracle:
    """Exact game values under alternating optimal play.

    Every state reachable from either empty board is solved on construction,
    so lookups afterwards are read-only. States outside that set are solved
    lazily under a lock.
    """

    def __init__(self, precompute: bool = True):
        self._memo: Dict[int, Evaluation] = {}
        self._lock = threading.Lock()
        if precompute:
            for starter in (Mark.CROSS, Mark.NOUGHT):
                self._solve(GameState.empty(starter))
            logger.info(f"Minimax oracle solved {len(self._memo)} ongoing states")

    def __len__(self) -> int:
        return len(self._memo)

    def evaluate(self, state: GameState) -> Evaluation:
        """Memoized value and best actions for the side to move."""
        if outcome(state).is_terminal:
            raise TerminalStateError("Minimax needs an ongoing state")
        cached = self._memo.get(encode(state))
        if cached is not None:
            return cached
        with self._lock:
            return self._solve(state)

    def minimax(self, state: GameState) -> Tuple[int, FrozenSet[int]]:
        result = self.evaluate(state)
        return result.value, result.best_actions

    def action_values(self, state: GameState) -> Dict[int, int]:
        """Value of each legal move from the mover's point of view."""
        return {action: self._child_value(state, action) for action in legal_actions(state)}

    def _child_value(self, state: GameState, action: int) -> int:
        child = apply_move(state, action)
        result = outcome(child)
        if result.kind == "win":
            return 1
        if result.kind == "draw":
            return 0
        return -self._solve(child).value

    def _solve(self, state: GameState) -> Evaluation:
        key = encode(state)
        cached = self._memo.get(key)
        if cached is not None:
            return cached

        values = {action: self._child_value(state, action) for action in legal_actions(state)}
        best = max(values.values())
        evaluation = Evaluation(
            value=best,
            best_actions=frozenset(a for a, v in values.items() if v == best),
        )
        self._memo[key] = evaluation
        return evaluation


_default_oracle: Optional[MinimaxOracle] = None
_default_lock = threading.Lock()


def default_oracle() -> MinimaxOracle:
    """Process-wide oracle, built once."""
    global _default_oracle
    with _default_lock:
        if _default_oracle is None:
            _default_oracle = MinimaxOracle()
        return _default_oracle
