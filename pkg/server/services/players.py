"""
Players the game controller can seat: learning TD agents, the minimax
oracle and a uniform random mover.
"""

from typing import Dict, List, Optional, Protocol, runtime_checkable
import logging

import numpy as np

from .seeding import make_rng
from .td_learning import (
    AgentIdentity,
    EligibilityTraces,
    QTable,
    Transition,
    begin_episode,
    epsilon_at,
    greedy_action,
    select_action,
    td_update,
)
from .tictactoe import GameState, Mark, MinimaxOracle, default_oracle, encode

logger = logging.getLogger(__name__)


@runtime_checkable
class Player(Protocol):
    id: int
    episodes_trained: int

    def begin_episode(self) -> None: ...

    def choose_action(
        self,
        state: GameState,
        legal: List[int],
        explore: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> int: ...

    def observe(self, mark: Mark, transition: Transition) -> None: ...

    def finish_episode(self) -> None: ...


class TDAgent:
    """Tabular TD(lambda) learner with its own generator and one trace set per role."""

    kind = "td"

    def __init__(self, identity: AgentIdentity, q: Optional[QTable] = None, episodes_trained: int = 0):
        self.identity = identity
        self.q = q if q is not None else QTable()
        self.traces: Dict[Mark, EligibilityTraces] = {
            Mark.CROSS: EligibilityTraces(),
            Mark.NOUGHT: EligibilityTraces(),
        }
        self.rng = make_rng(identity.seed)
        self.episodes_trained = episodes_trained
        self._epsilon = self.epsilon

    @property
    def id(self) -> int:
        return self.identity.id

    @property
    def params(self):
        return self.identity.params

    @property
    def epsilon(self) -> float:
        return epsilon_at(self.identity.params, self.episodes_trained)

    def begin_episode(self) -> None:
        for traces in self.traces.values():
            begin_episode(traces)
        self._epsilon = self.epsilon

    def choose_action(
        self,
        state: GameState,
        legal: List[int],
        explore: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> int:
        generator = rng if rng is not None else self.rng
        key = encode(state)
        if explore:
            return select_action(self.q, key, legal, self._epsilon, generator)
        return greedy_action(self.q, key, legal, generator)

    def observe(self, mark: Mark, transition: Transition) -> None:
        td_update(self.q, self.traces[mark], transition, self.identity.params)

    def finish_episode(self) -> None:
        self.episodes_trained += 1

    def __repr__(self) -> str:
        p = self.identity.params
        return (
            f"TDAgent(id={self.id}, alpha={p.alpha:.3f}, gamma={p.gamma:.3f}, "
            f"lambda={p.lambda_:.3f}, episodes={self.episodes_trained}, entries={len(self.q)})"
        )


class OraclePlayer:
    """Plays a uniformly chosen minimax-best move."""

    kind = "oracle"

    def __init__(self, id: int = 0, seed: int = 0, oracle: Optional[MinimaxOracle] = None):
        self.id = id
        self.seed = seed
        self.oracle = oracle or default_oracle()
        self.rng = make_rng(seed)
        self.episodes_trained = 0

    def begin_episode(self) -> None:
        pass

    def choose_action(
        self,
        state: GameState,
        legal: List[int],
        explore: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> int:
        generator = rng if rng is not None else self.rng
        best = sorted(self.oracle.evaluate(state).best_actions)
        return best[int(generator.integers(len(best)))]

    def observe(self, mark: Mark, transition: Transition) -> None:
        pass

    def finish_episode(self) -> None:
        pass


class RandomPlayer:
    kind = "random"

    def __init__(self, id: int = 0, seed: int = 0):
        self.id = id
        self.seed = seed
        self.rng = make_rng(seed)
        self.episodes_trained = 0

    def begin_episode(self) -> None:
        pass

    def choose_action(
        self,
        state: GameState,
        legal: List[int],
        explore: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> int:
        generator = rng if rng is not None else self.rng
        return legal[int(generator.integers(len(legal)))]

    def observe(self, mark: Mark, transition: Transition) -> None:
        pass

    def finish_episode(self) -> None:
        pass
